#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpt {

// Invalid model, distribution, partition or argument. The CLI maps this
// class to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative or series computation did not reach its tolerance. Carries
// whatever residual was achieved in the message. CLI exit code 3.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Monte Carlo trajectories hit an event or population cap before finishing.
class CensoringError : public std::runtime_error {
public:
    CensoringError(const std::string& what, std::size_t censored)
        : std::runtime_error(what), censored_(censored) {}

    std::size_t censored() const noexcept { return censored_; }

private:
    std::size_t censored_;
};

}  // namespace fpt
