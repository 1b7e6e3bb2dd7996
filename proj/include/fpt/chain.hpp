#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fpt/defaults.hpp"

namespace fpt {

struct RateTriple {
    std::string from;
    std::string to;
    double rate = 0.0;
};

/// One off-diagonal entry of a sparse rate row, column as a dense index.
struct RateEntry {
    std::size_t col = 0;
    double rate = 0.0;
};

/// Conservative q-matrix over a labeled finite state space with a designated
/// absorbing target set D. Only off-diagonal rates are stored; the diagonal
/// is implied, so every row sums to zero by construction. Instances are
/// immutable after construction and safe to share across threads.
class Generator {
public:
    /// Validates and builds. Throws ValidationError on duplicate states,
    /// unknown labels, self-loops, negative or non-finite rates, duplicate
    /// (from, to) pairs, empty D, or D covering the whole space.
    static Generator create(std::vector<std::string> states,
                            const std::vector<std::string>& target,
                            const std::vector<RateTriple>& rates);

    std::size_t size() const noexcept { return states_.size(); }
    std::size_t e_size() const noexcept { return e_index_.size(); }

    const std::vector<std::string>& states() const noexcept { return states_; }
    const std::string& label(std::size_t s) const { return states_[s]; }
    std::optional<std::size_t> index_of(std::string_view label) const;

    bool is_target(std::size_t s) const { return is_target_[s]; }
    const std::vector<std::size_t>& target_indices() const noexcept { return target_; }

    /// Dense index of state s within E (states in document order with D
    /// removed). Only valid when !is_target(s).
    std::size_t e_index_of(std::size_t s) const { return e_of_s_[s]; }
    /// Original state index of the i-th E state.
    const std::vector<std::size_t>& e_indices() const noexcept { return e_index_; }

    /// Off-diagonal entries of row s, columns as state indices.
    const std::vector<RateEntry>& row(std::size_t s) const { return rows_[s]; }
    /// Total exit rate q_s = -q_ss (compensated sum of the off-diagonals).
    double exit_rate(std::size_t s) const { return exit_rate_[s]; }

    /// True when the directed graph of the restriction to E is strongly
    /// connected. Validated on demand, not at construction.
    bool e_restriction_irreducible() const;
    /// Throws ValidationError when the E-restriction is reducible.
    void require_e_irreducible() const;

private:
    Generator() = default;

    std::vector<std::string> states_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<bool> is_target_;
    std::vector<std::size_t> target_;
    std::vector<std::size_t> e_index_;  // E position -> state index
    std::vector<std::size_t> e_of_s_;   // state index -> E position (or npos)
    std::vector<std::vector<RateEntry>> rows_;
    std::vector<double> exit_rate_;
};

/// The q-matrix of the chain killed at its first passage into D, over
/// E ∪ {Δ}. E states keep their within-E rates, all mass headed for D is
/// collected into the killing rate eta, and Δ is absorbing. Row i sums to
/// zero with q_{iΔ} = eta_i. Immutable.
class KilledGenerator {
public:
    std::size_t e_size() const noexcept { return eta_.size(); }
    /// Index of the cemetery state in vectors over E ∪ {Δ}.
    std::size_t delta_index() const noexcept { return eta_.size(); }

    const Generator& base() const noexcept { return base_; }
    const std::string& e_label(std::size_t i) const { return base_.label(base_.e_indices()[i]); }

    /// Killing rate eta_i = sum of row i's rates into D.
    double eta(std::size_t i) const { return eta_[i]; }
    /// Total exit rate q_i = -q^T_ii (within-E rates plus eta_i).
    double exit_rate(std::size_t i) const { return exit_[i]; }
    /// Within-E off-diagonal entries of row i, columns as E indices.
    const std::vector<RateEntry>& row(std::size_t i) const { return rows_[i]; }

    /// Uniformization rate Λ ≥ max_i q_i.
    double lambda() const noexcept { return lambda_; }

    friend KilledGenerator build_killed(const Generator&, double);

private:
    explicit KilledGenerator(Generator base) : base_(std::move(base)) {}

    Generator base_;
    std::vector<double> eta_;
    std::vector<double> exit_;
    std::vector<std::vector<RateEntry>> rows_;
    double lambda_ = 1.0;
};

/// Builds the killed chain. Λ is lambda_multiplier · max_i q_i (or 1 when
/// every rate is zero); the multiplier must be ≥ 1.
KilledGenerator build_killed(const Generator& gen, double lambda_multiplier = 1.0);

/// Probability vector over E ∪ {Δ}, Δ stored last. User-supplied initial
/// laws never charge Δ; transient results may. Entries are nonnegative and
/// sum to 1 within 1e-12.
class Distribution {
public:
    /// An initial law from masses over E (Δ mass zero). Validates
    /// nonnegativity and normalization.
    static Distribution over_e(std::vector<double> e_mass);
    /// Scales nonnegative weights over E to total mass 1.
    static Distribution normalized(std::vector<double> e_weights);
    static Distribution uniform(std::size_t n_e);
    static Distribution point(std::size_t n_e, std::size_t e_index);
    /// A full vector over E ∪ {Δ} (Δ last), e.g. a transient result.
    static Distribution raw(std::vector<double> full_mass);

    std::size_t e_size() const noexcept { return mass_.size() - 1; }
    double operator[](std::size_t i) const { return mass_[i]; }
    double delta_mass() const noexcept { return mass_.back(); }
    std::span<const double> mass() const noexcept { return mass_; }
    std::span<const double> e_mass() const noexcept {
        return {mass_.data(), mass_.size() - 1};
    }

private:
    explicit Distribution(std::vector<double> mass) : mass_(std::move(mass)) {}
    std::vector<double> mass_;
};

/// Strictly increasing list of nonnegative times.
class TimeGrid {
public:
    static TimeGrid of(std::vector<double> times);
    static TimeGrid linear(double a, double b, std::size_t n);
    /// Geometrically spaced; requires a > 0.
    static TimeGrid geometric(double a, double b, std::size_t n);

    std::span<const double> times() const noexcept { return times_; }
    std::size_t size() const noexcept { return times_.size(); }
    double operator[](std::size_t k) const { return times_[k]; }

private:
    explicit TimeGrid(std::vector<double> t) : times_(std::move(t)) {}
    std::vector<double> times_;
};

struct TransientOptions {
    std::size_t max_terms = defaults::max_series_terms;
};

/// μ P^T(t) by uniformization: Poisson-weighted powers of K = I + Q^T/Λ,
/// truncated when the Poisson tail mass drops below 1e-14. The result is a
/// probability vector over E ∪ {Δ} (Δ mass may be positive).
Distribution transient(const KilledGenerator& kg, const Distribution& mu, double t,
                       const TransientOptions& opt = {});

/// P_μ(T > t) = 1 - (μ P^T(t))_Δ.
double survival(const KilledGenerator& kg, const Distribution& mu, double t,
                const TransientOptions& opt = {});

struct DiffCondition {
    enum class Verdict { sufficient, unknown };
    Verdict verdict = Verdict::unknown;
    /// The computed value of Σ q_i μ_i, reported so callers working with
    /// truncations of countable chains can judge stability themselves.
    double weighted_exit_rate = 0.0;
};

/// Checks the sufficient differentiability condition Σ q_i μ_i < ∞. Finite
/// chains always come back `sufficient`; the check never claims violation.
DiffCondition check_diff_condition(const KilledGenerator& kg, const Distribution& mu);

namespace detail {
/// Uniformized propagation of an arbitrary (possibly signed) vector over
/// E ∪ {Δ}: returns v P^T(t). Shared by transient() and the quasi-limit
/// correction integral.
std::vector<double> uniformized_apply(const KilledGenerator& kg, std::vector<double> v,
                                      double t, const TransientOptions& opt = {});
}  // namespace detail

}  // namespace fpt
