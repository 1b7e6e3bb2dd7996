#pragma once

#include <cstddef>

// Project-wide tolerance and limit defaults. Individual operations that need
// a different value take it as a parameter.
namespace fpt::defaults {

inline constexpr double structural_tol = 1e-14;   // row sums, partition constancy
inline constexpr double numeric_tol = 1e-10;      // generic numerical equality
inline constexpr double distribution_tol = 1e-12; // probability vectors sum to 1
inline constexpr double poisson_tail = 1e-14;     // uniformization series cutoff
inline constexpr std::size_t max_series_terms = 200000;
inline constexpr std::size_t max_power_iterations = 1000000;
inline constexpr double rayleigh_tol = 1e-12;
inline constexpr std::size_t max_events_per_trajectory = 10000000;
inline constexpr std::size_t max_population = 1000000;

inline constexpr const char* version = "0.1.0";

}  // namespace fpt::defaults
