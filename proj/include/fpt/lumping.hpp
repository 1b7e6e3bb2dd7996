#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fpt/chain.hpp"

namespace fpt {

/// Ordered blocks E₁ = D, E₂, … covering the state space. Disjointness,
/// coverage, and the first-block-equals-D rule are validated at creation.
class Partition {
public:
    static Partition create(const Generator& gen,
                            const std::vector<std::vector<std::string>>& blocks);

    std::size_t block_count() const noexcept { return blocks_.size(); }
    /// Blocks as state indices, block 0 = D.
    const std::vector<std::vector<std::size_t>>& blocks() const noexcept { return blocks_; }
    std::size_t block_of(std::size_t state) const { return block_of_[state]; }

private:
    Partition() = default;
    std::vector<std::vector<std::size_t>> blocks_;
    std::vector<std::size_t> block_of_;
};

/// Generator of the block-projected chain: row 0 (the absorbing block) is
/// identically zero, other rows sum to zero with nonnegative off-diagonals.
class LumpedGenerator {
public:
    /// Validates an explicit block rate table (diagonal included).
    static LumpedGenerator from_qbar(std::vector<std::vector<double>> qbar);

    std::size_t block_count() const noexcept { return qbar_.size(); }
    const std::vector<std::vector<double>>& qbar() const noexcept { return qbar_; }
    double rate(std::size_t k, std::size_t l) const { return qbar_[k][l]; }

    /// The lumped chain as an ordinary Generator with states "1", "2", …
    /// and target {"1"}, so every chain-core operation applies to it.
    Generator as_generator() const;

    friend LumpedGenerator validate_partition(const Generator&, const Partition&);

private:
    LumpedGenerator() = default;
    std::vector<std::vector<double>> qbar_;
};

/// Checks the lumping condition: for every pair of blocks (k ≥ 2, l ≠ k) the
/// row sum Σ_{j∈E_l} q_ij must be constant over i ∈ E_k (relative tolerance
/// 1e-12). On success returns the lumped generator; a violation names the
/// lexicographically smallest offending block pair and two witness states.
LumpedGenerator validate_partition(const Generator& gen, const Partition& part);

struct LumpedQsd {
    /// Block distribution over all blocks, zero on block 0.
    std::vector<double> mu_bar;
    double alpha = 0.0;
};

/// Solves μ̄Q̄ = -αμ̄ + αd for the unique block QSD: the Perron left
/// eigenvector of the restriction to blocks ≥ 2, with α cross-checked
/// against Σ_k q̄_{k1} μ̄_k to 1e-10.
LumpedQsd solve_lumped_qsd(const LumpedGenerator& lg);

struct EmergenceLaw {
    double mu2 = 0.0;   // block-2 mass of the treated/untreated switch
    double alpha = 0.0; // emergence rate
};

/// Closed form for the two-transient-block chain (blocks: target, "below
/// threshold", "above threshold"): q21/q31 are the block killing rates and
/// q23/q32 the switch rates. When q21 = q31 the radical formula degenerates
/// and the analytic limit mu2 = q32/(q23+q32) applies.
EmergenceLaw emergence_closed_form(double q21, double q31, double q23, double q32);

/// Lifts a block law to a state law: μ_i = μ̄_k · within[k][i] for i ∈ E_k.
/// `within[k]` is a probability vector over block k (k ≥ 1); it may be empty
/// when μ̄_k = 0. Any lift of a block QSD makes the passage time exponential
/// with the lumped rate, whatever the within-block weights.
Distribution lift_lumped_law(const Generator& gen, const Partition& part,
                             const std::vector<double>& mu_bar,
                             const std::vector<std::vector<double>>& within);

}  // namespace fpt
