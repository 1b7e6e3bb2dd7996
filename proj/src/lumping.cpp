#include "fpt/lumping.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "fpt/defaults.hpp"
#include "fpt/errors.hpp"
#include "perron.hpp"

namespace fpt {

namespace {

constexpr std::size_t unassigned = static_cast<std::size_t>(-1);

bool strongly_connected(const std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    if (n <= 1) return n == 1;
    const auto reaches_all = [&](bool transpose) {
        std::vector<bool> seen(n, false);
        std::deque<std::size_t> queue{0};
        seen[0] = true;
        std::size_t count = 1;
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            for (std::size_t w = 0; w < n; ++w) {
                const double r = transpose ? a[w][v] : a[v][w];
                if (v != w && r > 0.0 && !seen[w]) {
                    seen[w] = true;
                    ++count;
                    queue.push_back(w);
                }
            }
        }
        return count == n;
    };
    return reaches_all(false) && reaches_all(true);
}

}  // namespace

Partition Partition::create(const Generator& gen,
                            const std::vector<std::vector<std::string>>& blocks) {
    if (blocks.size() < 2) throw ValidationError("partition needs at least two blocks");

    Partition p;
    p.block_of_.assign(gen.size(), unassigned);
    p.blocks_.resize(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (blocks[k].empty())
            throw ValidationError("partition block " + std::to_string(k + 1) + " is empty");
        for (const auto& label : blocks[k]) {
            const auto idx = gen.index_of(label);
            if (!idx)
                throw ValidationError("partition block " + std::to_string(k + 1) +
                                      ": unknown state label '" + label + "'");
            if (p.block_of_[*idx] != unassigned)
                throw ValidationError("state '" + label + "' appears in more than one block");
            p.block_of_[*idx] = k;
            p.blocks_[k].push_back(*idx);
        }
        std::sort(p.blocks_[k].begin(), p.blocks_[k].end());
    }
    for (std::size_t s = 0; s < gen.size(); ++s) {
        if (p.block_of_[s] == unassigned)
            throw ValidationError("state '" + gen.label(s) + "' is not covered by the partition");
        if (gen.is_target(s) != (p.block_of_[s] == 0))
            throw ValidationError("first block must equal the target set D (state '" +
                                  gen.label(s) + "' is misplaced)");
    }
    return p;
}

LumpedGenerator LumpedGenerator::from_qbar(std::vector<std::vector<double>> qbar) {
    const std::size_t m = qbar.size();
    if (m < 2) throw ValidationError("lumped generator needs at least two blocks");
    for (std::size_t k = 0; k < m; ++k) {
        if (qbar[k].size() != m)
            throw ValidationError("lumped rate table is not square at row " + std::to_string(k + 1));
        double sum = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            if (k != l && (!(qbar[k][l] >= 0.0) || !std::isfinite(qbar[k][l])))
                throw ValidationError("lumped rate (" + std::to_string(k + 1) + "," +
                                      std::to_string(l + 1) + ") is negative or not finite");
            sum += qbar[k][l];
        }
        if (k == 0) {
            for (std::size_t l = 0; l < m; ++l)
                if (qbar[0][l] != 0.0)
                    throw ValidationError("absorbing block row must be identically zero");
        } else if (std::abs(sum) > defaults::structural_tol * std::max(1.0, -qbar[k][k])) {
            throw ValidationError("lumped row " + std::to_string(k + 1) +
                                  " does not sum to zero (residual " + std::to_string(sum) + ")");
        }
    }
    LumpedGenerator lg;
    lg.qbar_ = std::move(qbar);
    return lg;
}

Generator LumpedGenerator::as_generator() const {
    std::vector<std::string> states;
    states.reserve(block_count());
    for (std::size_t k = 0; k < block_count(); ++k) states.push_back(std::to_string(k + 1));
    std::vector<RateTriple> triples;
    for (std::size_t k = 1; k < block_count(); ++k)
        for (std::size_t l = 0; l < block_count(); ++l)
            if (k != l && qbar_[k][l] > 0.0)
                triples.push_back({states[k], states[l], qbar_[k][l]});
    return Generator::create(std::move(states), {"1"}, triples);
}

LumpedGenerator validate_partition(const Generator& gen, const Partition& part) {
    const std::size_t m = part.block_count();
    std::vector<std::vector<double>> qbar(m, std::vector<double>(m, 0.0));

    // Row sums into each block, per state; block pairs are scanned in
    // lexicographic order so violations are reported deterministically.
    for (std::size_t k = 1; k < m; ++k) {
        const auto& block = part.blocks()[k];
        for (std::size_t l = 0; l < m; ++l) {
            if (l == k) continue;
            double ref = 0.0;
            for (std::size_t pos = 0; pos < block.size(); ++pos) {
                const std::size_t i = block[pos];
                double sum = 0.0;
                for (const auto& e : gen.row(i))
                    if (part.block_of(e.col) == l) sum += e.rate;
                if (pos == 0) {
                    ref = sum;
                } else if (std::abs(sum - ref) > 1e-12 * std::max(1.0, std::abs(ref))) {
                    throw ValidationError(
                        "partition is not lumpable at block pair (" + std::to_string(k + 1) +
                        "," + std::to_string(l + 1) + "): states '" + gen.label(block[0]) +
                        "' and '" + gen.label(i) + "' have row sums " + std::to_string(ref) +
                        " and " + std::to_string(sum));
                }
            }
            qbar[k][l] = ref;
        }
        double diag = 0.0;
        for (std::size_t l = 0; l < m; ++l)
            if (l != k) diag += qbar[k][l];
        qbar[k][k] = -diag;
    }
    return LumpedGenerator::from_qbar(std::move(qbar));
}

LumpedQsd solve_lumped_qsd(const LumpedGenerator& lg) {
    const std::size_t m = lg.block_count();
    const std::size_t n = m - 1;  // transient blocks

    std::vector<std::vector<double>> sub(n, std::vector<double>(n));
    double max_exit = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) sub[k][l] = lg.rate(k + 1, l + 1);
        max_exit = std::max(max_exit, -sub[k][k]);
    }
    if (!strongly_connected(sub))
        throw ValidationError("restriction to the transient blocks is reducible");
    if (max_exit <= 0.0)
        throw ValidationError("transient blocks have no dynamics; alpha would be zero");

    const double lambda = 1.05 * max_exit;
    const auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        y.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t l = 0; l < n; ++l) {
                const double kern = (k == l ? 1.0 : 0.0) + sub[k][l] / lambda;
                y[l] += x[k] * kern;
            }
        }
    };
    detail::PerronResult r = detail::perron_left(n, apply, defaults::rayleigh_tol,
                                                 defaults::max_power_iterations);
    const double alpha_eig = lambda * (1.0 - r.value);

    double total = 0.0;
    for (const double v : r.vec) total += v;
    LumpedQsd out;
    out.mu_bar.assign(m, 0.0);
    for (std::size_t k = 0; k < n; ++k) out.mu_bar[k + 1] = r.vec[k] / total;

    double alpha_formula = 0.0;
    for (std::size_t k = 1; k < m; ++k) alpha_formula += lg.rate(k, 0) * out.mu_bar[k];
    if (std::abs(alpha_formula - alpha_eig) > defaults::numeric_tol * std::max(1.0, alpha_eig))
        throw ConvergenceError("lumped rate mismatch: eigenvalue " + std::to_string(alpha_eig) +
                               " vs absorption formula " + std::to_string(alpha_formula));
    out.alpha = alpha_formula;
    return out;
}

EmergenceLaw emergence_closed_form(double q21, double q31, double q23, double q32) {
    for (const double q : {q21, q31, q23, q32})
        if (!(q >= 0.0) || !std::isfinite(q))
            throw ValidationError("rates must be nonnegative and finite");

    const double scale = std::max({q21, q31, q23, q32, 1.0});
    if (q23 + q32 == 0.0)
        throw ValidationError("switch rates are both zero: the two blocks are reducible");

    EmergenceLaw law;
    if (std::abs(q21 - q31) < 1e-12 * scale) {
        // The radical formula divides by d = q21 - q31. Expanding the root
        // around d = 0:
        //   sqrt((d + q23 - q32)^2 + 4 q23 q32)
        //     = (q23 + q32) + d (q23 - q32)/(q23 + q32) + O(d^2),
        // so the numerator is 2 d q32/(q23 + q32) + O(d^2) and the quotient
        // tends to the switch's stationary law with rate q21.
        law.mu2 = q32 / (q23 + q32);
        law.alpha = q21;
        return law;
    }
    const double d = q21 - q31;
    const double disc = (d + q23 - q32) * (d + q23 - q32) + 4.0 * q23 * q32;
    law.mu2 = (d + q23 + q32 - std::sqrt(disc)) / (2.0 * d);
    if (law.mu2 < -1e-12 || law.mu2 > 1.0 + 1e-12)
        throw ValidationError("block mass " + std::to_string(law.mu2) + " is outside [0,1]");
    law.mu2 = std::clamp(law.mu2, 0.0, 1.0);
    law.alpha = law.mu2 * q21 + (1.0 - law.mu2) * q31;
    return law;
}

Distribution lift_lumped_law(const Generator& gen, const Partition& part,
                             const std::vector<double>& mu_bar,
                             const std::vector<std::vector<double>>& within) {
    const std::size_t m = part.block_count();
    if (mu_bar.size() != m)
        throw ValidationError("block distribution length does not match the partition");
    if (within.size() != m)
        throw ValidationError("within-block table length does not match the partition");
    if (std::abs(mu_bar[0]) > defaults::distribution_tol)
        throw ValidationError("block distribution charges the absorbing block");

    std::vector<double> e_mass(gen.e_size(), 0.0);
    for (std::size_t k = 1; k < m; ++k) {
        const auto& block = part.blocks()[k];
        if (mu_bar[k] == 0.0 && within[k].empty()) continue;
        if (within[k].size() != block.size())
            throw ValidationError("within-block weights for block " + std::to_string(k + 1) +
                                  " have length " + std::to_string(within[k].size()) +
                                  ", block has " + std::to_string(block.size()) + " states");
        double sum = 0.0;
        for (const double w : within[k]) {
            if (!(w >= 0.0) || !std::isfinite(w))
                throw ValidationError("within-block weight is negative or not finite");
            sum += w;
        }
        if (std::abs(sum - 1.0) > defaults::distribution_tol)
            throw ValidationError("within-block weights for block " + std::to_string(k + 1) +
                                  " sum to " + std::to_string(sum));
        for (std::size_t pos = 0; pos < block.size(); ++pos)
            e_mass[gen.e_index_of(block[pos])] = mu_bar[k] * within[k][pos];
    }
    return Distribution::over_e(std::move(e_mass));
}

}  // namespace fpt
