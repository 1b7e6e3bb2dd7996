#include "fpt/chain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "fpt/errors.hpp"

namespace fpt {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

double kahan_sum(const std::vector<RateEntry>& entries) {
    double s = 0.0, c = 0.0;
    for (const auto& e : entries) {
        const double y = e.rate - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

}  // namespace

Generator Generator::create(std::vector<std::string> states,
                            const std::vector<std::string>& target,
                            const std::vector<RateTriple>& rates) {
    if (states.empty()) throw ValidationError("state space is empty");

    Generator g;
    g.states_ = std::move(states);
    g.index_.reserve(g.states_.size());
    for (std::size_t s = 0; s < g.states_.size(); ++s) {
        if (!g.index_.emplace(g.states_[s], s).second)
            throw ValidationError("duplicate state label '" + g.states_[s] + "'");
    }

    if (target.empty()) throw ValidationError("target set D is empty");
    g.is_target_.assign(g.states_.size(), false);
    for (const auto& label : target) {
        const auto it = g.index_.find(label);
        if (it == g.index_.end())
            throw ValidationError("target contains unknown state label '" + label + "'");
        if (!g.is_target_[it->second]) {
            g.is_target_[it->second] = true;
            g.target_.push_back(it->second);
        }
    }
    std::sort(g.target_.begin(), g.target_.end());
    if (g.target_.size() == g.states_.size())
        throw ValidationError("target set D must be a strict subset of the state space");

    g.e_of_s_.assign(g.states_.size(), npos);
    for (std::size_t s = 0; s < g.states_.size(); ++s) {
        if (!g.is_target_[s]) {
            g.e_of_s_[s] = g.e_index_.size();
            g.e_index_.push_back(s);
        }
    }

    g.rows_.assign(g.states_.size(), {});
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t k = 0; k < rates.size(); ++k) {
        const auto& tr = rates[k];
        const auto from = g.index_.find(tr.from);
        if (from == g.index_.end())
            throw ValidationError("rates[" + std::to_string(k) + "]: unknown state label '" +
                                  tr.from + "'");
        const auto to = g.index_.find(tr.to);
        if (to == g.index_.end())
            throw ValidationError("rates[" + std::to_string(k) + "]: unknown state label '" +
                                  tr.to + "'");
        if (from->second == to->second)
            throw ValidationError("rates[" + std::to_string(k) + "]: self-loop on '" + tr.from +
                                  "'");
        if (!(tr.rate >= 0.0) || !std::isfinite(tr.rate))
            throw ValidationError("rates[" + std::to_string(k) + "]: rate " +
                                  std::to_string(tr.rate) + " is negative or not finite");
        if (!seen.emplace(from->second, to->second).second)
            throw ValidationError("rates[" + std::to_string(k) + "]: duplicate pair ('" +
                                  tr.from + "', '" + tr.to + "')");
        if (tr.rate > 0.0) g.rows_[from->second].push_back({to->second, tr.rate});
    }
    for (auto& row : g.rows_)
        std::sort(row.begin(), row.end(),
                  [](const RateEntry& a, const RateEntry& b) { return a.col < b.col; });

    g.exit_rate_.resize(g.states_.size());
    for (std::size_t s = 0; s < g.states_.size(); ++s) g.exit_rate_[s] = kahan_sum(g.rows_[s]);
    return g;
}

std::optional<std::size_t> Generator::index_of(std::string_view label) const {
    const auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool Generator::e_restriction_irreducible() const {
    const std::size_t n = e_size();
    if (n == 0) return false;
    if (n == 1) return true;

    // forward and reverse adjacency over E
    std::vector<std::vector<std::size_t>> fwd(n), rev(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : rows_[e_index_[i]]) {
            if (is_target_[e.col]) continue;
            const std::size_t j = e_of_s_[e.col];
            fwd[i].push_back(j);
            rev[j].push_back(i);
        }
    }
    const auto reaches_all = [n](const std::vector<std::vector<std::size_t>>& adj) {
        std::vector<bool> seen(n, false);
        std::deque<std::size_t> queue{0};
        seen[0] = true;
        std::size_t count = 1;
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            for (const std::size_t w : adj[v]) {
                if (!seen[w]) {
                    seen[w] = true;
                    ++count;
                    queue.push_back(w);
                }
            }
        }
        return count == n;
    };
    return reaches_all(fwd) && reaches_all(rev);
}

void Generator::require_e_irreducible() const {
    if (!e_restriction_irreducible())
        throw ValidationError("the restriction of the chain to E is not irreducible");
}

KilledGenerator build_killed(const Generator& gen, double lambda_multiplier) {
    if (!(lambda_multiplier >= 1.0))
        throw ValidationError("lambda multiplier must be >= 1");
    if (gen.e_size() == 0)
        throw ValidationError("target set D covers the whole state space; nothing to kill");

    KilledGenerator kg(gen);
    const std::size_t n = gen.e_size();
    kg.eta_.assign(n, 0.0);
    kg.exit_.assign(n, 0.0);
    kg.rows_.assign(n, {});

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = gen.e_indices()[i];
        double eta = 0.0;
        for (const auto& e : gen.row(s)) {
            if (gen.is_target(e.col)) {
                eta += e.rate;
            } else {
                kg.rows_[i].push_back({gen.e_index_of(e.col), e.rate});
            }
        }
        kg.eta_[i] = eta;
        const double within = kahan_sum(kg.rows_[i]);
        kg.exit_[i] = within + eta;
        // Row sums of the killed matrix must cancel against the stored exit
        // rate; a mismatch means the source row was not conservative.
        const double row_residual = std::abs(kg.exit_[i] - gen.exit_rate(s));
        if (row_residual > defaults::structural_tol * std::max(1.0, gen.exit_rate(s)))
            throw ValidationError("row '" + gen.label(s) + "' is not conservative (residual " +
                                  std::to_string(row_residual) + ")");
    }

    double max_exit = 0.0;
    for (const double q : kg.exit_) max_exit = std::max(max_exit, q);
    kg.lambda_ = max_exit > 0.0 ? lambda_multiplier * max_exit : 1.0;
    return kg;
}

Distribution Distribution::over_e(std::vector<double> e_mass) {
    e_mass.push_back(0.0);
    return raw(std::move(e_mass));
}

Distribution Distribution::normalized(std::vector<double> e_weights) {
    if (e_weights.empty()) throw ValidationError("distribution has no states");
    double total = 0.0;
    for (const double w : e_weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw ValidationError("distribution weight " + std::to_string(w) +
                                  " is negative or not finite");
        total += w;
    }
    if (total <= 0.0) throw ValidationError("distribution weights sum to zero");
    for (double& w : e_weights) w /= total;
    return over_e(std::move(e_weights));
}

Distribution Distribution::uniform(std::size_t n_e) {
    if (n_e == 0) throw ValidationError("distribution has no states");
    return over_e(std::vector<double>(n_e, 1.0 / static_cast<double>(n_e)));
}

Distribution Distribution::point(std::size_t n_e, std::size_t e_index) {
    if (e_index >= n_e) throw ValidationError("point mass index out of range");
    std::vector<double> m(n_e, 0.0);
    m[e_index] = 1.0;
    return over_e(std::move(m));
}

Distribution Distribution::raw(std::vector<double> full_mass) {
    if (full_mass.size() < 2)
        throw ValidationError("distribution must cover at least one E state plus the cemetery");
    double total = 0.0, comp = 0.0;
    for (const double m : full_mass) {
        if (!(m >= 0.0) || !std::isfinite(m))
            throw ValidationError("distribution entry " + std::to_string(m) +
                                  " is negative or not finite");
        const double y = m - comp;
        const double t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    if (std::abs(total - 1.0) > defaults::distribution_tol)
        throw ValidationError("distribution mass " + std::to_string(total) + " is not 1");
    return Distribution(std::move(full_mass));
}

TimeGrid TimeGrid::of(std::vector<double> times) {
    if (times.empty()) throw ValidationError("time grid is empty");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k]) || times[k] < 0.0)
            throw ValidationError("time grid entry " + std::to_string(times[k]) +
                                  " is negative or not finite");
        if (k > 0 && !(times[k] > times[k - 1]))
            throw ValidationError("time grid is not strictly increasing at index " +
                                  std::to_string(k));
    }
    return TimeGrid(std::move(times));
}

TimeGrid TimeGrid::linear(double a, double b, std::size_t n) {
    if (n == 0) throw ValidationError("time grid is empty");
    if (n == 1) return of({a});
    if (!(b > a)) throw ValidationError("time grid needs b > a");
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k)
        t[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
    t.back() = b;
    return of(std::move(t));
}

TimeGrid TimeGrid::geometric(double a, double b, std::size_t n) {
    if (n == 0) throw ValidationError("time grid is empty");
    if (!(a > 0.0)) throw ValidationError("geometric time grid needs a > 0");
    if (n == 1) return of({a});
    if (!(b > a)) throw ValidationError("time grid needs b > a");
    const double ratio = std::pow(b / a, 1.0 / static_cast<double>(n - 1));
    std::vector<double> t(n);
    double cur = a;
    for (std::size_t k = 0; k < n; ++k, cur *= ratio) t[k] = cur;
    t.back() = b;
    return of(std::move(t));
}

namespace detail {

namespace {

// y = x (I + Q^T/Λ) over E ∪ {Δ}; the Δ row of the kernel is the identity.
void apply_kernel(const KilledGenerator& kg, const std::vector<double>& x,
                  std::vector<double>& y) {
    const std::size_t n = kg.e_size();
    const double lam = kg.lambda();
    y.assign(n + 1, 0.0);
    y[n] = x[n];
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        y[i] += xi * (1.0 - kg.exit_rate(i) / lam);
        for (const auto& e : kg.row(i)) y[e.col] += xi * (e.rate / lam);
        y[n] += xi * (kg.eta(i) / lam);
    }
}

// Λ·Δt per segment; keeps e^{-ΛΔt} representable and the series short.
constexpr double max_segment_mass = 500.0;

}  // namespace

std::vector<double> uniformized_apply(const KilledGenerator& kg, std::vector<double> v,
                                      double t, const TransientOptions& opt) {
    if (t < 0.0) throw ValidationError("time must be nonnegative");
    if (v.size() != kg.e_size() + 1)
        throw ValidationError("vector length does not match the killed state space");
    if (t == 0.0) return v;

    const double lam = kg.lambda();
    const double total_mass = lam * t;
    const std::size_t segments =
        total_mass <= max_segment_mass
            ? 1
            : static_cast<std::size_t>(std::ceil(total_mass / max_segment_mass));
    const double dt = t / static_cast<double>(segments);
    const double a = lam * dt;

    std::size_t terms_used = 0;
    std::vector<double> acc(v.size()), cur(v.size()), nxt(v.size());
    for (std::size_t seg = 0; seg < segments; ++seg) {
        double w = std::exp(-a);
        double cum = w;
        cur = v;
        for (std::size_t k = 0; k < v.size(); ++k) acc[k] = w * v[k];
        std::size_t m = 0;
        while (cum < 1.0 - defaults::poisson_tail) {
            if (++terms_used > opt.max_terms)
                throw ConvergenceError(
                    "uniformization exceeded " + std::to_string(opt.max_terms) +
                    " terms; achieved Poisson tail mass " + std::to_string(1.0 - cum));
            apply_kernel(kg, cur, nxt);
            cur.swap(nxt);
            ++m;
            w *= a / static_cast<double>(m);
            for (std::size_t k = 0; k < v.size(); ++k) acc[k] += w * cur[k];
            cum += w;
        }
        v = acc;
    }
    return v;
}

}  // namespace detail

Distribution transient(const KilledGenerator& kg, const Distribution& mu, double t,
                       const TransientOptions& opt) {
    if (mu.e_size() != kg.e_size())
        throw ValidationError("distribution does not match the killed state space");
    std::vector<double> v(mu.mass().begin(), mu.mass().end());
    return Distribution::raw(detail::uniformized_apply(kg, std::move(v), t, opt));
}

double survival(const KilledGenerator& kg, const Distribution& mu, double t,
                const TransientOptions& opt) {
    return 1.0 - transient(kg, mu, t, opt).delta_mass();
}

DiffCondition check_diff_condition(const KilledGenerator& kg, const Distribution& mu) {
    if (mu.e_size() != kg.e_size())
        throw ValidationError("distribution does not match the killed state space");
    double value = 0.0;
    for (std::size_t i = 0; i < kg.e_size(); ++i) value += kg.exit_rate(i) * mu[i];
    return {DiffCondition::Verdict::sufficient, value};
}

}  // namespace fpt
