#include "ergomix/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace ergomix::bounds {

namespace {

void require_v_at_least_one(const std::vector<double>& v) {
    for (double x : v)
        if (!(x >= 1.0)) throw std::invalid_argument("Lyapunov function must satisfy V >= 1");
}

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("drift rate alpha must lie in (0,1)");
}

// C(n,k) for n <= 66 fits in uint64.
std::uint64_t binomial_u64(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::vector<std::uint64_t> row(static_cast<std::size_t>(n) + 1, 0);
    row[0] = 1;
    for (int i = 1; i <= n; ++i)
        for (int j = i; j >= 1; --j) row[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j - 1)];
    return row[static_cast<std::size_t>(k)];
}

}  // namespace

DriftResult verify_lyapunov(const kernel::LatticeChain& chain, const std::vector<double>& V,
                            double alpha) {
    require_alpha(alpha);
    if (V.size() != chain.state_count())
        throw std::invalid_argument("verify_lyapunov: V shape mismatch");
    require_v_at_least_one(V);

    auto pv = chain.apply_to_function(V);
    DriftResult res;
    res.cert.V = V;
    res.cert.alpha = alpha;
    double beta = 0.0;
    double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < V.size(); ++x) {
        double excess = pv[x] - alpha * V[x];
        if (excess > beta) beta = excess;
        vmax = std::max(vmax, V[x]);
        vmin = std::min(vmin, V[x]);
        if (excess > 1e-12 * std::max(1.0, std::abs(alpha * V[x]))) res.cert.region.push_back(x);
    }
    res.cert.beta = beta;
    bool constant_v = vmax == vmin;
    double threshold = 2.0 * beta / (1.0 - alpha);
    if (res.cert.region.empty() || constant_v || threshold < vmax) {
        res.ok = true;
    } else {
        res.ok = false;
        res.reason = "drift excess does not vanish at large V: 2 beta/(1-alpha) = " +
                     std::to_string(threshold) + " >= max V = " + std::to_string(vmax) +
                     "; no proper sublevel small set exists for this (V, alpha)";
    }
    return res;
}

PowerLyapunov build_lyapunov_from_power(const kernel::LatticeChain& chain,
                                        const std::vector<double>& v_prime, int n0, double alpha) {
    require_alpha(alpha);
    if (n0 < 1) throw std::invalid_argument("build_lyapunov_from_power: n0 must be >= 1");
    if (v_prime.size() != chain.state_count())
        throw std::invalid_argument("build_lyapunov_from_power: V' shape mismatch");
    require_v_at_least_one(v_prime);

    // Powers P^k V' for k = 0..n0.
    std::vector<std::vector<double>> pk{v_prime};
    for (int k = 1; k <= n0; ++k) pk.push_back(chain.apply_to_function(pk.back()));

    double beta = 0.0;
    for (std::size_t x = 0; x < v_prime.size(); ++x) {
        double excess = pk[static_cast<std::size_t>(n0)][x] - alpha * v_prime[x];
        if (excess > beta) beta = excess;
    }

    PowerLyapunov out;
    out.beta = beta;
    out.rate = std::pow(alpha, 1.0 / n0);
    out.V.assign(v_prime.size(), 0.0);
    for (int k = 0; k < n0; ++k) {
        double coeff = std::pow(alpha, static_cast<double>(n0 - 1 - k) / n0);
        for (std::size_t x = 0; x < out.V.size(); ++x)
            out.V[x] += coeff * pk[static_cast<std::size_t>(k)][x];
    }

    // The one-step inequality PV <= alpha^(1/n0) V + beta is an algebraic
    // consequence; re-check it pointwise.
    auto pv = chain.apply_to_function(out.V);
    for (std::size_t x = 0; x < out.V.size(); ++x) {
        double slack = out.rate * out.V[x] + beta + 1e-10 * std::max(1.0, out.V[x]) - pv[x];
        if (slack < 0)
            throw CheckFailure(
                "build_lyapunov_from_power: constructed V violates one-step drift at state " +
                std::to_string(x) + " by " + std::to_string(-slack));
    }
    return out;
}

double doeblin_bound(const kernel::DoeblinCertificate& cert, long n) {
    if (!cert.whole_space)
        throw std::invalid_argument(
            "doeblin_bound: certificate covers a proper subset; use rosenthal_bound");
    if (!(cert.epsilon > 0.0))
        throw std::invalid_argument("doeblin_bound: certificate has epsilon = 0");
    if (n < 0) throw std::invalid_argument("doeblin_bound: n must be >= 0");
    return 2.0 * std::pow(1.0 - cert.epsilon, static_cast<double>(n / cert.n0));
}

RosenthalConstants rosenthal_constants(double alpha, double beta, double d) {
    require_alpha(alpha);
    if (beta < 0) throw std::invalid_argument("rosenthal_constants: beta must be >= 0");
    double threshold = 2.0 * beta / (1.0 - alpha);
    if (!(d > threshold))
        throw std::invalid_argument("rosenthal_constants: d must exceed 2 beta/(1-alpha) = " +
                                    std::to_string(threshold));
    RosenthalConstants c;
    c.alpha_bar = (1.0 + alpha * d + 2.0 * beta) / (1.0 + d);
    c.r_cap = 1.0 + 2.0 * (alpha * d + beta / (1.0 - alpha));
    return c;
}

namespace {

void require_sublevel(const kernel::DoeblinCertificate& cert, const LyapunovCertificate& lyap,
                      double d) {
    // A must be exactly the sublevel set {V <= d}.
    std::set<std::size_t> a(cert.set_A.begin(), cert.set_A.end());
    for (std::size_t x = 0; x < lyap.V.size(); ++x) {
        bool in_a = a.count(x) > 0;
        if (in_a != (lyap.V[x] <= d))
            throw std::invalid_argument(
                "rosenthal_bound: certificate set A is not the sublevel set {V <= d}");
    }
}

}  // namespace

double rosenthal_bound(const kernel::DoeblinCertificate& cert, const LyapunovCertificate& lyap,
                       double sublevel_d, double nu_v_integral, long j, long n) {
    if (!(cert.epsilon > 0.0)) throw std::invalid_argument("rosenthal_bound: epsilon = 0");
    if (j < 1) throw std::invalid_argument("rosenthal_bound: j must be >= 1");
    if (j * cert.n0 > n + 1)
        throw std::invalid_argument("rosenthal_bound: j n0 exceeds n + 1, exponent is vacuous");
    require_sublevel(cert, lyap, sublevel_d);
    auto c = rosenthal_constants(lyap.alpha, lyap.beta, sublevel_d);
    double h_integral = 1.0 + nu_v_integral + lyap.beta / (1.0 - lyap.alpha);
    double first = 2.0 * std::pow(1.0 - cert.epsilon, static_cast<double>(j / cert.n0));
    double second = 2.0 * std::pow(c.alpha_bar, static_cast<double>(n - j * cert.n0 + 1)) *
                    std::pow(c.r_cap, static_cast<double>(j - 1)) * h_integral;
    return first + second;
}

RosenthalBest rosenthal_bound_best(const kernel::DoeblinCertificate& cert,
                                   const LyapunovCertificate& lyap, double sublevel_d,
                                   double nu_v_integral, long n) {
    RosenthalBest best;
    best.bound = std::numeric_limits<double>::infinity();
    for (long j = 1; j * cert.n0 <= n + 1; ++j) {
        double b = rosenthal_bound(cert, lyap, sublevel_d, nu_v_integral, j, n);
        if (b < best.bound) {
            best.bound = b;
            best.j = j;
        }
    }
    if (best.j == 0) {
        // No admissible split point below n0; fall back to the trivial TV bound.
        best.bound = 2.0;
        best.j = 0;
    }
    best.bound = std::min(best.bound, 2.0);
    return best;
}

double DyadicWeights::value(int k) const {
    if (k < 0 || k > n) return 0.0;
    return std::ldexp(static_cast<double>(numerators[static_cast<std::size_t>(k)]), -n);
}

bool DyadicWeights::sums_to_one() const {
    unsigned __int128 total = 0;
    for (auto v : numerators) total += v;
    return total == (static_cast<unsigned __int128>(1) << n);
}

DyadicWeights chebyshev_weights_exact(int n) {
    if (n < 1) throw std::invalid_argument("chebyshev_weights: n must be >= 1");
    if (n > 64) throw std::invalid_argument("chebyshev_weights_exact: exact arithmetic up to n = 64");
    DyadicWeights w;
    w.n = n;
    w.numerators.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int k = 0; k <= n; ++k) {
        if ((n - k) % 2 != 0) continue;
        if (k == 0)
            w.numerators[0] = binomial_u64(n, n / 2);  // alpha_0 = 2^-n C(n, n/2)
        else
            w.numerators[static_cast<std::size_t>(k)] =
                2 * binomial_u64(n, (k + n) / 2);       // alpha_k = 2^{-n+1} C(n,(k+n)/2)
    }
    return w;
}

std::vector<double> chebyshev_weights(int n) {
    if (n < 1) throw std::invalid_argument("chebyshev_weights: n must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
    if (n <= 64) {
        auto w = chebyshev_weights_exact(n);
        for (int k = 0; k <= n; ++k) out[static_cast<std::size_t>(k)] = w.value(k);
        return out;
    }
    for (int k = 0; k <= n; ++k) {
        if ((n - k) % 2 != 0) continue;
        int m = (k + n) / 2;
        double logc = std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
        double log2w = logc / std::log(2.0) - n + (k > 0 ? 1.0 : 0.0);
        out[static_cast<std::size_t>(k)] = std::exp2(log2w);
    }
    return out;
}

EscapeTail escape_tail(int n, int ell) {
    if (n < 1 || ell < 1 || ell > n)
        throw std::invalid_argument("escape_tail: need 1 <= ell <= n");
    EscapeTail out;
    if (n <= 64) {
        auto w = chebyshev_weights_exact(n);
        unsigned __int128 num = 0;
        for (int k = ell; k <= n; ++k) num += w.numerators[static_cast<std::size_t>(k)];
        out.tail = std::ldexp(static_cast<double>(num), -n);
    } else {
        auto w = chebyshev_weights(n);
        double acc = 0.0;
        for (int k = ell; k <= n; ++k) acc += w[static_cast<std::size_t>(k)];
        out.tail = acc;
    }
    out.majorant = 2.0 * std::exp(-static_cast<double>(ell) * ell / (2.0 * n));
    if (out.tail > out.majorant + 1e-15)
        throw CheckFailure("escape_tail: tail " + std::to_string(out.tail) +
                           " exceeds majorant " + std::to_string(out.majorant));
    return out;
}

CarneReport carne_check(const models::CoverModel& model,
                        const std::vector<std::vector<std::int64_t>>& set_A, int n) {
    model.validate();
    if (!model.symmetric())
        throw std::invalid_argument("carne_check: step law must be symmetric");
    if (set_A.empty()) throw std::invalid_argument("carne_check: A must be nonempty");
    if (n < 1) throw std::invalid_argument("carne_check: n must be >= 1");

    // A must live inside V . 0 = {0} u supp u -supp.
    std::set<std::vector<std::int64_t>> vset;
    vset.insert(std::vector<std::int64_t>(static_cast<std::size_t>(model.degree), 0));
    for (const auto& a : model.step_law)
        if (a.mass > 0) {
            vset.insert(a.point);
            std::vector<std::int64_t> neg(a.point.size());
            for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -a.point[i];
            vset.insert(neg);
        }
    std::set<std::vector<std::int64_t>> aset;
    for (const auto& p : set_A) {
        if (!vset.count(p))
            throw std::invalid_argument("carne_check: A must be a subset of the one-step ball V.0");
        if (!aset.insert(p).second)
            throw std::invalid_argument("carne_check: duplicate point in A");
    }

    double a_mass = static_cast<double>(set_A.size());
    std::int64_t step = model.max_step_norm();
    std::int64_t ext = 0;
    for (const auto& p : set_A)
        for (auto c : p) ext = std::max(ext, std::abs(c));

    auto sizes = models::ball_sizes(model, n + 1);
    std::int64_t ball_np1 = sizes[static_cast<std::size_t>(n)];

    double ell_real = std::sqrt(n * std::log(16.0 * static_cast<double>(ball_np1) / a_mass));
    long ell = static_cast<long>(std::ceil(ell_real - 1e-12));
    if (ell < 1) ell = 1;
    if (ell > n + 1) sizes = models::ball_sizes(model, static_cast<int>(ell));
    std::int64_t ball_ell = sizes[static_cast<std::size_t>(ell - 1)];

    // lhs by exact window convolution; the radius covers the full 2n-step
    // support, so no mass is lost.
    std::int64_t radius = step * 2 * n + ext + 2;
    auto chain = kernel::cover_window_chain(model, radius);
    kernel::Distribution ind;
    ind.p.assign(chain.state_count(), 0.0);
    for (const auto& p : set_A) ind.p[chain.box().index_of(p)] = 1.0;
    ind.mass = a_mass;
    auto evolved = chain.evolve(ind, 2L * n);
    if (std::abs(evolved.mass - a_mass) > 1e-9 * a_mass)
        throw CheckFailure("carne_check: window lost mass, radius too small");
    std::vector<double> vals;
    for (const auto& p : set_A) vals.push_back(evolved.p[chain.box().index_of(p)]);
    double lhs = pairwise_sum(vals);

    CarneReport report;
    report.n = n;
    report.ell = ell;
    report.lhs = lhs;
    report.rhs = a_mass * a_mass / (4.0 * static_cast<double>(ball_ell));
    report.ball_n_plus_1 = ball_np1;
    report.ball_ell = ball_ell;
    if (report.lhs < report.rhs)
        throw CheckFailure("carne_check: lower bound violated: lhs " + std::to_string(report.lhs) +
                           " < rhs " + std::to_string(report.rhs) + " at n = " + std::to_string(n));
    return report;
}

}  // namespace ergomix::bounds
