#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ergomix/kernel.hpp"
#include "ergomix/models.hpp"

namespace ergomix::bounds {

struct LyapunovCertificate {
    std::vector<double> V;  // V >= 1 on all states
    double alpha = 0.0;     // < 1
    double beta = 0.0;      // >= 0, the verified excess
    std::vector<std::size_t> region;  // states where PV > alpha V (the excess support)
};

struct DriftResult {
    bool ok = false;
    LyapunovCertificate cert;
    std::string reason;  // set when ok == false
};

// Verifies PV <= alpha V + beta with beta = max_x(PV - alpha V)+. The result
// is usable when a proper sublevel small set exists, i.e. the admissibility
// threshold 2 beta/(1-alpha) stays below max V (constant V is the compact
// special case and always passes).
DriftResult verify_lyapunov(const kernel::LatticeChain& chain, const std::vector<double>& V,
                            double alpha);

struct PowerLyapunov {
    std::vector<double> V;
    double beta = 0.0;      // excess of the n0-step drift of V'
    double rate = 0.0;      // alpha^(1/n0), the certified one-step rate of V
};

// Builds V = sum_k alpha^((n0-1-k)/n0) P^k V' from an n0-step drift of V';
// the one-step inequality PV <= alpha^(1/n0) V + beta is re-checked pointwise.
PowerLyapunov build_lyapunov_from_power(const kernel::LatticeChain& chain,
                                        const std::vector<double>& v_prime, int n0, double alpha);

// 2 (1-eps)^floor(n/n0) for a whole-space certificate.
double doeblin_bound(const kernel::DoeblinCertificate& cert, long n);

struct RosenthalConstants {
    double alpha_bar = 0.0;
    double r_cap = 0.0;
};

// alpha_bar = (1 + alpha d + 2 beta)/(1 + d), R = 1 + 2(alpha d + beta/(1-alpha));
// requires d > 2 beta / (1 - alpha).
RosenthalConstants rosenthal_constants(double alpha, double beta, double d);

// Drift-and-minorization bound at split point j:
//   2 (1-eps)^floor(j/n0) + 2 alpha_bar^(n - j n0 + 1) R^(j-1) (1 + int V dnu + beta/(1-alpha)).
// The certificate must sit on the sublevel set {V <= d} for an admissible d.
double rosenthal_bound(const kernel::DoeblinCertificate& cert, const LyapunovCertificate& lyap,
                       double sublevel_d, double nu_v_integral, long j, long n);

struct RosenthalBest {
    double bound = 0.0;
    long j = 0;  // 0 when n + 1 < n0 and the trivial bound 2 was used
};

RosenthalBest rosenthal_bound_best(const kernel::DoeblinCertificate& cert,
                                   const LyapunovCertificate& lyap, double sublevel_d,
                                   double nu_v_integral, long n);

// Chebyshev decomposition weights of P^n: alpha_{k,n} = 0 when n-k is odd,
// else 2^{-n+1} C(n,(k+n)/2) for k > 0 and 2^{-n} C(n,n/2) for k = 0.
// Exact dyadic rationals (numerator over 2^n) up to n = 64.
struct DyadicWeights {
    int n = 0;
    std::vector<std::uint64_t> numerators;  // index k = 0..n; value alpha_k * 2^n

    double value(int k) const;
    bool sums_to_one() const;  // exact: sum of numerators == 2^n (128-bit check)
};

DyadicWeights chebyshev_weights_exact(int n);            // n <= 64
std::vector<double> chebyshev_weights(int n);            // any n >= 1

struct EscapeTail {
    double tail = 0.0;      // sum_{ell <= k <= n} alpha_{k,n}
    double majorant = 0.0;  // 2 exp(-ell^2 / (2n))
};

EscapeTail escape_tail(int n, int ell);

struct CarneReport {
    long n = 0;
    long ell = 0;
    double lhs = 0.0;  // <P^{2n} 1_A, 1_A> under counting measure
    double rhs = 0.0;  // |A|^2 / (4 |V^ell|)
    std::int64_t ball_n_plus_1 = 0;
    std::int64_t ball_ell = 0;
};

// Return-probability lower bound for a symmetric cover walk; ell is the
// smallest integer with ell >= sqrt(n log(16 |V^{n+1}| / |A|)). The pairing is
// computed by exact window convolution with zero escaped mass.
CarneReport carne_check(const models::CoverModel& model,
                        const std::vector<std::vector<std::int64_t>>& set_A, int n);

struct BoundCurve {
    struct Row {
        long n = 0;
        double bound = 0.0;
        std::optional<double> empirical;
    };
    std::vector<Row> rows;
    std::string provenance;
};

}  // namespace ergomix::bounds
