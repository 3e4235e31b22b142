#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergomix/kernel.hpp"
#include "ergomix/models.hpp"

namespace ergomix::mc {

// A simulated path. Regenerating with the same seed reproduces it bit-exactly.
struct Trajectory {
    std::string model_id;
    std::vector<double> start;
    std::uint64_t seed = 0;
    long length = 0;
    long thin = 1;
    std::vector<std::vector<double>> states;  // every thin-th state, including the start
};

Trajectory simulate(const models::AffineTorusModel& model, const std::vector<double>& start,
                    long n, std::uint64_t seed, long thin = 1);
Trajectory simulate(const models::CoverModel& model, const std::vector<std::int64_t>& start,
                    long n, std::uint64_t seed, long thin = 1);

// Step sampler for a torus chain (used by the trajectory-based experiments).
class ChainWalker {
  public:
    explicit ChainWalker(const kernel::LatticeChain& chain);
    std::size_t step(std::size_t state, std::mt19937_64& rng) const;
    std::size_t uniform_state(std::mt19937_64& rng) const;

  private:
    const kernel::LatticeChain* chain_;
    std::vector<double> cdf_;                  // over (component, step) pairs
    std::vector<std::uint32_t> pair_comp_;
    std::vector<std::vector<std::int64_t>> pair_offset_;
};

enum class Recurrence { recurrent, transient, inconclusive };

std::string to_string(Recurrence r);

struct RecurrenceReport {
    long horizon = 0;
    int b_radius = 0;
    bool hypothesis_symmetric = false;

    // Exact window computation (certified lower bounds; escaped mass tracked).
    std::vector<double> green_cumulative;  // S_n = sum_{k<=n} P^k(0,B), n = 1..horizon
    double escaped_mass = 0.0;
    double increment_ratio = 0.0;          // (S_N - S_{N/2}) / (S_{N/2} - S_{N/4})
    double last_quarter_increment = 0.0;   // S_N - S_{3N/4}
    bool green_divergent = false;
    bool green_converged = false;
    double renewal_return_prob = 0.0;      // S_N / (1 + S_N), exact for B = {0}
    double q_estimate = 0.0;               // 1 under divergence, else the renewal value

    // Monte Carlo corroboration.
    long trials = 0;
    long returned = 0;
    double mc_return_prob = 0.0;
    double mc_ci_halfwidth = 0.0;  // 1.96 * standard error
    double mean_visits = 0.0;

    Recurrence classification = Recurrence::inconclusive;

    // Thresholds in force.
    double ratio_threshold = 0.0;
    double increment_threshold = 0.0;
    double q_threshold = 0.0;
    double away_from_one = 0.0;
};

// Decides the recurrence/transience dichotomy for a symmetric adapted cover
// walk from exact partial Green sums plus Monte Carlo return estimates.
RecurrenceReport classify_recurrence(const models::CoverModel& model, int b_radius, long horizon,
                                     long trials, std::uint64_t seed,
                                     double radius_sigmas = 4.5);

// Indicator of a box with rational corners; its Haar mean is exact.
struct BoxIndicator {
    std::vector<Rational> lo, hi;
    bool contains(const std::vector<double>& point) const;
    double volume() const;
    // Dense indicator over the cells of a discretized torus; requires the
    // corners to sit on the (1/m)-grid.
    std::vector<double> on_chain(int resolution, int dimension) const;
};

struct SllnReport {
    long n = 0;
    double empirical_mean = 0.0;
    double exact_mean = 0.0;
    double deviation = 0.0;
    std::optional<double> threshold;  // 3 sqrt(gamma^2 / n) when the oracle is available
    bool pass = false;
};

SllnReport slln_check(const kernel::LatticeChain& chain, const std::vector<double>& f, long n,
                      std::uint64_t seed, std::optional<double> gamma2 = std::nullopt);
SllnReport slln_check(const models::AffineTorusModel& model, const BoxIndicator& f, long n,
                      std::uint64_t seed);

struct CltReport {
    std::string f_id;
    double gamma2 = 0.0;
    long trials = 0;
    long horizon = 0;
    std::vector<double> standardized;  // per-trial (1/sqrt n) Sigma_n(fbar)
    double ks_distance = 0.0;          // vs Normal(0, gamma^2); degenerate case: unused
    double slln_deviation = 0.0;       // |Sigma_n(f)/n - mean| on the first trial's path
    bool degenerate = false;
    double max_abs = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

CltReport clt_check(const kernel::LatticeChain& chain, const std::vector<double>& f, long n,
                    long trials, std::uint64_t seed, int workers = 1,
                    const std::string& f_id = "f");

struct LilReport {
    long n_max = 0;
    double gamma = 0.0;
    std::vector<std::pair<long, double>> trace;  // dyadic checkpoints of the LIL statistic
    double running_max = 0.0;
    bool pass = false;
};

LilReport lil_smoke(const kernel::LatticeChain& chain, const std::vector<double>& f, long n_max,
                    std::uint64_t seed);

// Finitely supported function (or measure) on Z^d.
struct LatticeFunction {
    std::vector<std::pair<std::vector<std::int64_t>, double>> points;
    double total() const;
};

enum class RatioMode { cesaro, strong };

struct RatioReport {
    RatioMode mode = RatioMode::cesaro;
    long horizon = 0;
    double target = 0.0;
    long first_defined = 0;              // first n with a positive denominator
    std::vector<double> ratio_sequence;  // entries for n = first_defined..horizon
    double final_ratio = 0.0;
    double deviation = 0.0;
};

// Cesaro ratios of n-step integrals from two point starts; the law must be
// adapted.
RatioReport ratio_limit_cesaro(const models::CoverModel& model, const LatticeFunction& f1,
                               const LatticeFunction& f2, const std::vector<std::int64_t>& x1,
                               const std::vector<std::int64_t>& x2, long n);

// Plain (strong) ratios from bounded finitely-supported start densities; the
// law must additionally be symmetric and aperiodic. Dirac starts are not
// accepted in this mode; that case is an open conjecture.
RatioReport ratio_limit_strong(const models::CoverModel& model, const LatticeFunction& f1,
                               const LatticeFunction& f2, const LatticeFunction& nu1,
                               const LatticeFunction& nu2, long n);

struct ConjectureReport {
    long n_max = 0;
    long first_defined = 0;
    std::vector<double> sequence;  // (mu^n * delta_x)(A) / (mu^n * m_A)(A)
    double tail_running_max = 0.0;
};

// Emits the probe sequence behind the Dirac-start conjecture; data only, no
// pass/fail verdict.
ConjectureReport conjecture_probe(const models::CoverModel& model,
                                  const std::vector<std::int64_t>& x,
                                  const std::vector<std::vector<std::int64_t>>& set_A, long n_max);

}  // namespace ergomix::mc
