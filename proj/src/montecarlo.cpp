#include "ergomix/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

namespace ergomix::mc {

namespace {

double rational_to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

double normal_cdf(double x, double sigma) {
    return 0.5 * (1.0 + std::erf(x / (sigma * std::sqrt(2.0))));
}

// One-sample Kolmogorov-Smirnov distance against N(0, sigma^2).
double ks_to_normal(std::vector<double> xs, double sigma) {
    std::sort(xs.begin(), xs.end());
    double n = static_cast<double>(xs.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double fx = normal_cdf(xs[i], sigma);
        ks = std::max(ks, (static_cast<double>(i) + 1.0) / n - fx);
        ks = std::max(ks, fx - static_cast<double>(i) / n);
    }
    return ks;
}

void run_trials(long trials, int workers, const std::function<void(long)>& body) {
    if (workers <= 1) {
        for (long t = 0; t < trials; ++t) body(t);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (long t = next.fetch_add(1); t < trials; t = next.fetch_add(1)) body(t);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

Trajectory simulate(const models::AffineTorusModel& model, const std::vector<double>& start,
                    long n, std::uint64_t seed, long thin) {
    model.validate();
    if (static_cast<int>(start.size()) != model.dimension)
        throw std::invalid_argument("simulate: start dimension mismatch");
    if (n < 0 || thin < 1) throw std::invalid_argument("simulate: bad n or thin");

    std::vector<double> comp_cdf;
    double acc = 0.0;
    for (const auto& lp : model.linear_parts) comp_cdf.push_back(acc += lp.weight);

    auto rng = trial_rng(seed, 0);
    Trajectory traj;
    traj.model_id = "affine_torus";
    traj.start = start;
    traj.seed = seed;
    traj.length = n;
    traj.thin = thin;
    std::vector<double> x = start;
    for (double& c : x) c -= std::floor(c);
    traj.states.push_back(x);
    int dim = model.dimension;
    std::vector<double> y(static_cast<std::size_t>(dim));
    for (long step = 1; step <= n; ++step) {
        std::size_t ci = sample_index(comp_cdf, uniform01(rng));
        double d = model.displacement.sample(rng);
        const auto& a = model.linear_parts[ci].matrix;
        for (int i = 0; i < dim; ++i) {
            double v = 0.0;
            for (int j = 0; j < dim; ++j)
                v += static_cast<double>(a(i, j)) * x[static_cast<std::size_t>(j)];
            v += d * static_cast<double>(model.displacement.direction[static_cast<std::size_t>(i)]);
            v -= std::floor(v);  // wrap after each affine step
            y[static_cast<std::size_t>(i)] = v;
        }
        x = y;
        if (step % thin == 0) traj.states.push_back(x);
    }
    return traj;
}

Trajectory simulate(const models::CoverModel& model, const std::vector<std::int64_t>& start,
                    long n, std::uint64_t seed, long thin) {
    model.validate();
    if (static_cast<int>(start.size()) != model.degree)
        throw std::invalid_argument("simulate: start dimension mismatch");
    if (n < 0 || thin < 1) throw std::invalid_argument("simulate: bad n or thin");

    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& a : model.step_law) cdf.push_back(acc += a.mass);

    auto rng = trial_rng(seed, 0);
    Trajectory traj;
    traj.model_id = "cover";
    traj.start.assign(start.begin(), start.end());
    traj.seed = seed;
    traj.length = n;
    traj.thin = thin;
    std::vector<std::int64_t> x = start;
    traj.states.emplace_back(x.begin(), x.end());
    for (long step = 1; step <= n; ++step) {
        std::size_t k = sample_index(cdf, uniform01(rng));
        for (int i = 0; i < model.degree; ++i)
            x[static_cast<std::size_t>(i)] += model.step_law[k].point[static_cast<std::size_t>(i)];
        if (step % thin == 0) traj.states.emplace_back(x.begin(), x.end());
    }
    return traj;
}

ChainWalker::ChainWalker(const kernel::LatticeChain& chain) : chain_(&chain) {
    if (!chain.is_torus())
        throw std::invalid_argument("ChainWalker: trajectory sampling is for torus chains");
    double acc = 0.0;
    for (std::size_t ci = 0; ci < chain.components().size(); ++ci) {
        const auto& comp = chain.components()[ci];
        for (const auto& s : comp.steps) {
            acc += comp.weight * s.mass;
            cdf_.push_back(acc);
            pair_comp_.push_back(static_cast<std::uint32_t>(ci));
            pair_offset_.push_back(s.offset);
        }
    }
}

std::size_t ChainWalker::step(std::size_t state, std::mt19937_64& rng) const {
    std::size_t pair = sample_index(cdf_, uniform01(rng));
    const auto& space = chain_->torus_space();
    int m = space.resolution, n = space.dimension;
    // The permutation part is the component's lattice map.
    std::size_t mapped = state;
    {
        // decode, apply map, re-encode, add offset mod m
        const auto& comp = chain_->components()[pair_comp_[pair]];
        std::vector<std::int64_t> x(static_cast<std::size_t>(n));
        std::size_t idx = state;
        for (int i = n - 1; i >= 0; --i) {
            x[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(idx % static_cast<std::size_t>(m));
            idx /= static_cast<std::size_t>(m);
        }
        mapped = 0;
        for (int i = 0; i < n; ++i) {
            std::int64_t v = 0;
            for (int j = 0; j < n; ++j) v += comp.map(i, j) * x[static_cast<std::size_t>(j)];
            v += pair_offset_[pair][static_cast<std::size_t>(i)];
            v %= m;
            if (v < 0) v += m;
            mapped = mapped * static_cast<std::size_t>(m) + static_cast<std::size_t>(v);
        }
    }
    return mapped;
}

std::size_t ChainWalker::uniform_state(std::mt19937_64& rng) const {
    std::size_t states = chain_->state_count();
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(states)) % states;
}

std::string to_string(Recurrence r) {
    switch (r) {
        case Recurrence::recurrent: return "recurrent";
        case Recurrence::transient: return "transient";
        case Recurrence::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

RecurrenceReport classify_recurrence(const models::CoverModel& model, int b_radius, long horizon,
                                     long trials, std::uint64_t seed, double radius_sigmas) {
    model.validate();
    model.require_adapted();
    if (horizon < 16) throw std::invalid_argument("classify_recurrence: horizon too small");
    if (trials < 1) throw std::invalid_argument("classify_recurrence: trials must be >= 1");
    if (b_radius < 0) throw std::invalid_argument("classify_recurrence: b_radius must be >= 0");

    RecurrenceReport report;
    report.horizon = horizon;
    report.b_radius = b_radius;
    report.hypothesis_symmetric = model.symmetric();
    report.ratio_threshold = 0.85;
    report.increment_threshold = 0.01;
    report.q_threshold = 0.99;
    report.away_from_one = 0.95;

    int d = model.degree;
    std::int64_t max_step = model.max_step_norm();

    // Exact Green partial sums on an absorbing window. The radius covers the
    // diffusive range; whatever escapes is tracked and only lowers the sums.
    std::vector<double> coord_var(static_cast<std::size_t>(d), 0.0);
    for (const auto& a : model.step_law)
        for (int i = 0; i < d; ++i)
            coord_var[static_cast<std::size_t>(i)] +=
                a.mass * static_cast<double>(a.point[static_cast<std::size_t>(i)]) *
                static_cast<double>(a.point[static_cast<std::size_t>(i)]);
    double sigma_max = 0.0;
    for (double v : coord_var) sigma_max = std::max(sigma_max, std::sqrt(v));
    std::int64_t radius = static_cast<std::int64_t>(
        std::ceil(radius_sigmas * sigma_max * std::sqrt(static_cast<double>(horizon)))) +
        b_radius + 2;
    radius = std::min(radius, max_step * horizon + b_radius + 2);

    auto chain = kernel::cover_window_chain(model, radius);
    const auto& box = chain.box();
    std::vector<std::size_t> b_cells;
    {
        std::vector<std::int64_t> p(static_cast<std::size_t>(d), -b_radius);
        while (true) {
            b_cells.push_back(box.index_of(p));
            int i = d - 1;
            while (i >= 0 && ++p[static_cast<std::size_t>(i)] > b_radius)
                p[static_cast<std::size_t>(i--)] = -b_radius;
            if (i < 0) break;
        }
    }

    std::vector<double> cur(chain.state_count(), 0.0), nxt, tmp;
    cur[box.index_of(std::vector<std::int64_t>(static_cast<std::size_t>(d), 0))] = 1.0;
    report.green_cumulative.reserve(static_cast<std::size_t>(horizon));
    double running = 0.0;
    for (long n = 1; n <= horizon; ++n) {
        chain.step(cur, nxt, tmp);
        cur.swap(nxt);
        double hit = 0.0;
        for (std::size_t c : b_cells) hit += cur[c];
        running += hit;
        report.green_cumulative.push_back(running);
    }
    report.escaped_mass = 1.0 - pairwise_sum(cur);

    auto S = [&](long n) { return report.green_cumulative[static_cast<std::size_t>(n - 1)]; };
    double i2 = S(horizon) - S(horizon / 2);
    double i1 = S(horizon / 2) - S(horizon / 4);
    report.increment_ratio = i1 > 0 ? i2 / i1 : 0.0;
    report.last_quarter_increment = S(horizon) - S(3 * horizon / 4);
    report.green_divergent = report.increment_ratio >= report.ratio_threshold &&
                             report.last_quarter_increment >= report.increment_threshold;
    report.green_converged = report.increment_ratio < report.ratio_threshold &&
                             report.last_quarter_increment < report.increment_threshold;
    report.renewal_return_prob = S(horizon) / (1.0 + S(horizon));
    report.q_estimate = report.green_divergent ? 1.0 : report.renewal_return_prob;

    // Monte Carlo returns to B.
    std::vector<double> cdf;
    double acc = 0.0;
    for (const auto& a : model.step_law) cdf.push_back(acc += a.mass);
    std::vector<long> visit_counts(static_cast<std::size_t>(trials), 0);
    std::vector<char> did_return(static_cast<std::size_t>(trials), 0);
    for (long t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        std::vector<std::int64_t> x(static_cast<std::size_t>(d), 0);
        long visits = 0;
        bool ret = false;
        for (long n = 1; n <= horizon; ++n) {
            std::size_t k = sample_index(cdf, uniform01(rng));
            std::int64_t norm = 0;
            for (int i = 0; i < d; ++i) {
                x[static_cast<std::size_t>(i)] +=
                    model.step_law[k].point[static_cast<std::size_t>(i)];
                norm = std::max(norm, std::abs(x[static_cast<std::size_t>(i)]));
            }
            if (norm <= b_radius) {
                ++visits;
                ret = true;
            }
        }
        visit_counts[static_cast<std::size_t>(t)] = visits;
        did_return[static_cast<std::size_t>(t)] = ret ? 1 : 0;
    }
    long ret_total = 0;
    double visit_total = 0.0;
    for (long t = 0; t < trials; ++t) {
        ret_total += did_return[static_cast<std::size_t>(t)];
        visit_total += static_cast<double>(visit_counts[static_cast<std::size_t>(t)]);
    }
    report.trials = trials;
    report.returned = ret_total;
    report.mc_return_prob = trials > 0 ? static_cast<double>(ret_total) / trials : 0.0;
    double p = report.mc_return_prob;
    report.mc_ci_halfwidth = trials > 0 ? 1.96 * std::sqrt(std::max(p * (1 - p), 0.0) / trials) : 0.0;
    report.mean_visits = trials > 0 ? visit_total / trials : 0.0;

    double se3 = trials > 0 ? 3.0 * std::sqrt(std::max(p * (1 - p), 1.0 / trials) / trials) : 0.0;
    if (report.green_divergent && report.q_estimate >= report.q_threshold) {
        report.classification = Recurrence::recurrent;
    } else if (report.green_converged && p + se3 < report.away_from_one &&
               report.renewal_return_prob < report.away_from_one) {
        report.classification = Recurrence::transient;
    } else {
        report.classification = Recurrence::inconclusive;
    }
    return report;
}

bool BoxIndicator::contains(const std::vector<double>& point) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        double a = rational_to_double(lo[i]), b = rational_to_double(hi[i]);
        if (point[i] < a || point[i] >= b) return false;
    }
    return true;
}

double BoxIndicator::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= rational_to_double(hi[i] - lo[i]);
    return v;
}

std::vector<double> BoxIndicator::on_chain(int resolution, int dimension) const {
    if (static_cast<int>(lo.size()) != dimension)
        throw std::invalid_argument("BoxIndicator: dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
        for (const Rational& r : {lo[i], hi[i]})
            if (resolution % r.denominator() != 0)
                throw std::invalid_argument(
                    "BoxIndicator: corner " + std::to_string(r.numerator()) + "/" +
                    std::to_string(r.denominator()) + " not on the 1/" +
                    std::to_string(resolution) + " grid");
    std::size_t states = 1;
    for (int i = 0; i < dimension; ++i) states *= static_cast<std::size_t>(resolution);
    std::vector<double> f(states, 0.0);
    std::vector<std::int64_t> x(static_cast<std::size_t>(dimension), 0);
    for (std::size_t idx = 0;; ++idx) {
        bool in = true;
        for (int i = 0; i < dimension; ++i) {
            Rational cell(x[static_cast<std::size_t>(i)], resolution);
            if (cell < lo[static_cast<std::size_t>(i)] || cell >= hi[static_cast<std::size_t>(i)]) {
                in = false;
                break;
            }
        }
        if (in) f[idx] = 1.0;
        int i = dimension - 1;
        while (i >= 0 && ++x[static_cast<std::size_t>(i)] == resolution)
            x[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
    }
    return f;
}

SllnReport slln_check(const kernel::LatticeChain& chain, const std::vector<double>& f, long n,
                      std::uint64_t seed, std::optional<double> gamma2) {
    if (f.size() != chain.state_count()) throw std::invalid_argument("slln_check: f shape mismatch");
    if (n < 1) throw std::invalid_argument("slln_check: n must be >= 1");
    double exact_mean = pairwise_sum(f) / static_cast<double>(chain.state_count());

    ChainWalker walker(chain);
    auto rng = trial_rng(seed, 0);
    std::size_t state = 0;
    double acc = 0.0;
    for (long k = 0; k < n; ++k) {
        acc += f[state];
        state = walker.step(state, rng);
    }
    SllnReport report;
    report.n = n;
    report.empirical_mean = acc / static_cast<double>(n);
    report.exact_mean = exact_mean;
    report.deviation = std::abs(report.empirical_mean - exact_mean);
    if (gamma2) {
        report.threshold = 3.0 * std::sqrt(*gamma2 / static_cast<double>(n));
        report.pass = report.deviation < *report.threshold;
    } else {
        report.pass = true;  // deviation reported, no oracle to gate on
    }
    return report;
}

SllnReport slln_check(const models::AffineTorusModel& model, const BoxIndicator& f, long n,
                      std::uint64_t seed) {
    model.validate();
    if (static_cast<int>(f.lo.size()) != model.dimension)
        throw std::invalid_argument("slln_check: indicator dimension mismatch");
    auto traj = simulate(model, std::vector<double>(static_cast<std::size_t>(model.dimension), 0.0),
                         n, seed, 1);
    double acc = 0.0;
    for (long k = 0; k < n; ++k)
        if (f.contains(traj.states[static_cast<std::size_t>(k)])) acc += 1.0;
    SllnReport report;
    report.n = n;
    report.empirical_mean = acc / static_cast<double>(n);
    report.exact_mean = f.volume();
    report.deviation = std::abs(report.empirical_mean - report.exact_mean);
    report.pass = true;
    return report;
}

CltReport clt_check(const kernel::LatticeChain& chain, const std::vector<double>& f, long n,
                    long trials, std::uint64_t seed, int workers, const std::string& f_id) {
    if (n < 1 || trials < 1) throw std::invalid_argument("clt_check: bad n or trials");
    auto pr = kernel::period(chain, 0, 4 * static_cast<int>(chain.state_count()) + 8);
    if (!pr.period || *pr.period != 1)
        throw std::invalid_argument(
            "clt_check: chain must be aperiodic (period " +
            (pr.period ? std::to_string(*pr.period) : std::string("inconclusive")) + ")");

    auto var = kernel::asymptotic_variance(chain, f);
    double mean = pairwise_sum(f) / static_cast<double>(chain.state_count());

    CltReport report;
    report.f_id = f_id;
    report.gamma2 = var.gamma2;
    report.trials = trials;
    report.horizon = n;
    report.standardized.assign(static_cast<std::size_t>(trials), 0.0);

    ChainWalker walker(chain);
    run_trials(trials, workers, [&](long t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        std::size_t state = walker.uniform_state(rng);  // stationary start
        double acc = 0.0;
        for (long k = 0; k < n; ++k) {
            acc += f[state] - mean;
            state = walker.step(state, rng);
        }
        report.standardized[static_cast<std::size_t>(t)] = acc / std::sqrt(static_cast<double>(n));
    });

    report.slln_deviation =
        std::abs(report.standardized[0]) / std::sqrt(static_cast<double>(n));
    report.degenerate = report.gamma2 < 1e-14;
    for (double x : report.standardized) report.max_abs = std::max(report.max_abs, std::abs(x));
    if (report.degenerate) {
        report.threshold = 5.0 / std::sqrt(static_cast<double>(n));
        report.pass = report.max_abs < report.threshold;
    } else {
        report.ks_distance = ks_to_normal(report.standardized, std::sqrt(report.gamma2));
        report.threshold = 0.05;
        report.pass = report.ks_distance < report.threshold;
    }
    return report;
}

LilReport lil_smoke(const kernel::LatticeChain& chain, const std::vector<double>& f, long n_max,
                    std::uint64_t seed) {
    if (n_max < 10000) throw std::invalid_argument("lil_smoke: n_max must be >= 10^4");
    auto var = kernel::asymptotic_variance(chain, f);
    double mean = pairwise_sum(f) / static_cast<double>(chain.state_count());

    LilReport report;
    report.n_max = n_max;
    report.gamma = std::sqrt(var.gamma2);

    ChainWalker walker(chain);
    auto rng = trial_rng(seed, 0);
    std::size_t state = 0;
    double acc = 0.0;
    long next_cp = 16;
    double running_max = -std::numeric_limits<double>::infinity();
    for (long k = 1; k <= n_max; ++k) {
        acc += f[state] - mean;
        state = walker.step(state, rng);
        if (k == next_cp) {
            double denom = std::sqrt(2.0 * static_cast<double>(k) *
                                     std::log(std::log(static_cast<double>(k))));
            double stat = acc / denom;
            running_max = std::max(running_max, stat);
            report.trace.emplace_back(k, stat);
            next_cp *= 2;
        }
    }
    report.running_max = running_max;
    report.pass = report.gamma > 0
                      ? (running_max >= 0.2 * report.gamma && running_max <= 3.0 * report.gamma)
                      : true;
    return report;
}

double LatticeFunction::total() const {
    std::vector<double> vals;
    for (const auto& [pt, v] : points) vals.push_back(v);
    return pairwise_sum(vals);
}

namespace {

struct RatioEngine {
    kernel::LatticeChain chain;
    std::vector<double> d1, d2, buf, tmp;

    RatioEngine(const models::CoverModel& model, std::int64_t radius)
        : chain(kernel::cover_window_chain(model, radius)) {
        d1.assign(chain.state_count(), 0.0);
        d2.assign(chain.state_count(), 0.0);
    }

    void add_mass(std::vector<double>& d, const std::vector<std::int64_t>& p, double mass) {
        d[chain.box().index_of(p)] += mass;
    }

    double pair_with(const std::vector<double>& d, const LatticeFunction& f) {
        double acc = 0.0;
        for (const auto& [pt, v] : f.points) acc += v * d[chain.box().index_of(pt)];
        return acc;
    }

    void step_both() {
        chain.step(d1, buf, tmp);
        d1.swap(buf);
        chain.step(d2, buf, tmp);
        d2.swap(buf);
    }
};

std::int64_t extent_of(const LatticeFunction& f) {
    std::int64_t e = 0;
    for (const auto& [pt, v] : f.points)
        for (auto c : pt) e = std::max(e, std::abs(c));
    return e;
}

void check_f_pair(const LatticeFunction& f1, const LatticeFunction& f2) {
    if (f2.points.empty() || f2.total() <= 0)
        throw std::invalid_argument("ratio: f2 must be nonnegative with positive total");
    for (const auto& [pt, v] : f2.points)
        if (v < 0) throw std::invalid_argument("ratio: f2 must be nonnegative");
    if (f1.points.empty()) throw std::invalid_argument("ratio: f1 must be finitely supported");
}

RatioReport run_ratio(RatioEngine& eng, const LatticeFunction& f1, const LatticeFunction& f2,
                      long n, RatioMode mode, double target) {
    RatioReport report;
    report.mode = mode;
    report.horizon = n;
    report.target = target;
    double num_acc = 0.0, den_acc = 0.0;
    bool defined = false;
    report.first_defined = -1;
    for (long k = 0; k <= n; ++k) {
        if (k > 0) eng.step_both();
        double num = eng.pair_with(eng.d1, f1);
        double den = eng.pair_with(eng.d2, f2);
        if (mode == RatioMode::cesaro) {
            num_acc += num;
            den_acc += den;
            num = num_acc;
            den = den_acc;
        }
        if (!defined && den > 0) {
            defined = true;
            report.first_defined = k;
        }
        if (defined) report.ratio_sequence.push_back(num / den);
    }
    if (!defined)
        throw std::invalid_argument("ratio: denominator stayed zero over the whole horizon");
    report.final_ratio = report.ratio_sequence.back();
    report.deviation = std::abs(report.final_ratio - target);
    return report;
}

}  // namespace

RatioReport ratio_limit_cesaro(const models::CoverModel& model, const LatticeFunction& f1,
                               const LatticeFunction& f2, const std::vector<std::int64_t>& x1,
                               const std::vector<std::int64_t>& x2, long n) {
    model.validate();
    model.require_adapted();
    check_f_pair(f1, f2);
    if (n < 1) throw std::invalid_argument("ratio: n must be >= 1");

    std::int64_t ext = std::max({extent_of(f1), extent_of(f2)});
    for (auto c : x1) ext = std::max(ext, std::abs(c));
    for (auto c : x2) ext = std::max(ext, std::abs(c));
    std::int64_t radius = model.max_step_norm() * n + ext + 2;

    RatioEngine eng(model, radius);
    eng.add_mass(eng.d1, x1, 1.0);
    eng.add_mass(eng.d2, x2, 1.0);
    return run_ratio(eng, f1, f2, n, RatioMode::cesaro, f1.total() / f2.total());
}

RatioReport ratio_limit_strong(const models::CoverModel& model, const LatticeFunction& f1,
                               const LatticeFunction& f2, const LatticeFunction& nu1,
                               const LatticeFunction& nu2, long n) {
    model.validate();
    model.require_adapted();
    check_f_pair(f1, f2);
    if (n < 1) throw std::invalid_argument("ratio: n must be >= 1");
    if (!model.symmetric())
        throw std::invalid_argument("strong ratio mode requires a symmetric step law");
    if (model.walk_period() != 1)
        throw std::invalid_argument(
            "strong ratio mode requires an aperiodic step law (period 2 detected)");
    for (const auto* nu : {&nu1, &nu2}) {
        if (nu->points.size() <= 1)
            throw std::invalid_argument(
                "strong ratio mode rejects Dirac starts: whether the plain ratio limit holds "
                "from point masses is an open conjecture; supply a bounded start density");
        for (const auto& [pt, v] : nu->points)
            if (v < 0) throw std::invalid_argument("strong ratio: start densities must be >= 0");
        if (std::abs(nu->total() - 1.0) > 1e-9)
            throw std::invalid_argument("strong ratio: start densities must have mass 1");
    }

    std::int64_t ext = std::max({extent_of(f1), extent_of(f2), extent_of(nu1), extent_of(nu2)});
    std::int64_t radius = model.max_step_norm() * n + ext + 2;

    RatioEngine eng(model, radius);
    for (const auto& [pt, v] : nu1.points) eng.add_mass(eng.d1, pt, v);
    for (const auto& [pt, v] : nu2.points) eng.add_mass(eng.d2, pt, v);
    return run_ratio(eng, f1, f2, n, RatioMode::strong, f1.total() / f2.total());
}

ConjectureReport conjecture_probe(const models::CoverModel& model,
                                  const std::vector<std::int64_t>& x,
                                  const std::vector<std::vector<std::int64_t>>& set_A,
                                  long n_max) {
    model.validate();
    model.require_adapted();
    if (!model.symmetric())
        throw std::invalid_argument("conjecture_probe: symmetric law required");
    if (model.walk_period() != 1)
        throw std::invalid_argument("conjecture_probe: aperiodic law required");
    if (set_A.empty()) throw std::invalid_argument("conjecture_probe: A must be nonempty");
    if (n_max < 1) throw std::invalid_argument("conjecture_probe: n_max must be >= 1");

    LatticeFunction ind_A;
    std::set<std::vector<std::int64_t>> seen;
    for (const auto& p : set_A) {
        if (!seen.insert(p).second)
            throw std::invalid_argument("conjecture_probe: duplicate point in A");
        ind_A.points.emplace_back(p, 1.0);
    }
    std::int64_t ext = extent_of(ind_A);
    for (auto c : x) ext = std::max(ext, std::abs(c));
    std::int64_t radius = model.max_step_norm() * n_max + ext + 2;

    RatioEngine eng(model, radius);
    eng.add_mass(eng.d1, x, 1.0);
    double m_a = 1.0 / static_cast<double>(set_A.size());
    for (const auto& p : set_A) eng.add_mass(eng.d2, p, m_a);

    ConjectureReport report;
    report.n_max = n_max;
    report.first_defined = -1;
    bool defined = false;
    for (long k = 0; k <= n_max; ++k) {
        if (k > 0) eng.step_both();
        double num = eng.pair_with(eng.d1, ind_A);
        double den = eng.pair_with(eng.d2, ind_A);
        if (!defined && den > 0) {
            defined = true;
            report.first_defined = k;
        }
        if (defined) report.sequence.push_back(den > 0 ? num / den : 0.0);
    }
    double tail_max = 0.0;
    std::size_t start = report.sequence.size() / 2;
    for (std::size_t i = start; i < report.sequence.size(); ++i)
        tail_max = std::max(tail_max, report.sequence[i]);
    report.tail_running_max = tail_max;
    return report;
}

}  // namespace ergomix::mc
