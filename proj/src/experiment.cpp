#include "ergomix/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <thread>

namespace ergomix::cli {

namespace {

using io::json;

std::string iso8601_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

const std::vector<std::string> kKinds = {
    "mixing_curve", "certify_doeblin", "rosenthal",  "lyapunov",        "carne",
    "escape_tail",  "recurrence",      "growth",     "slln",            "clt",
    "lil",          "ratio",           "conjecture_probe", "spread_out_check"};

bool kind_needs_model(const std::string& kind) {
    return kind != "rosenthal" && kind != "lyapunov" && kind != "escape_tail";
}

// Output collector: files are written under the output directory and listed
// in the manifest; empty outputs are an error.
struct Sink {
    std::filesystem::path dir;
    std::vector<std::string> files;

    explicit Sink(const std::filesystem::path& d) : dir(d) {
        std::filesystem::create_directories(dir);
    }
    void add(const std::string& name) {
        auto p = dir / name;
        if (!std::filesystem::exists(p) || std::filesystem::file_size(p) == 0)
            throw std::runtime_error("output file missing or empty: " + p.string());
        files.push_back(name);
    }
    void write_json(const std::string& name, const json& j) {
        io::write_text(dir / name, j.dump(2) + "\n");
        add(name);
    }
    void write_curve(const std::string& name, const bounds::BoundCurve& c) {
        io::write_bound_curve_csv(dir / name, c);
        add(name);
    }
    void write_sequence(const std::string& name, const std::vector<std::pair<long, double>>& rows) {
        io::write_sequence_csv(dir / name, rows);
        add(name);
    }
};

long get_long(const json& params, const std::string& key) {
    return params.at(key).get<long>();
}

long get_long_or(const json& params, const std::string& key, long fallback) {
    return params.contains(key) ? params.at(key).get<long>() : fallback;
}

double get_double_or(const json& params, const std::string& key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
}

mc::LatticeFunction lattice_function_from_json(const json& j, const std::string& context,
                                               bool masses) {
    io::check_object(j, {"points"}, {masses ? "masses" : "values"}, context);
    mc::LatticeFunction f;
    auto pts = j.at("points").get<std::vector<std::vector<std::int64_t>>>();
    std::vector<double> vals(pts.size(), 1.0);
    const char* vkey = masses ? "masses" : "values";
    if (j.contains(vkey)) {
        vals = j.at(vkey).get<std::vector<double>>();
        if (vals.size() != pts.size())
            throw ConfigError(context + ": points and values differ in length");
    }
    for (std::size_t i = 0; i < pts.size(); ++i) f.points.emplace_back(pts[i], vals[i]);
    return f;
}

mc::BoxIndicator box_indicator_from_json(const json& j, const std::string& context) {
    io::check_object(j, {"lo", "hi"}, {}, context);
    mc::BoxIndicator box;
    for (const auto& r : j.at("lo")) box.lo.push_back(io::rational_from_json(r, context + ".lo"));
    for (const auto& r : j.at("hi")) box.hi.push_back(io::rational_from_json(r, context + ".hi"));
    if (box.lo.size() != box.hi.size()) throw ConfigError(context + ": lo/hi length mismatch");
    return box;
}

// Exact TV-to-uniform curve, maximized over all starting states.
std::vector<double> worst_start_tv_curve(const kernel::LatticeChain& chain, long n_max) {
    std::size_t states = chain.state_count();
    auto uniform = kernel::Distribution::uniform(states);
    std::vector<double> worst(static_cast<std::size_t>(n_max) + 1, 0.0);
    std::vector<double> cur, nxt, tmp;
    for (std::size_t x = 0; x < states; ++x) {
        cur.assign(states, 0.0);
        cur[x] = 1.0;
        kernel::Distribution d;
        for (long n = 0; n <= n_max; ++n) {
            if (n > 0) {
                chain.step(cur, nxt, tmp);
                cur.swap(nxt);
            }
            d.p = cur;
            d.mass = 1.0;
            double tv = kernel::tv_norm(d, uniform);
            worst[static_cast<std::size_t>(n)] = std::max(worst[static_cast<std::size_t>(n)], tv);
        }
    }
    return worst;
}

kernel::DoeblinCertificate best_whole_space_certificate(const kernel::LatticeChain& chain,
                                                        int n0_max) {
    std::vector<std::size_t> all(chain.state_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    kernel::DoeblinCertificate best;
    for (int n0 = 1; n0 <= n0_max; ++n0) {
        auto cert = kernel::doeblin_coefficient(chain, all, n0);
        if (!best.valid() && cert.valid()) best = cert;
        if (cert.valid() && best.valid() &&
            std::pow(1.0 - cert.epsilon, 1.0 / cert.n0) <
                std::pow(1.0 - best.epsilon, 1.0 / best.n0))
            best = cert;
    }
    return best;
}

void enforce_curve(const bounds::BoundCurve& curve, const std::string& what, json& report) {
    for (const auto& row : curve.rows)
        if (row.empirical && *row.empirical > row.bound + 1e-12) {
            report["violation"] = json{{"n", row.n},
                                       {"bound", row.bound},
                                       {"empirical_tv", *row.empirical}};
            throw CheckFailure(what + ": empirical value " + io::format_double(*row.empirical) +
                               " exceeds bound " + io::format_double(row.bound) + " at n = " +
                               std::to_string(row.n));
        }
}

// Stationary law of a small ergodic chain by power iteration, invariance
// asserted to 1e-12.
kernel::Distribution stationary_by_iteration(const kernel::LatticeChain& chain) {
    auto d = kernel::Distribution::uniform(chain.state_count());
    std::vector<double> cur = d.p, nxt, tmp;
    for (int it = 0; it < 200000; ++it) {
        chain.step(cur, nxt, tmp);
        double diff = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) diff += std::abs(cur[i] - nxt[i]);
        cur.swap(nxt);
        if (diff < 1e-15) break;
    }
    kernel::Distribution pi;
    pi.p = cur;
    pi.recompute_mass();
    for (double& v : pi.p) v /= pi.mass;
    pi.mass = 1.0;
    auto step1 = chain.evolve(pi, 1);
    double residual = kernel::tv_norm(pi, step1);
    if (residual > 1e-12)
        throw CheckFailure("stationary iteration did not converge; residual " +
                           io::format_double(residual));
    return pi;
}

struct DriftChainSetup {
    kernel::LatticeChain chain;
    std::vector<double> V;
    long length;
};

DriftChainSetup drift_setup(const json& params) {
    long length = get_long(params, "length");
    double p_down = get_double_or(params, "p_down", 2.0 / 3.0);
    double v_base = get_double_or(params, "v_base", 1.5);
    if (v_base < 1.0) throw ConfigError("params.v_base must be >= 1");
    DriftChainSetup s{kernel::drift_chain(length, p_down), {}, length};
    s.V.resize(static_cast<std::size_t>(length) + 1);
    for (long x = 0; x <= length; ++x)
        s.V[static_cast<std::size_t>(x)] = std::pow(v_base, static_cast<double>(x));
    return s;
}

void run_kind(const ExperimentConfig& config, Sink& sink, int workers) {
    const std::string& kind = config.kind;
    const json& params = config.params;
    json report{{"kind", kind}, {"seed", config.seed}};

    auto finish = [&](const json& extra) {
        for (const auto& [k, v] : extra.items()) report[k] = v;
        sink.write_json("report.json", report);
    };

    try {
        if (kind == "spread_out_check") {
            io::check_object(params, {"variant"}, {}, "params");
            auto model = io::affine_from_json(config.model);
            std::string variant = params.at("variant").get<std::string>();
            bool result = false;
            if (variant == "deterministic") {
                if (model.linear_parts.size() != 1)
                    throw ConfigError(
                        "spread_out_check deterministic: model must have exactly one linear part");
                result = models::check_spread_out_deterministic(model.linear_parts[0].matrix,
                                                                model.displacement.direction);
            } else if (variant == "independent") {
                std::vector<IntMatrix> gens;
                for (const auto& lp : model.linear_parts) gens.push_back(lp.matrix);
                result = models::check_spread_out_independent(gens, model.displacement.direction);
            } else {
                throw ConfigError("params.variant must be deterministic or independent");
            }
            finish(json{{"variant", variant}, {"spread_out", result}});
        } else if (kind == "growth") {
            io::check_object(params, {"n_max"}, {}, "params");
            auto model = io::cover_from_json(config.model);
            auto g = models::measure_growth(model, static_cast<int>(get_long(params, "n_max")));
            std::vector<std::pair<long, double>> rows;
            for (std::size_t i = 0; i < g.ball_sizes.size(); ++i)
                rows.emplace_back(static_cast<long>(i + 1), static_cast<double>(g.ball_sizes[i]));
            sink.write_sequence("curve.csv", rows);
            finish(io::to_json(g));
        } else if (kind == "mixing_curve" || kind == "certify_doeblin") {
            if (kind == "certify_doeblin")
                io::check_object(params, {"resolution", "n0"}, {"n_max", "dump_vectors"},
                                 "params");
            else
                io::check_object(params, {"resolution"}, {"n_max", "n0_search_max"}, "params");
            auto model = io::affine_from_json(config.model);
            int resolution = static_cast<int>(get_long(params, "resolution"));
            long n_max = get_long_or(params, "n_max", 100);
            auto chain = kernel::discretize(model, resolution);

            kernel::DoeblinCertificate cert;
            if (kind == "certify_doeblin") {
                std::vector<std::size_t> all(chain.state_count());
                for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
                cert = kernel::doeblin_coefficient(chain, all,
                                                   static_cast<int>(get_long(params, "n0")));
            } else {
                cert = best_whole_space_certificate(
                    chain, static_cast<int>(get_long_or(params, "n0_search_max", 6)));
            }

            auto worst = worst_start_tv_curve(chain, n_max);
            bounds::BoundCurve curve;
            curve.provenance = cert.valid()
                                   ? "whole-space minorization: 2(1-eps)^floor(n/n0), eps = " +
                                         io::format_double(cert.epsilon) +
                                         ", n0 = " + std::to_string(cert.n0)
                                   : "no whole-space certificate found; trivial bound 2";
            for (long n = 0; n <= n_max; ++n)
                curve.rows.push_back({n,
                                      cert.valid() ? bounds::doeblin_bound(cert, n) : 2.0,
                                      worst[static_cast<std::size_t>(n)]});
            sink.write_curve("curve.csv", curve);
            if (kind == "mixing_curve") {
                // Fitted empirical decay rate (data, not a certified constant):
                // least squares of log TV against n over the numerically
                // meaningful tail.
                double sx = 0, sy = 0, sxx = 0, sxy = 0;
                long count = 0;
                for (long n = 1; n <= n_max; ++n) {
                    double tv = worst[static_cast<std::size_t>(n)];
                    if (tv < 1e-13) break;
                    double y = std::log(tv);
                    sx += static_cast<double>(n);
                    sy += y;
                    sxx += static_cast<double>(n) * n;
                    sxy += static_cast<double>(n) * y;
                    ++count;
                }
                if (count >= 4) {
                    double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
                    report["fitted_decay_rate_per_step"] = std::exp(slope);
                    report["fitted_over_n"] = count;
                }
            }
            if (params.contains("dump_vectors") && params.at("dump_vectors").get<bool>() &&
                cert.valid()) {
                std::vector<std::size_t> shape(static_cast<std::size_t>(model.dimension),
                                               static_cast<std::size_t>(resolution));
                io::write_vector_f64(sink.dir / "lambda", cert.lambda.p, shape);
                sink.add("lambda.f64");
                sink.add("lambda.json");
            }
            report["certificate"] = io::to_json(cert);
            enforce_curve(curve, kind, report);
            finish(json{{"resolution", resolution}, {"n_max", n_max}});
        } else if (kind == "lyapunov") {
            io::check_object(params, {"length", "alpha"}, {"p_down", "v_base"}, "params");
            auto setup = drift_setup(params);
            auto drift = bounds::verify_lyapunov(setup.chain, setup.V,
                                                 params.at("alpha").get<double>());
            json extra{{"ok", drift.ok}, {"certificate", io::to_json(drift.cert)}};
            if (!drift.ok) extra["reason"] = drift.reason;
            finish(extra);
            if (!drift.ok) throw CheckFailure("lyapunov: " + drift.reason);
        } else if (kind == "rosenthal") {
            io::check_object(params, {"length", "alpha", "d", "n_max"},
                             {"p_down", "v_base", "n0", "start"}, "params");
            auto setup = drift_setup(params);
            double alpha = params.at("alpha").get<double>();
            double d = params.at("d").get<double>();
            long n_max = get_long(params, "n_max");
            long start = get_long_or(params, "start", setup.length);

            auto drift = bounds::verify_lyapunov(setup.chain, setup.V, alpha);
            if (!drift.ok) throw CheckFailure("rosenthal: drift verification failed: " + drift.reason);
            std::vector<std::size_t> set_A;
            for (std::size_t x = 0; x < setup.V.size(); ++x)
                if (setup.V[x] <= d) set_A.push_back(x);
            if (set_A.empty() || set_A.size() == setup.V.size())
                throw ConfigError("rosenthal: {V <= d} must be a proper nonempty sublevel set");

            long n0_param = get_long_or(params, "n0", 0);
            kernel::DoeblinCertificate cert;
            if (n0_param > 0) {
                cert = kernel::doeblin_coefficient(setup.chain, set_A, static_cast<int>(n0_param));
            } else {
                for (int n0 = 1; n0 <= 12; ++n0) {
                    auto c = kernel::doeblin_coefficient(setup.chain, set_A, n0);
                    if (c.valid() &&
                        (!cert.valid() || std::pow(1 - c.epsilon, 1.0 / c.n0) <
                                              std::pow(1 - cert.epsilon, 1.0 / cert.n0)))
                        cert = c;
                }
            }
            if (!cert.valid())
                throw CheckFailure("rosenthal: no minorization found on {V <= d} for n0 <= 12");

            auto constants = bounds::rosenthal_constants(alpha, drift.cert.beta, d);
            auto pi = stationary_by_iteration(setup.chain);
            double nu_v = setup.V[static_cast<std::size_t>(start)];

            bounds::BoundCurve curve;
            curve.provenance =
                "drift-and-minorization: alpha_bar = " + io::format_double(constants.alpha_bar) +
                ", R = " + io::format_double(constants.r_cap) +
                ", eps = " + io::format_double(cert.epsilon) + ", n0 = " + std::to_string(cert.n0);
            json jcurve = json::array();
            std::vector<double> cur(setup.chain.state_count(), 0.0), nxt, tmp;
            cur[static_cast<std::size_t>(start)] = 1.0;
            for (long n = 1; n <= n_max; ++n) {
                setup.chain.step(cur, nxt, tmp);
                cur.swap(nxt);
                kernel::Distribution dn;
                dn.p = cur;
                dn.mass = 1.0;
                double tv = kernel::tv_norm(dn, pi);
                auto best = bounds::rosenthal_bound_best(cert, drift.cert, d, nu_v, n);
                curve.rows.push_back({n, best.bound, tv});
                jcurve.push_back(json{{"n", n}, {"j", best.j}});
            }
            sink.write_curve("curve.csv", curve);
            report["constants"] = json{{"alpha_bar", constants.alpha_bar},
                                       {"R", constants.r_cap},
                                       {"epsilon", cert.epsilon},
                                       {"n0", cert.n0},
                                       {"beta", drift.cert.beta},
                                       {"d", d},
                                       {"nu_V_integral", nu_v}};
            report["best_j"] = jcurve;
            enforce_curve(curve, "rosenthal", report);
            finish(json::object());
        } else if (kind == "carne") {
            io::check_object(params, {"n_max"}, {"A"}, "params");
            auto model = io::cover_from_json(config.model);
            long n_max = get_long(params, "n_max");
            std::vector<std::vector<std::int64_t>> set_A;
            if (!params.contains("A") || params.at("A") == "origin") {
                set_A.push_back(std::vector<std::int64_t>(static_cast<std::size_t>(model.degree), 0));
            } else if (params.at("A") == "one_step_ball") {
                std::set<std::vector<std::int64_t>> pts;
                pts.insert(std::vector<std::int64_t>(static_cast<std::size_t>(model.degree), 0));
                for (const auto& a : model.step_law)
                    if (a.mass > 0) {
                        pts.insert(a.point);
                        std::vector<std::int64_t> neg(a.point.size());
                        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -a.point[i];
                        pts.insert(neg);
                    }
                set_A.assign(pts.begin(), pts.end());
            } else {
                set_A = params.at("A").get<std::vector<std::vector<std::int64_t>>>();
            }
            json rows = json::array();
            std::vector<std::pair<long, double>> margins;
            for (long n = 1; n <= n_max; ++n) {
                auto r = bounds::carne_check(model, set_A, static_cast<int>(n));
                rows.push_back(io::to_json(r));
                margins.emplace_back(n, r.lhs - r.rhs);
            }
            sink.write_sequence("curve.csv", margins);
            finish(json{{"rows", rows}, {"A_size", set_A.size()}});
        } else if (kind == "escape_tail") {
            io::check_object(params, {"n"}, {}, "params");
            int n = static_cast<int>(get_long(params, "n"));
            json rows = json::array();
            std::vector<std::pair<long, double>> margins;
            for (int ell = 1; ell <= n; ++ell) {
                auto t = bounds::escape_tail(n, ell);
                json r = io::to_json(t);
                r["ell"] = ell;
                rows.push_back(r);
                margins.emplace_back(ell, t.majorant - t.tail);
            }
            sink.write_sequence("curve.csv", margins);
            finish(json{{"n", n}, {"rows", rows}});
        } else if (kind == "recurrence") {
            io::check_object(params, {"horizon"}, {"b_radius", "trials", "radius_sigmas"},
                             "params");
            auto model = io::cover_from_json(config.model);
            auto r = mc::classify_recurrence(
                model, static_cast<int>(get_long_or(params, "b_radius", 0)),
                get_long(params, "horizon"), get_long_or(params, "trials", 2000), config.seed,
                get_double_or(params, "radius_sigmas", 4.5));
            std::vector<std::pair<long, double>> rows;
            for (std::size_t i = 0; i < r.green_cumulative.size(); ++i)
                rows.emplace_back(static_cast<long>(i + 1), r.green_cumulative[i]);
            sink.write_sequence("curve.csv", rows);
            finish(io::to_json(r));
        } else if (kind == "slln") {
            io::check_object(params, {"resolution", "f", "n"}, {}, "params");
            auto model = io::affine_from_json(config.model);
            int resolution = static_cast<int>(get_long(params, "resolution"));
            auto chain = kernel::discretize(model, resolution);
            auto box = box_indicator_from_json(params.at("f"), "params.f");
            auto f = box.on_chain(resolution, model.dimension);
            auto var = kernel::asymptotic_variance(chain, f);
            auto r = mc::slln_check(chain, f, get_long(params, "n"), config.seed, var.gamma2);
            finish(io::to_json(r));
            if (!r.pass)
                throw CheckFailure("slln: deviation " + io::format_double(r.deviation) +
                                   " exceeds 3 sqrt(gamma^2/n)");
        } else if (kind == "clt") {
            io::check_object(params, {"resolution", "f", "n", "trials"}, {}, "params");
            auto model = io::affine_from_json(config.model);
            int resolution = static_cast<int>(get_long(params, "resolution"));
            auto chain = kernel::discretize(model, resolution);
            auto box = box_indicator_from_json(params.at("f"), "params.f");
            auto f = box.on_chain(resolution, model.dimension);
            auto r = mc::clt_check(chain, f, get_long(params, "n"), get_long(params, "trials"),
                                   config.seed, workers, "box indicator");
            std::vector<std::pair<long, double>> rows;
            for (std::size_t i = 0; i < r.standardized.size(); ++i)
                rows.emplace_back(static_cast<long>(i), r.standardized[i]);
            sink.write_sequence("curve.csv", rows);
            finish(io::to_json(r));
            if (!r.pass)
                throw CheckFailure(r.degenerate
                                       ? "clt: degenerate sums exceed 5/sqrt(n)"
                                       : "clt: KS distance " + io::format_double(r.ks_distance) +
                                             " is not below 0.05");
        } else if (kind == "lil") {
            io::check_object(params, {"resolution", "f", "n_max"}, {}, "params");
            auto model = io::affine_from_json(config.model);
            int resolution = static_cast<int>(get_long(params, "resolution"));
            auto chain = kernel::discretize(model, resolution);
            auto box = box_indicator_from_json(params.at("f"), "params.f");
            auto f = box.on_chain(resolution, model.dimension);
            auto r = mc::lil_smoke(chain, f, get_long(params, "n_max"), config.seed);
            std::vector<std::pair<long, double>> rows;
            for (const auto& [n, v] : r.trace) rows.emplace_back(n, v);
            sink.write_sequence("curve.csv", rows);
            finish(io::to_json(r));
            if (!r.pass)
                throw CheckFailure("lil: running max " + io::format_double(r.running_max) +
                                   " outside [0.2 gamma, 3 gamma]");
        } else if (kind == "ratio") {
            io::check_object(params, {"mode", "f1", "f2", "n"},
                             {"x1", "x2", "nu1", "nu2", "tolerance"}, "params");
            auto model = io::cover_from_json(config.model);
            std::string mode = params.at("mode").get<std::string>();
            auto f1 = lattice_function_from_json(params.at("f1"), "params.f1", false);
            auto f2 = lattice_function_from_json(params.at("f2"), "params.f2", false);
            long n = get_long(params, "n");
            mc::RatioReport r;
            if (mode == "cesaro") {
                if (params.contains("nu1") || params.contains("nu2"))
                    throw ConfigError("ratio cesaro: takes point starts x1/x2, not densities");
                if (!params.contains("x1") || !params.contains("x2"))
                    throw ConfigError("ratio cesaro: params.x1 and params.x2 are required");
                r = mc::ratio_limit_cesaro(model, f1, f2,
                                           params.at("x1").get<std::vector<std::int64_t>>(),
                                           params.at("x2").get<std::vector<std::int64_t>>(), n);
            } else if (mode == "strong") {
                if (params.contains("x1") || params.contains("x2"))
                    throw ConfigError(
                        "ratio strong: point starts are rejected (the plain ratio limit from "
                        "Dirac masses is an open conjecture); supply nu1/nu2 densities");
                if (!params.contains("nu1") || !params.contains("nu2"))
                    throw ConfigError("ratio strong: params.nu1 and params.nu2 are required");
                r = mc::ratio_limit_strong(
                    model, f1, f2, lattice_function_from_json(params.at("nu1"), "params.nu1", true),
                    lattice_function_from_json(params.at("nu2"), "params.nu2", true), n);
            } else {
                throw ConfigError("ratio: mode must be cesaro or strong");
            }
            std::vector<std::pair<long, double>> rows;
            for (std::size_t i = 0; i < r.ratio_sequence.size(); ++i)
                rows.emplace_back(r.first_defined + static_cast<long>(i), r.ratio_sequence[i]);
            sink.write_sequence("curve.csv", rows);
            report["f1"] = params.at("f1");
            report["f2"] = params.at("f2");
            for (const char* key : {"x1", "x2", "nu1", "nu2"})
                if (params.contains(key)) report["starts"][key] = params.at(key);
            finish(io::to_json(r));
            if (params.contains("tolerance") &&
                r.deviation > params.at("tolerance").get<double>())
                throw CheckFailure("ratio: deviation " + io::format_double(r.deviation) +
                                   " exceeds tolerance");
        } else if (kind == "conjecture_probe") {
            io::check_object(params, {"x", "A", "n_max"}, {}, "params");
            auto model = io::cover_from_json(config.model);
            auto r = mc::conjecture_probe(
                model, params.at("x").get<std::vector<std::int64_t>>(),
                params.at("A").get<std::vector<std::vector<std::int64_t>>>(),
                get_long(params, "n_max"));
            std::vector<std::pair<long, double>> rows;
            for (std::size_t i = 0; i < r.sequence.size(); ++i)
                rows.emplace_back(r.first_defined + static_cast<long>(i), r.sequence[i]);
            sink.write_sequence("curve.csv", rows);
            finish(io::to_json(r));  // exploratory data only: nothing asserted
        } else {
            throw ConfigError("unknown experiment kind: " + kind);
        }
    } catch (const CheckFailure&) {
        if (!std::filesystem::exists(sink.dir / "report.json")) sink.write_json("report.json", report);
        throw;
    }
}

}  // namespace

ExperimentConfig parse_config(const io::json& j) {
    io::check_object(j, {"kind"}, {"model", "params", "seed", "output"}, "config");
    ExperimentConfig config;
    config.kind = j.at("kind").get<std::string>();
    if (std::find(kKinds.begin(), kKinds.end(), config.kind) == kKinds.end())
        throw ConfigError("config: unknown kind \"" + config.kind + "\"");
    if (kind_needs_model(config.kind)) {
        if (!j.contains("model")) throw ConfigError("config: kind " + config.kind + " needs a model");
        config.model = j.at("model");
        io::model_from_json(config.model);  // validate eagerly
    } else if (j.contains("model")) {
        throw ConfigError("config: kind " + config.kind + " does not take a model");
    }
    config.params = j.contains("params") ? j.at("params") : io::json::object();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output")) config.output = j.at("output").get<std::string>();
    config.canonical = j;
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    io::json j;
    try {
        j = io::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

io::json to_json(const RunManifest& m) {
    return io::json{{"config_hash", m.config_hash},
                    {"tool_version", m.tool_version},
                    {"started_at", m.started_at},
                    {"finished_at", m.finished_at},
                    {"files", m.files}};
}

std::string config_hash(const io::json& canonical) {
    std::string dump = canonical.dump();
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunManifest run(const ExperimentConfig& config, int workers) {
    RunManifest manifest;
    manifest.config_hash = config_hash(config.canonical);
    manifest.tool_version = kVersion;
    manifest.started_at = iso8601_now();
    Sink sink{config.output};
    try {
        run_kind(config, sink, workers);
    } catch (const CheckFailure&) {
        manifest.finished_at = iso8601_now();
        manifest.files = sink.files;
        io::write_text(sink.dir / "manifest.json", to_json(manifest).dump(2) + "\n");
        throw;
    }
    manifest.finished_at = iso8601_now();
    manifest.files = sink.files;
    manifest.files.push_back("manifest.json");
    io::write_text(sink.dir / "manifest.json", to_json(manifest).dump(2) + "\n");
    return manifest;
}

models::AffineTorusModel make_reference_torus_model(double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("make_reference_torus_model: delta in (0,1]");
    models::AffineTorusModel m;
    m.dimension = 2;
    m.linear_parts.push_back({IntMatrix(2, {2, 1, 1, 1}), 0.5});
    m.linear_parts.push_back({IntMatrix(2, {1, 1, 1, 2}), 0.5});
    m.displacement.direction = {1, 0};
    m.displacement.pieces.push_back({Rational(0), Rational(1), delta});
    if (delta < 1.0) m.displacement.atoms.push_back({Rational(0), 1.0 - delta});
    m.independent = true;
    m.validate();
    return m;
}

RunManifest reproduce_paper_example(const std::filesystem::path& out_dir) {
    RunManifest manifest;
    io::json canonical{{"kind", "reproduce-paper-example"}};
    manifest.config_hash = config_hash(canonical);
    manifest.tool_version = kVersion;
    manifest.started_at = iso8601_now();
    Sink sink{out_dir};

    const int resolution = 8;
    const long n_max = 200;
    json report{{"kind", "reproduce-paper-example"},
                {"resolution", resolution},
                {"n_max", n_max}};

    try {
        for (double delta : {1.0, 0.5}) {
            auto model = make_reference_torus_model(delta);
            auto chain = kernel::discretize(model, resolution);
            std::vector<std::size_t> all(chain.state_count());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            auto cert = kernel::doeblin_coefficient(chain, all, 2);
            if (!cert.valid())
                throw CheckFailure("reference example: two-step minorization failed");

            auto worst = worst_start_tv_curve(chain, n_max);
            bounds::BoundCurve curve;
            curve.provenance = "two-step minorization with density floor " +
                               io::format_double(delta) + ": 2(1 - delta^2)^floor(n/2)";
            for (long n = 0; n <= n_max; ++n)
                curve.rows.push_back(
                    {n, 2.0 * std::pow(1.0 - delta * delta, static_cast<double>(n / 2)),
                     worst[static_cast<std::size_t>(n)]});
            std::string name = delta == 1.0 ? "curve_delta_1.csv" : "curve_delta_0p5.csv";
            sink.write_curve(name, curve);

            std::string key = delta == 1.0 ? "delta_1" : "delta_0p5";
            report[key] = json{{"epsilon", cert.epsilon},
                               {"n0", 2},
                               {"max_tv_from_n2", [&] {
                                    double m = 0.0;
                                    for (long n = 2; n <= n_max; ++n)
                                        m = std::max(m, worst[static_cast<std::size_t>(n)]);
                                    return m;
                                }()}};
            enforce_curve(curve, "reference example (delta " + io::format_double(delta) + ")",
                          report);
            if (delta == 1.0) {
                double tail = report[key]["max_tv_from_n2"].get<double>();
                if (tail > 1e-10)
                    throw CheckFailure(
                        "reference example: exact TV after two steps should vanish, got " +
                        io::format_double(tail));
            }
        }
        sink.write_json("report.json", report);
    } catch (const CheckFailure&) {
        if (!std::filesystem::exists(sink.dir / "report.json"))
            sink.write_json("report.json", report);
        manifest.finished_at = iso8601_now();
        manifest.files = sink.files;
        io::write_text(sink.dir / "manifest.json", to_json(manifest).dump(2) + "\n");
        throw;
    }
    manifest.finished_at = iso8601_now();
    manifest.files = sink.files;
    manifest.files.push_back("manifest.json");
    io::write_text(sink.dir / "manifest.json", to_json(manifest).dump(2) + "\n");
    return manifest;
}

int worker_count_from_env() {
    if (const char* env = std::getenv("ERGOMIX_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return std::min(w, 64);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(std::min(hc, 8u));
}

}  // namespace ergomix::cli
