#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ergomix/bounds.hpp"
#include "ergomix/experiment.hpp"
#include "ergomix/kernel.hpp"
#include "ergomix/models.hpp"
#include "ergomix/montecarlo.hpp"
#include "ergomix/serialize.hpp"

namespace py = pybind11;
using namespace ergomix;

namespace {

py::object json_to_py(const io::json& j) {
    auto loads = py::module_::import("json").attr("loads");
    return loads(j.dump());
}

io::json py_json(const std::string& text) { return io::json::parse(text); }

IntMatrix matrix_from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
    return IntMatrix::from_rows(rows);
}

}  // namespace

PYBIND11_MODULE(_ergomix, m) {
    m.doc() = "Spread-out random walks on torus and lattice cover models: exact kernels, "
              "mixing certificates, recurrence classification, and limit-theorem experiments.";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<CheckFailure>(m, "CheckFailure");

    py::class_<models::AffineTorusModel>(m, "AffineTorusModel")
        .def_static("from_json",
                    [](const std::string& text) { return io::affine_from_json(py_json(text)); })
        .def("to_json", [](const models::AffineTorusModel& self) { return json_to_py(io::to_json(self)); })
        .def_property_readonly("dimension",
                               [](const models::AffineTorusModel& self) { return self.dimension; });

    py::class_<models::CoverModel>(m, "CoverModel")
        .def_static("from_json",
                    [](const std::string& text) { return io::cover_from_json(py_json(text)); })
        .def("to_json", [](const models::CoverModel& self) { return json_to_py(io::to_json(self)); })
        .def_property_readonly("degree", [](const models::CoverModel& self) { return self.degree; })
        .def("symmetric", &models::CoverModel::symmetric)
        .def("walk_period", &models::CoverModel::walk_period);

    m.def("reference_torus_model", &cli::make_reference_torus_model, py::arg("delta"),
          "Bundled two-matrix reference model with scalar density floor delta.");

    m.def(
        "check_spread_out_deterministic",
        [](const std::vector<std::vector<std::int64_t>>& a, const std::vector<std::int64_t>& v) {
            return models::check_spread_out_deterministic(matrix_from_rows(a), v);
        },
        py::arg("a"), py::arg("v"));
    m.def(
        "check_spread_out_independent",
        [](const std::vector<std::vector<std::vector<std::int64_t>>>& gens,
           const std::vector<std::int64_t>& v) {
            std::vector<IntMatrix> ms;
            for (const auto& g : gens) ms.push_back(matrix_from_rows(g));
            return models::check_spread_out_independent(ms, v);
        },
        py::arg("generators"), py::arg("v"));
    m.def(
        "measure_growth",
        [](const models::CoverModel& model, int n_max) {
            return json_to_py(io::to_json(models::measure_growth(model, n_max)));
        },
        py::arg("model"), py::arg("n_max"));
    m.def(
        "check_aperiodic_torus",
        [](const models::AffineTorusModel& model, int resolution) {
            return json_to_py(io::to_json(models::check_aperiodic_torus(model, resolution)));
        },
        py::arg("model"), py::arg("resolution"));

    py::class_<kernel::LatticeChain>(m, "LatticeChain")
        .def_property_readonly("state_count",
                               [](const kernel::LatticeChain& self) { return self.state_count(); })
        .def(
            "evolve",
            [](const kernel::LatticeChain& self, const std::vector<double>& p, long n) {
                kernel::Distribution d;
                d.p = p;
                d.mass = pairwise_sum(p);
                return self.evolve(d, n).p;
            },
            py::arg("p"), py::arg("n"))
        .def("apply_to_function", &kernel::LatticeChain::apply_to_function, py::arg("f"));

    m.def("discretize", &kernel::discretize, py::arg("model"), py::arg("resolution"));
    m.def(
        "delta", [](const kernel::LatticeChain& chain, std::size_t at) {
            return kernel::Distribution::delta(chain.state_count(), at).p;
        },
        py::arg("chain"), py::arg("at"));
    m.def(
        "tv_norm",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            kernel::Distribution da, db;
            da.p = a;
            db.p = b;
            da.mass = pairwise_sum(a);
            db.mass = pairwise_sum(b);
            return kernel::tv_norm(da, db);
        },
        py::arg("p1"), py::arg("p2"));
    m.def("stationary",
          [](const kernel::LatticeChain& chain) { return kernel::stationary(chain).p; });
    m.def(
        "period",
        [](const kernel::LatticeChain& chain, std::size_t x, int cutoff) {
            auto r = kernel::period(chain, x, cutoff);
            py::dict out;
            out["period"] = r.period ? py::object(py::int_(*r.period)) : py::object(py::none());
            out["cycle_class"] = r.cycle_class;
            return out;
        },
        py::arg("chain"), py::arg("x") = 0, py::arg("cutoff") = 256);
    m.def(
        "doeblin_coefficient",
        [](const kernel::LatticeChain& chain, int n0) {
            std::vector<std::size_t> all(chain.state_count());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            auto cert = kernel::doeblin_coefficient(chain, all, n0);
            py::dict out;
            out["n0"] = cert.n0;
            out["epsilon"] = cert.epsilon;
            out["lambda"] = cert.lambda.p;
            out["whole_space"] = cert.whole_space;
            return out;
        },
        py::arg("chain"), py::arg("n0"),
        "Whole-space minorization envelope at the given n0.");
    m.def(
        "asymptotic_variance",
        [](const kernel::LatticeChain& chain, const std::vector<double>& f, int k_max) {
            auto r = kernel::asymptotic_variance(chain, f, k_max);
            return py::make_tuple(r.gamma2, r.truncated_at);
        },
        py::arg("chain"), py::arg("f"), py::arg("k_max") = 10000);

    m.def(
        "doeblin_bound",
        [](double epsilon, int n0, long n) {
            kernel::DoeblinCertificate cert;
            cert.epsilon = epsilon;
            cert.n0 = n0;
            cert.whole_space = true;
            return bounds::doeblin_bound(cert, n);
        },
        py::arg("epsilon"), py::arg("n0"), py::arg("n"));
    m.def(
        "rosenthal_constants",
        [](double alpha, double beta, double d) {
            auto c = bounds::rosenthal_constants(alpha, beta, d);
            return py::make_tuple(c.alpha_bar, c.r_cap);
        },
        py::arg("alpha"), py::arg("beta"), py::arg("d"));
    m.def(
        "chebyshev_weights",
        [](int n) {
            auto w = bounds::chebyshev_weights(n);
            py::dict out;
            for (int k = 0; k <= n; ++k)
                if (w[static_cast<std::size_t>(k)] != 0.0) out[py::int_(k)] = w[static_cast<std::size_t>(k)];
            return out;
        },
        py::arg("n"));
    m.def(
        "escape_tail",
        [](int n, int ell) {
            auto t = bounds::escape_tail(n, ell);
            return py::make_tuple(t.tail, t.majorant);
        },
        py::arg("n"), py::arg("ell"));
    m.def(
        "carne_check",
        [](const models::CoverModel& model, const std::vector<std::vector<std::int64_t>>& set_A,
           int n) { return json_to_py(io::to_json(bounds::carne_check(model, set_A, n))); },
        py::arg("model"), py::arg("A"), py::arg("n"));

    m.def(
        "simulate_torus",
        [](const models::AffineTorusModel& model, const std::vector<double>& start, long n,
           std::uint64_t seed) { return mc::simulate(model, start, n, seed).states; },
        py::arg("model"), py::arg("start"), py::arg("n"), py::arg("seed"));
    m.def(
        "simulate_cover",
        [](const models::CoverModel& model, const std::vector<std::int64_t>& start, long n,
           std::uint64_t seed) { return mc::simulate(model, start, n, seed).states; },
        py::arg("model"), py::arg("start"), py::arg("n"), py::arg("seed"));
    m.def(
        "classify_recurrence",
        [](const models::CoverModel& model, int b_radius, long horizon, long trials,
           std::uint64_t seed) {
            return json_to_py(
                io::to_json(mc::classify_recurrence(model, b_radius, horizon, trials, seed)));
        },
        py::arg("model"), py::arg("b_radius"), py::arg("horizon"), py::arg("trials"),
        py::arg("seed"));
    m.def(
        "slln_check",
        [](const kernel::LatticeChain& chain, const std::vector<double>& f, long n,
           std::uint64_t seed) {
            auto var = kernel::asymptotic_variance(chain, f);
            return json_to_py(io::to_json(mc::slln_check(chain, f, n, seed, var.gamma2)));
        },
        py::arg("chain"), py::arg("f"), py::arg("n"), py::arg("seed"));
    m.def(
        "clt_check",
        [](const kernel::LatticeChain& chain, const std::vector<double>& f, long n, long trials,
           std::uint64_t seed, int workers) {
            return json_to_py(io::to_json(mc::clt_check(chain, f, n, trials, seed, workers)));
        },
        py::arg("chain"), py::arg("f"), py::arg("n"), py::arg("trials"), py::arg("seed"),
        py::arg("workers") = 1);
    m.def(
        "lil_smoke",
        [](const kernel::LatticeChain& chain, const std::vector<double>& f, long n_max,
           std::uint64_t seed) {
            return json_to_py(io::to_json(mc::lil_smoke(chain, f, n_max, seed)));
        },
        py::arg("chain"), py::arg("f"), py::arg("n_max"), py::arg("seed"));
    m.def(
        "ratio_limit_cesaro",
        [](const models::CoverModel& model,
           const std::vector<std::pair<std::vector<std::int64_t>, double>>& f1,
           const std::vector<std::pair<std::vector<std::int64_t>, double>>& f2,
           const std::vector<std::int64_t>& x1, const std::vector<std::int64_t>& x2, long n) {
            return json_to_py(io::to_json(mc::ratio_limit_cesaro(model, {f1}, {f2}, x1, x2, n)));
        },
        py::arg("model"), py::arg("f1"), py::arg("f2"), py::arg("x1"), py::arg("x2"),
        py::arg("n"));
    m.def(
        "ratio_limit_strong",
        [](const models::CoverModel& model,
           const std::vector<std::pair<std::vector<std::int64_t>, double>>& f1,
           const std::vector<std::pair<std::vector<std::int64_t>, double>>& f2,
           const std::vector<std::pair<std::vector<std::int64_t>, double>>& nu1,
           const std::vector<std::pair<std::vector<std::int64_t>, double>>& nu2, long n) {
            return json_to_py(
                io::to_json(mc::ratio_limit_strong(model, {f1}, {f2}, {nu1}, {nu2}, n)));
        },
        py::arg("model"), py::arg("f1"), py::arg("f2"), py::arg("nu1"), py::arg("nu2"),
        py::arg("n"),
        "Plain ratio limit from bounded start densities; Dirac starts are rejected.");
    m.def(
        "conjecture_probe",
        [](const models::CoverModel& model, const std::vector<std::int64_t>& x,
           const std::vector<std::vector<std::int64_t>>& set_A, long n_max) {
            auto r = mc::conjecture_probe(model, x, set_A, n_max);
            py::dict out;
            out["n_max"] = r.n_max;
            out["first_defined"] = r.first_defined;
            out["sequence"] = r.sequence;
            out["tail_running_max"] = r.tail_running_max;
            return out;
        },
        py::arg("model"), py::arg("x"), py::arg("A"), py::arg("n_max"));

    m.def(
        "run_experiment",
        [](const std::string& config_text, int workers) {
            auto config = cli::parse_config(py_json(config_text));
            int w = workers > 0 ? workers : cli::worker_count_from_env();
            return json_to_py(cli::to_json(cli::run(config, w)));
        },
        py::arg("config"), py::arg("workers") = 0,
        "Run an experiment from a JSON config string; returns the manifest.");
    m.def(
        "validate_config",
        [](const std::string& config_text) { cli::parse_config(py_json(config_text)); },
        py::arg("config"));
    m.def(
        "reproduce_paper_example",
        [](const std::string& out_dir) {
            return json_to_py(cli::to_json(cli::reproduce_paper_example(out_dir)));
        },
        py::arg("out_dir"));

    m.attr("__version__") = cli::kVersion;
}
