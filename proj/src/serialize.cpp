#include "ergomix/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>

namespace ergomix::io {

void check_object(const json& j, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional, const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    std::set<std::string> allowed(required.begin(), required.end());
    allowed.insert(optional.begin(), optional.end());
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError(context + ": unknown key \"" + key + "\"");
    for (const auto& key : required)
        if (!j.contains(key))
            throw ConfigError(context + ": missing required key \"" + key + "\"");
}

json to_json(const Rational& r) {
    return json{{"num", r.numerator()}, {"den", r.denominator()}};
}

Rational rational_from_json(const json& j, const std::string& context) {
    check_object(j, {"num", "den"}, {}, context);
    std::int64_t num = j.at("num").get<std::int64_t>();
    std::int64_t den = j.at("den").get<std::int64_t>();
    if (den == 0) throw ConfigError(context + ": zero denominator");
    return Rational(num, den);
}

json to_json(const IntMatrix& m) {
    json rows = json::array();
    for (const auto& r : m.rows()) rows.push_back(r);
    return rows;
}

IntMatrix matrix_from_json(const json& j, const std::string& context) {
    if (!j.is_array() || j.empty()) throw ConfigError(context + ": expected a non-empty array");
    std::vector<std::vector<std::int64_t>> rows;
    for (const auto& row : j) {
        if (!row.is_array()) throw ConfigError(context + ": matrix rows must be arrays");
        rows.push_back(row.get<std::vector<std::int64_t>>());
        if (rows.back().size() != j.size())
            throw ConfigError(context + ": matrix must be square (row-major integer arrays)");
    }
    return IntMatrix::from_rows(rows);
}

json to_json(const models::AffineTorusModel& m) {
    json lp = json::array();
    for (const auto& part : m.linear_parts)
        lp.push_back(json{{"matrix", to_json(part.matrix)}, {"weight", part.weight}});
    json atoms = json::array();
    for (const auto& a : m.displacement.atoms)
        atoms.push_back(json{{"position", to_json(a.position)}, {"mass", a.mass}});
    json pieces = json::array();
    for (const auto& p : m.displacement.pieces)
        pieces.push_back(
            json{{"lo", to_json(p.lo)}, {"hi", to_json(p.hi)}, {"height", p.height}});
    return json{{"type", "affine_torus"},
                {"dimension", m.dimension},
                {"linear_parts", lp},
                {"displacement",
                 json{{"direction", m.displacement.direction},
                      {"atoms", atoms},
                      {"pieces", pieces}}},
                {"independent", m.independent}};
}

models::AffineTorusModel affine_from_json(const json& j) {
    check_object(j, {"type", "dimension", "linear_parts", "displacement"}, {"independent"},
                 "model");
    if (j.at("type") != "affine_torus") throw ConfigError("model: type must be affine_torus");
    models::AffineTorusModel m;
    m.dimension = j.at("dimension").get<int>();
    for (const auto& part : j.at("linear_parts")) {
        check_object(part, {"matrix", "weight"}, {}, "model.linear_parts[]");
        models::LinearPart lp;
        lp.matrix = matrix_from_json(part.at("matrix"), "model.linear_parts[].matrix");
        lp.weight = part.at("weight").get<double>();
        m.linear_parts.push_back(std::move(lp));
    }
    const json& disp = j.at("displacement");
    check_object(disp, {"direction"}, {"atoms", "pieces"}, "model.displacement");
    m.displacement.direction = disp.at("direction").get<std::vector<std::int64_t>>();
    if (disp.contains("atoms"))
        for (const auto& a : disp.at("atoms")) {
            check_object(a, {"position", "mass"}, {}, "model.displacement.atoms[]");
            m.displacement.atoms.push_back(
                {rational_from_json(a.at("position"), "atom position"), a.at("mass").get<double>()});
        }
    if (disp.contains("pieces"))
        for (const auto& p : disp.at("pieces")) {
            check_object(p, {"lo", "hi", "height"}, {}, "model.displacement.pieces[]");
            m.displacement.pieces.push_back({rational_from_json(p.at("lo"), "piece lo"),
                                             rational_from_json(p.at("hi"), "piece hi"),
                                             p.at("height").get<double>()});
        }
    if (j.contains("independent")) m.independent = j.at("independent").get<bool>();
    m.validate();
    return m;
}

json to_json(const models::CoverModel& m) {
    json law = json::array();
    for (const auto& a : m.step_law) law.push_back(json{{"point", a.point}, {"mass", a.mass}});
    return json{{"type", "cover"}, {"degree", m.degree}, {"step_law", law}};
}

models::CoverModel cover_from_json(const json& j) {
    check_object(j, {"type", "degree", "step_law"}, {}, "model");
    if (j.at("type") != "cover") throw ConfigError("model: type must be cover");
    models::CoverModel m;
    m.degree = j.at("degree").get<int>();
    for (const auto& a : j.at("step_law")) {
        check_object(a, {"point", "mass"}, {}, "model.step_law[]");
        m.step_law.push_back(
            {a.at("point").get<std::vector<std::int64_t>>(), a.at("mass").get<double>()});
    }
    m.validate();
    return m;
}

AnyModel model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError("model: expected an object with a \"type\" key");
    std::string type = j.at("type").get<std::string>();
    if (type == "affine_torus") return affine_from_json(j);
    if (type == "cover") return cover_from_json(j);
    throw ConfigError("model: unknown type \"" + type + "\"");
}

json to_json(const models::GrowthReport& r) {
    return json{{"ball_sizes", r.ball_sizes},
                {"fitted_degree", r.fitted_degree},
                {"classification", models::to_string(r.classification)}};
}

json to_json(const models::AperiodicityReport& r) {
    json out{{"aperiodic", r.aperiodic}, {"rationale", r.rationale}};
    if (r.period)
        out["period"] = *r.period;
    else
        out["period"] = nullptr;
    return out;
}

json to_json(const kernel::DoeblinCertificate& c) {
    return json{{"n0", c.n0},
                {"epsilon", c.epsilon},
                {"whole_space", c.whole_space},
                {"set_size", c.set_A.size()},
                {"lambda_mass", c.lambda.mass}};
}

json to_json(const bounds::LyapunovCertificate& c) {
    return json{{"alpha", c.alpha},
                {"beta", c.beta},
                {"region", c.region},
                {"admissibility_threshold", 2.0 * c.beta / (1.0 - c.alpha)}};
}

json to_json(const bounds::CarneReport& r) {
    return json{{"n", r.n},           {"ell", r.ell},
                {"lhs", r.lhs},       {"rhs", r.rhs},
                {"ball_n_plus_1", r.ball_n_plus_1}, {"ball_ell", r.ball_ell}};
}

json to_json(const bounds::EscapeTail& t) {
    return json{{"tail", t.tail}, {"majorant", t.majorant}};
}

json to_json(const bounds::BoundCurve& c) {
    json rows = json::array();
    for (const auto& row : c.rows) {
        json r{{"n", row.n}, {"bound", row.bound}};
        if (row.empirical) r["empirical_tv"] = *row.empirical;
        rows.push_back(r);
    }
    return json{{"provenance", c.provenance}, {"rows", rows}};
}

json to_json(const mc::RecurrenceReport& r) {
    return json{{"horizon", r.horizon},
                {"b_radius", r.b_radius},
                {"hypothesis_symmetric", r.hypothesis_symmetric},
                {"escaped_mass", r.escaped_mass},
                {"green_cumulative", r.green_cumulative},
                {"green_total", r.green_cumulative.empty() ? 0.0 : r.green_cumulative.back()},
                {"increment_ratio", r.increment_ratio},
                {"last_quarter_increment", r.last_quarter_increment},
                {"green_divergent", r.green_divergent},
                {"green_converged", r.green_converged},
                {"renewal_return_prob", r.renewal_return_prob},
                {"q_estimate", r.q_estimate},
                {"trials", r.trials},
                {"returned", r.returned},
                {"mc_return_prob", r.mc_return_prob},
                {"mc_ci_halfwidth", r.mc_ci_halfwidth},
                {"mean_visits", r.mean_visits},
                {"classification", mc::to_string(r.classification)},
                {"thresholds",
                 json{{"increment_ratio", r.ratio_threshold},
                      {"last_quarter_increment", r.increment_threshold},
                      {"q", r.q_threshold},
                      {"away_from_one", r.away_from_one}}}};
}

json to_json(const mc::SllnReport& r) {
    json out{{"n", r.n},
             {"empirical_mean", r.empirical_mean},
             {"exact_mean", r.exact_mean},
             {"deviation", r.deviation},
             {"pass", r.pass}};
    if (r.threshold) out["threshold"] = *r.threshold;
    return out;
}

json to_json(const mc::CltReport& r) {
    return json{{"f", r.f_id},
                {"gamma2", r.gamma2},
                {"trials", r.trials},
                {"horizon", r.horizon},
                {"standardized", r.standardized},
                {"ks_distance", r.ks_distance},
                {"slln_deviation", r.slln_deviation},
                {"degenerate", r.degenerate},
                {"max_abs", r.max_abs},
                {"threshold", r.threshold},
                {"pass", r.pass}};
}

json to_json(const mc::LilReport& r) {
    json trace = json::array();
    for (const auto& [n, v] : r.trace) trace.push_back(json{{"n", n}, {"value", v}});
    return json{{"n_max", r.n_max},
                {"gamma", r.gamma},
                {"running_max", r.running_max},
                {"trace", trace},
                {"pass", r.pass}};
}

json to_json(const mc::RatioReport& r) {
    return json{{"mode", r.mode == mc::RatioMode::cesaro ? "cesaro" : "strong"},
                {"horizon", r.horizon},
                {"target", r.target},
                {"first_defined", r.first_defined},
                {"ratio_sequence", r.ratio_sequence},
                {"final_ratio", r.final_ratio},
                {"deviation", r.deviation}};
}

json to_json(const mc::ConjectureReport& r) {
    return json{{"n_max", r.n_max},
                {"first_defined", r.first_defined},
                {"sequence", r.sequence},
                {"tail_running_max", r.tail_running_max}};
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_bound_curve_csv(const std::filesystem::path& path, const bounds::BoundCurve& curve) {
    std::string csv = "n,bound,empirical_tv\n";
    for (const auto& row : curve.rows) {
        csv += std::to_string(row.n);
        csv += ',';
        csv += format_double(row.bound);
        csv += ',';
        if (row.empirical) csv += format_double(*row.empirical);
        csv += '\n';
    }
    write_text(path, csv);
}

void write_sequence_csv(const std::filesystem::path& path,
                        const std::vector<std::pair<long, double>>& rows) {
    std::string csv = "n,value\n";
    for (const auto& [n, v] : rows) {
        csv += std::to_string(n);
        csv += ',';
        csv += format_double(v);
        csv += '\n';
    }
    write_text(path, csv);
}

void write_vector_f64(const std::filesystem::path& stem, std::span<const double> data,
                      const std::vector<std::size_t>& shape) {
    std::size_t count = 1;
    for (auto s : shape) count *= s;
    if (count != data.size())
        throw std::invalid_argument("write_vector_f64: shape does not match data size");
    std::filesystem::path bin = stem;
    bin += ".f64";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + bin.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + bin.string());

    json sidecar{{"dtype", "float64"},
                 {"count", data.size()},
                 {"shape", shape},
                 {"order", "row-major"}};
    std::filesystem::path meta = stem;
    meta += ".json";
    write_text(meta, sidecar.dump(2) + "\n");
}

std::vector<double> read_vector_f64(const std::filesystem::path& stem) {
    std::filesystem::path meta = stem;
    meta += ".json";
    std::ifstream metain(meta);
    if (!metain) throw std::runtime_error("cannot open " + meta.string());
    json sidecar = json::parse(metain);
    std::size_t count = sidecar.at("count").get<std::size_t>();

    std::filesystem::path bin = stem;
    bin += ".f64";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + bin.string());
    std::vector<double> data(count);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("read failed: " + bin.string());
    return data;
}

}  // namespace ergomix::io
