#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ergomix/bounds.hpp"
#include "ergomix/kernel.hpp"
#include "ergomix/models.hpp"
#include "ergomix/montecarlo.hpp"

namespace ergomix::io {

using nlohmann::json;

// Strict object parsing: unknown keys are fatal and named.
void check_object(const json& j, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional, const std::string& context);

json to_json(const Rational& r);
Rational rational_from_json(const json& j, const std::string& context);

json to_json(const IntMatrix& m);
IntMatrix matrix_from_json(const json& j, const std::string& context);

json to_json(const models::AffineTorusModel& m);
models::AffineTorusModel affine_from_json(const json& j);

json to_json(const models::CoverModel& m);
models::CoverModel cover_from_json(const json& j);

using AnyModel = std::variant<models::AffineTorusModel, models::CoverModel>;
AnyModel model_from_json(const json& j);

json to_json(const models::GrowthReport& r);
json to_json(const models::AperiodicityReport& r);
json to_json(const kernel::DoeblinCertificate& c);
json to_json(const bounds::LyapunovCertificate& c);
json to_json(const bounds::CarneReport& r);
json to_json(const bounds::EscapeTail& t);
json to_json(const bounds::BoundCurve& c);
json to_json(const mc::RecurrenceReport& r);
json to_json(const mc::SllnReport& r);
json to_json(const mc::CltReport& r);
json to_json(const mc::LilReport& r);
json to_json(const mc::RatioReport& r);
json to_json(const mc::ConjectureReport& r);

// Shortest round-trip decimal text for a double (locale independent).
std::string format_double(double x);

void write_text(const std::filesystem::path& path, const std::string& content);

// CSV with the fixed header "n,bound,empirical_tv"; empirical may be empty.
void write_bound_curve_csv(const std::filesystem::path& path, const bounds::BoundCurve& curve);

// CSV with the fixed header "n,value".
void write_sequence_csv(const std::filesystem::path& path,
                        const std::vector<std::pair<long, double>>& rows);

// Flat binary file of 64-bit floats plus a JSON sidecar with shape/order.
void write_vector_f64(const std::filesystem::path& stem, std::span<const double> data,
                      const std::vector<std::size_t>& shape);
std::vector<double> read_vector_f64(const std::filesystem::path& stem);

}  // namespace ergomix::io
