#include "robin/report_io.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace robin {

namespace {

std::string to_string(NoiseMode mode) { return mode == NoiseMode::Contrast ? "contrast" : "two_measurement"; }

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "contrast") return NoiseMode::Contrast;
  if (s == "two_measurement") return NoiseMode::TwoMeasurement;
  throw std::invalid_argument(fmt::format("noise_mode: unknown value '{}'", s));
}

std::string to_string(Example1Variant v) { return v == Example1Variant::Printed ? "printed" : "squared_gamma"; }

Example1Variant variant_from_string(const std::string& s) {
  if (s == "printed") return Example1Variant::Printed;
  if (s == "squared_gamma") return Example1Variant::SquaredGamma;
  throw std::invalid_argument(fmt::format("example1_variant: unknown value '{}'", s));
}

template <typename T>
T read(const nlohmann::json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(fmt::format("config key '{}': {}", key, e.what()));
  }
}

}  // namespace

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json knots = nlohmann::json::array();
  for (const auto& k : spec.example2.knots) knots.push_back({k.x, k.y});
  return {
      {"example", spec.example_id},
      {"gamma", spec.gamma},
      {"delta", spec.delta},
      {"noise", spec.noise},
      {"noise_mode", to_string(spec.noise_mode)},
      {"seed", spec.seed},
      {"mesh", {{"along", spec.mesh_along}, {"across", spec.mesh_across}}},
      {"n", spec.n},
      {"balancing", to_json(spec.balancing_config())},
      {"shape_h", spec.shape_h},
      {"example2_knots", knots},
      {"example1_variant", to_string(spec.example1_variant)},
      {"curvature_multiplier", spec.curvature_multiplier},
      {"sample_count", spec.sample_count},
  };
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json& doc, ExperimentSpec s) {
  static constexpr std::array kKnown = {
      "example", "gamma",          "delta",          "noise",           "noise_mode",
      "seed",    "mesh",           "n",              "balancing",       "shape_h",
      "shape_h_over_pi", "example2_knots", "example1_variant", "curvature_multiplier", "sample_count"};
  if (!doc.is_object()) throw std::invalid_argument("experiment section must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
      throw std::invalid_argument(fmt::format("unknown config key '{}'", key));
    }
  }
  if (doc.contains("example")) s.example_id = read<int>(doc, "example");
  if (doc.contains("gamma")) s.gamma = read<double>(doc, "gamma");
  if (doc.contains("delta")) s.delta = read<double>(doc, "delta");
  if (doc.contains("noise")) s.noise = read<bool>(doc, "noise");
  if (doc.contains("noise_mode")) s.noise_mode = noise_mode_from_string(read<std::string>(doc, "noise_mode"));
  if (doc.contains("seed")) s.seed = read<std::uint64_t>(doc, "seed");
  if (doc.contains("mesh")) {
    const auto& mesh = doc.at("mesh");
    if (mesh.contains("along")) s.mesh_along = read<int>(mesh, "along");
    if (mesh.contains("across")) s.mesh_across = read<int>(mesh, "across");
  }
  if (doc.contains("n")) s.n = read<int>(doc, "n");
  if (doc.contains("balancing")) {
    try {
      s.balancing = balancing_config_from_json(doc.at("balancing"), s.balancing);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(fmt::format("config key 'balancing': {}", e.what()));
    }
    if (doc.at("balancing").contains("delta")) s.delta = s.balancing.delta;
  }
  if (doc.contains("shape_h")) s.shape_h = read<double>(doc, "shape_h");
  if (doc.contains("shape_h_over_pi")) s.shape_h = read<double>(doc, "shape_h_over_pi") * std::numbers::pi;
  if (doc.contains("example2_knots")) {
    s.example2.knots.clear();
    for (const auto& k : doc.at("example2_knots")) {
      if (!k.is_array() || k.size() != 2) throw std::invalid_argument("config key 'example2_knots': expected [x, value] pairs");
      s.example2.knots.push_back({k[0].get<double>(), k[1].get<double>()});
    }
  }
  if (doc.contains("example1_variant")) s.example1_variant = variant_from_string(read<std::string>(doc, "example1_variant"));
  if (doc.contains("curvature_multiplier")) s.curvature_multiplier = read<double>(doc, "curvature_multiplier");
  if (doc.contains("sample_count")) s.sample_count = read<int>(doc, "sample_count");
  return s;
}

nlohmann::json to_json(const ExperimentReport& report) {
  const auto& c = report.reconstruction.coefficients;
  std::vector<double> coeffs(c.data(), c.data() + c.size());
  return {
      {"spec", to_json(report.spec)},
      {"provenance",
       {{"seed", report.spec.seed}, {"mesh_fingerprint", report.mesh_fingerprint},
        {"mesh_vertices", report.mesh_vertices}}},
      {"result",
       {{"alpha_plus", report.alpha_plus},
        {"K_estimate", report.K_estimate},
        {"noise_estimate", report.balancing.noise_estimate},
        {"err_h1", report.err_h1},
        {"err_l2", report.err_l2},
        {"theta_endpoint_residual", report.theta_endpoint_residual}}},
      {"coefficients", coeffs},
      {"balancing", to_json(report.balancing)},
      {"curve_samples", report.grid_s.size()},
  };
}

std::string format_sci(double value) { return fmt::format("{:.3e}", value); }

std::string table_header() { return "gamma,delta,K,alpha_plus,Err_h1,Err_l2"; }

std::string table_row(const ExperimentReport& r) {
  return fmt::format("{},{},{},{},{},{}", format_sci(r.spec.gamma), format_sci(r.spec.delta), format_sci(r.K_estimate),
                     format_sci(r.alpha_plus), format_sci(r.err_h1), format_sci(r.err_l2));
}

void write_curve_csv(const ExperimentReport& report, std::ostream& out) {
  out << "s,theta_true,theta_reconstructed\n";
  for (std::size_t k = 0; k < report.grid_s.size(); ++k) {
    out << fmt::format("{:.17g},{:.17g},{:.17g}\n", report.grid_s[k], report.theta_true[k],
                       report.theta_reconstructed[k]);
  }
}

}  // namespace robin
