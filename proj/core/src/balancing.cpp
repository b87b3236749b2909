#include "robin/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace robin {

void BalancingConfig::validate() const {
  if (!(q > 1.0)) throw std::invalid_argument(fmt::format("grid ratio q must exceed 1, got {}", q));
  if (!(p > 1.0)) throw std::invalid_argument(fmt::format("hypothesis ratio p must exceed 1, got {}", p));
  if (!(alpha0 > 0.0)) throw std::invalid_argument(fmt::format("alpha0 must be positive, got {}", alpha0));
  if (!(k0 > 0.0)) throw std::invalid_argument(fmt::format("k0 must be positive, got {}", k0));
  if (!(delta > 0.0)) throw std::invalid_argument(fmt::format("reference noise level must be positive, got {}", delta));
  if (N < 1) throw std::invalid_argument(fmt::format("grid length N must be >= 1, got {}", N));
  if (M < 1) throw std::invalid_argument(fmt::format("hypothesis count M must be >= 1, got {}", M));
  const double below = alpha0 * std::pow(q, N - 1);
  const double top = alpha0 * std::pow(q, N);
  if (!(below <= 1.0 && top > 1.0)) {
    throw std::invalid_argument(fmt::format(
        "alpha grid must satisfy alpha_(N-1) <= 1 < alpha_N; got alpha_{} = {:.6g}, alpha_{} = {:.6g}", N - 1, below,
        N, top));
  }
}

std::vector<double> alpha_grid(const BalancingConfig& config) {
  config.validate();
  std::vector<double> grid(static_cast<std::size_t>(config.N) + 1);
  for (int n = 0; n <= config.N; ++n) grid[n] = config.alpha0 * std::pow(config.q, n);
  return grid;
}

std::vector<double> hypothesis_grid(const BalancingConfig& config) {
  std::vector<double> k(static_cast<std::size_t>(config.M) + 1);
  for (int j = 0; j <= config.M; ++j) k[j] = config.k0 * std::pow(config.p, j);
  return k;
}

double threshold(const BalancingConfig& config) {
  const double r = (config.p * config.p + 1.0) / (config.p - 1.0);
  return 9.0 * config.alpha0 * r * r;
}

std::size_t adaptive_alpha_index(double K, std::span<const double> grid, const PairwiseNorm& norms, double delta) {
  if (grid.empty()) throw std::invalid_argument("adaptive_alpha needs a non-empty grid");
  std::size_t best = 0;
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double tube_n = 3.0 / std::sqrt(grid[n]);
    bool admissible = true;
    for (std::size_t m = 0; m < n && admissible; ++m) {
      admissible = norms(n, m) <= K * delta * (tube_n + 1.0 / std::sqrt(grid[m]));
    }
    if (admissible) best = n;
  }
  return best;
}

double adaptive_alpha(double K, std::span<const double> grid, const PairwiseNorm& norms, double delta) {
  return grid[adaptive_alpha_index(K, grid, norms, delta)];
}

const Reconstruction& BalancingTrace::selected_solution() const {
  if (alpha_plus_index >= solutions.size()) throw std::logic_error("balancing trace holds no grid solutions");
  return solutions[alpha_plus_index];
}

void apply_threshold_rule(const BalancingConfig& config, BalancingTrace& trace) {
  if (trace.hypotheses.empty()) trace.hypotheses = hypothesis_grid(config);
  if (trace.alpha_of_k.size() != trace.hypotheses.size()) {
    throw std::invalid_argument(fmt::format("{} values of alpha(k_j) for {} hypotheses", trace.alpha_of_k.size(),
                                            trace.hypotheses.size()));
  }
  trace.threshold = threshold(config);
  std::size_t i = 0;
  while (i < trace.alpha_of_k.size() && trace.alpha_of_k[i] < trace.threshold) ++i;
  if (i == trace.alpha_of_k.size()) {
    throw std::runtime_error(fmt::format(
        "no hypothesis clears threshold {:.4e} (largest alpha(k_j) = {:.4e}); enlarge the hypothesis set or the grid",
        trace.threshold, trace.alpha_of_k.back()));
  }
  if (i + 1 == trace.alpha_of_k.size()) {
    throw std::runtime_error(fmt::format(
        "threshold cleared only at the last hypothesis k_{} = {:.4e}; extend the hypothesis set", i,
        trace.hypotheses[i]));
  }
  trace.selected_index = i;
  trace.alpha_plus = trace.alpha_of_k[i + 1];
  trace.K_estimate = trace.hypotheses[i + 1];
  trace.noise_estimate = trace.K_estimate * config.delta;
  if (!trace.alpha_of_k_index.empty()) trace.alpha_plus_index = trace.alpha_of_k_index[i + 1];
}

BalancingTrace select_alpha_plus(const BalancingConfig& config, const GalerkinSystem& system,
                                 const Eigen::VectorXd& rhs) {
  BalancingTrace trace;
  trace.alphas = alpha_grid(config);
  trace.hypotheses = hypothesis_grid(config);

  trace.solutions.reserve(trace.alphas.size());
  for (double alpha : trace.alphas) trace.solutions.push_back(solve_tikhonov(system, rhs, alpha));

  const std::size_t n = trace.alphas.size();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      const double d = h10_norm(system, trace.solutions[a].coefficients - trace.solutions[b].coefficients);
      dist(a, b) = d;
      dist(b, a) = d;
    }
  }
  const PairwiseNorm norms = [&dist](std::size_t a, std::size_t b) { return dist(a, b); };

  for (double k : trace.hypotheses) {
    const std::size_t idx = adaptive_alpha_index(k, trace.alphas, norms, config.delta);
    trace.alpha_of_k_index.push_back(idx);
    trace.alpha_of_k.push_back(trace.alphas[idx]);
  }
  apply_threshold_rule(config, trace);
  return trace;
}

nlohmann::json to_json(const BalancingConfig& config) {
  return {{"alpha0", config.alpha0}, {"q", config.q}, {"N", config.N}, {"k0", config.k0},
          {"p", config.p},           {"M", config.M}, {"delta", config.delta}};
}

BalancingConfig balancing_config_from_json(const nlohmann::json& doc, BalancingConfig c) {
  static const std::vector<std::string> known = {"alpha0", "q", "N", "k0", "p", "M", "delta"};
  if (!doc.is_object()) throw std::invalid_argument("balancing section must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument(fmt::format("unknown balancing key '{}'", key));
    }
  }
  c.alpha0 = doc.value("alpha0", c.alpha0);
  c.q = doc.value("q", c.q);
  c.N = doc.value("N", c.N);
  c.k0 = doc.value("k0", c.k0);
  c.p = doc.value("p", c.p);
  c.M = doc.value("M", c.M);
  c.delta = doc.value("delta", c.delta);
  return c;
}

nlohmann::json to_json(const BalancingTrace& trace) {
  std::vector<std::size_t> idx = trace.alpha_of_k_index;
  return {
      {"alphas", trace.alphas},
      {"hypotheses", trace.hypotheses},
      {"alpha_of_k", trace.alpha_of_k},
      {"alpha_of_k_index", idx},
      {"threshold", trace.threshold},
      {"selected_index", trace.selected_index},
      {"alpha_plus", trace.alpha_plus},
      {"alpha_plus_index", trace.alpha_plus_index},
      {"K_estimate", trace.K_estimate},
      {"noise_estimate", trace.noise_estimate},
  };
}

}  // namespace robin
