#pragma once

// A posteriori choice of the Tikhonov parameter by the balancing principle
// over a geometric alpha grid and a geometric grid of noise-constant
// hypotheses.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "robin/inversion.hpp"

namespace robin {

/// alpha_n = alpha0 q^n, n = 0..N and k_j = k0 p^j, j = 0..M.
struct BalancingConfig {
  double alpha0 = 1e-11;
  double q = 1.3;
  int N = 97;
  double k0 = 0.006;
  double p = 1.3;
  int M = 19;
  double delta = 1e-6;

  /// Throws std::invalid_argument unless q > 1, p > 1, alpha0, k0, delta > 0
  /// and alpha_{N-1} <= 1 < alpha_N.
  void validate() const;
};

std::vector<double> alpha_grid(const BalancingConfig& config);
std::vector<double> hypothesis_grid(const BalancingConfig& config);

/// 9 alpha0 ((p^2 + 1) / (p - 1))^2.
double threshold(const BalancingConfig& config);

/// Returns ||theta_n - theta_m|| in H^1_0 for grid indices n, m.
using PairwiseNorm = std::function<double(std::size_t n, std::size_t m)>;

/// Index of the largest grid value alpha_n such that for every m < n
///   ||theta_n - theta_m|| <= K delta (3 / sqrt(alpha_n) + 1 / sqrt(alpha_m)).
/// n = 0 is always admissible.
std::size_t adaptive_alpha_index(double K, std::span<const double> grid, const PairwiseNorm& norms, double delta);
double adaptive_alpha(double K, std::span<const double> grid, const PairwiseNorm& norms, double delta);

struct BalancingTrace {
  std::vector<double> alphas;
  std::vector<double> hypotheses;
  std::vector<Reconstruction> solutions;
  std::vector<double> alpha_of_k;
  std::vector<std::size_t> alpha_of_k_index;  // grid index of each alpha(k_j); empty on replay
  double threshold = 0.0;
  std::size_t selected_index = 0;  // i: first hypothesis with alpha(k_i) >= threshold
  double alpha_plus = 0.0;         // alpha(k_{i+1})
  double K_estimate = 0.0;         // k_{i+1}
  double noise_estimate = 0.0;     // K_estimate * delta
  std::size_t alpha_plus_index = 0;
  [[nodiscard]] const Reconstruction& selected_solution() const;
};

/// Threshold rule on an already computed sequence alpha(k_j). Fills
/// threshold, selected_index, alpha_plus, K_estimate and noise_estimate.
/// Throws std::runtime_error when no hypothesis clears the threshold or only
/// the last one does.
void apply_threshold_rule(const BalancingConfig& config, BalancingTrace& trace);

/// Solves on the whole alpha grid, evaluates alpha(k_j) for every hypothesis
/// and applies the threshold rule.
BalancingTrace select_alpha_plus(const BalancingConfig& config, const GalerkinSystem& system,
                                 const Eigen::VectorXd& rhs);

nlohmann::json to_json(const BalancingConfig& config);
BalancingConfig balancing_config_from_json(const nlohmann::json& doc, BalancingConfig defaults = {});
nlohmann::json to_json(const BalancingTrace& trace);

}  // namespace robin
