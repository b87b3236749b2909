#pragma once

// The four reference experiments: ground-truth boundary perturbations,
// forward data, noise injection, and the end-to-end reconstruction with
// error metrics.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "robin/balancing.hpp"
#include "robin/fem.hpp"
#include "robin/geometry.hpp"
#include "robin/inversion.hpp"

namespace robin {

/// Example 1 prints cot^2(x) - gamma in the denominator of theta_2'; the
/// perturbed solution exp(-y) sin(x) satisfies the Robin condition only with
/// cot^2(x) - gamma^2, which is the default.
enum class Example1Variant { Printed, SquaredGamma };

enum class NoiseMode {
  Contrast,        // one draw per Gamma_A node added to (u_theta - u)
  TwoMeasurement,  // independent draws on u_theta and on u
};

/// Interior knots (x, theta_2) of the piecewise linear Example 2 profile; the
/// profile is zero at x = 0 and x = pi.
struct Example2Profile {
  std::vector<Point> knots;
  static Example2Profile standard();
  void validate() const;
};

struct ExperimentSpec {
  int example_id = 1;
  double gamma = 0.999;
  double delta = 1e-6;  // reference noise level; also the noise amplitude
  bool noise = true;    // false: exact data, delta still drives the balancing
  NoiseMode noise_mode = NoiseMode::Contrast;
  std::uint64_t seed = 1;
  int mesh_along = 128;  // cells along Gamma_I (nx, or nt for the annulus)
  int mesh_across = 64;  // cells across the domain (ny, or nr)
  int n = 20;
  BalancingConfig balancing;
  double shape_h = 30.0 * 3.14159265358979323846;
  Example2Profile example2 = Example2Profile::standard();
  Example1Variant example1_variant = Example1Variant::SquaredGamma;
  double curvature_multiplier = 1.0;
  int sample_count = 1025;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
  /// `balancing` with its reference noise level replaced by `delta`.
  [[nodiscard]] BalancingConfig balancing_config() const {
    BalancingConfig c = balancing;
    c.delta = delta;
    return c;
  }
  [[nodiscard]] DomainKind domain() const {
    return example_id == 4 ? DomainKind::HalfAnnulus : DomainKind::Rectangle;
  }
};

/// Table defaults: gamma, delta and mesh for each example.
ExperimentSpec default_spec(int example_id);

/// Failure inside run_experiment, tagged with the pipeline stage.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::string stage, const std::string& what);
  [[nodiscard]] const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Ground truth -------------------------------------------------------------

/// theta_2'(x) for Example 1 (one-sided limits at 0 and pi). Throws
/// std::domain_error where the printed expression has a pole.
double example1_theta2_prime(double x, double gamma, Example1Variant variant);

/// Interior points where the chosen variant's denominator vanishes together
/// with a non-zero numerator.
std::vector<double> example1_poles(double gamma, Example1Variant variant);

/// theta_2(x) = int_0^x theta_2'(t) dt on an ascending grid in [0, pi].
/// `endpoint_residual`, when given, receives theta_2(pi) before the endpoint
/// is pinned to zero.
ThetaField example1_theta(double gamma, std::span<const double> grid,
                          Example1Variant variant = Example1Variant::SquaredGamma,
                          double* endpoint_residual = nullptr);

ThetaField example2_theta(std::span<const double> grid, const Example2Profile& profile = Example2Profile::standard());

/// theta_2(x) = h - sqrt((pi/2)^2 + h^2 - (x - pi/2)^2).
ThetaField example3_theta(double h, std::span<const double> grid);

struct Example4Setup {
  DomainSpec domain;
  double A = 0.0;
  double B = 0.0;
  double gamma = 0.0;

  /// theta_2(x) = phi(x) - sqrt(1 - x^2) on [-1, 1].
  [[nodiscard]] double theta2(double x) const;
  /// Normal component theta_2 * nu_y at arclength s of an inner chain of
  /// length `chain_length` (running from x = -1 to x = 1).
  [[nodiscard]] ThetaField theta_nu(std::span<const double> s, double chain_length) const;
  /// Exact u = A y + B y / (x^2 + y^2).
  [[nodiscard]] double u(const Point& p) const;
  /// Exact (u_theta - u) = (1 - A) y - B y / (x^2 + y^2); equals -(B/2) y on r = 2.
  [[nodiscard]] double contrast(const Point& p) const;
};

/// Half-annulus problem with flux y/2 on the outer arc (the flux for which
/// both u and u_theta = y are exact solutions).
Example4Setup example4_setup(double gamma);

/// Rectangle domain with flux sin(x).
DomainSpec rectangle_domain(double gamma, double curvature_multiplier = 1.0);

/// C = (gamma sinh 1 + cosh 1) / (sinh 1 + gamma cosh 1): u(x, 0) = C sin x.
double rectangle_trace_factor(double gamma);

/// Ground-truth theta_nu for `spec` at arclengths s of a Gamma_I chain of the
/// given length.
ThetaField ground_truth_theta(const ExperimentSpec& spec, std::span<const double> s, double chain_length,
                              double* endpoint_residual = nullptr);

// Data ---------------------------------------------------------------------

/// Adds delta * xi with xi uniform on [-1, 1] independently at every node.
/// The generator is a seeded mt19937_64 with a portable double conversion.
BoundaryField add_noise(const BoundaryField& field, double delta, std::uint64_t seed);

/// (u_theta - u) on Gamma_A from a forward solve on the deformed mesh.
BoundaryField numeric_contrast(const Mesh& mesh, const DomainSpec& domain, const NodalField& u,
                               const ThetaField& theta);

// Pipeline -----------------------------------------------------------------

struct ExperimentReport {
  ExperimentSpec spec;
  Reconstruction reconstruction;
  BalancingTrace balancing;
  double alpha_plus = 0.0;
  double K_estimate = 0.0;
  double err_h1 = 0.0;
  double err_l2 = 0.0;
  double theta_endpoint_residual = 0.0;
  std::vector<double> grid_s;
  std::vector<double> theta_true;
  std::vector<double> theta_reconstructed;
  std::string mesh_fingerprint;
  std::size_t mesh_vertices = 0;
};

/// Full H^1 and L2 norms of the piecewise linear interpolant of a - b.
struct ErrorNorms {
  double h1 = 0.0;
  double l2 = 0.0;
};
ErrorNorms error_norms(std::span<const double> s, std::span<const double> a, std::span<const double> b);

/// Called after each completed stage with its name and wall time in seconds.
using StageLog = std::function<void(std::string_view stage, double seconds)>;

/// Mesh, forward solve, data, noise, Galerkin system, balancing, metrics.
/// Throws ExperimentError naming the failing stage.
ExperimentReport run_experiment(const ExperimentSpec& spec, const StageLog& log = {});

}  // namespace robin
