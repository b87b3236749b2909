#pragma once

// Galerkin discretization of the Tikhonov-regularized linearized problem:
// (M + alpha G) c = R over a finite basis of H^1_0(Gamma_I).

#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "robin/fem.hpp"
#include "robin/geometry.hpp"

namespace robin {

/// Sine modes f_i(s) = scale * sin(i pi s / length), i = first..first+n-1.
/// Every mode vanishes at both ends of [0, length].
class ThetaBasis {
 public:
  ThetaBasis(int n, double length, double scale = 1.0, int first = 1);

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] int first_mode() const { return first_; }

  /// i is zero based.
  [[nodiscard]] double value(int i, double s) const;
  [[nodiscard]] double derivative(int i, double s) const;

  /// Same span, every function multiplied by `factor`.
  [[nodiscard]] ThetaBasis scaled(double factor) const;
  /// The `count` modes that follow this basis.
  [[nodiscard]] ThetaBasis successors(int count) const;

  /// Samples sum_i c_i f_i at the given arclengths.
  [[nodiscard]] std::vector<double> combine(const Eigen::VectorXd& c, std::span<const double> s) const;
  [[nodiscard]] std::vector<double> combine_derivative(const Eigen::VectorXd& c, std::span<const double> s) const;

 private:
  int n_;
  double length_;
  double scale_;
  int first_;
};

ThetaBasis make_sine_basis(int n, double length);

/// G_ij = int f_i' f_j' ds over [0, length] by composite Gauss-Legendre.
Eigen::MatrixXd h10_gram(const ThetaBasis& basis);

/// The discretized operator. `traces[i]` is F' f_i on the Gamma_A chain.
struct GalerkinSystem {
  Eigen::MatrixXd M;
  Eigen::MatrixXd G;
  std::vector<std::vector<double>> traces;
  std::vector<double> gamma_a_s;
  std::vector<double> gamma_i_s;
  int basis_size = 0;
  double basis_length = 0.0;
  double basis_scale = 1.0;
  std::string mesh_fingerprint;

  [[nodiscard]] int size() const { return basis_size; }
  [[nodiscard]] ThetaBasis basis() const { return {basis_size, basis_length, basis_scale}; }
};

struct Reconstruction {
  Eigen::VectorXd coefficients;
  double alpha = 0.0;
  ThetaField theta_field;
};

/// One sensitivity solve per basis function against a single factorization,
/// then M_ij as exact L2(Gamma_A) products of the stored traces.
GalerkinSystem assemble_operator(const Mesh& mesh, const DomainSpec& spec, const NodalField& u,
                                 const ThetaBasis& basis);
GalerkinSystem assemble_operator(const MixedBvpSolver& solver, const DomainSpec& spec, const NodalField& u,
                                 const ThetaBasis& basis);

/// Applies F' to theta sampled on the Gamma_I chain; returns the Gamma_A trace.
std::vector<double> apply_operator(const MixedBvpSolver& solver, const DomainSpec& spec, const NodalField& u,
                                   std::span<const double> theta_on_chain);

/// R_i = <F' f_i, data> in L2(Gamma_A).
Eigen::VectorXd assemble_rhs(const GalerkinSystem& system, const BoundaryField& data);
Eigen::VectorXd assemble_rhs(const GalerkinSystem& system, std::span<const double> data);

/// Solves (M + alpha G) c = R with a dense Cholesky factorization.
Reconstruction solve_tikhonov(const GalerkinSystem& system, const Eigen::VectorXd& rhs, double alpha);

/// sqrt(c^T G c).
double h10_norm(const GalerkinSystem& system, const Eigen::VectorXd& c);

/// Lower estimate of ||F'(I - P_n)||: the largest ||F' f|| / ||f||_{H^1_0}
/// over the `probes` modes following the basis.
double discretization_gap(const GalerkinSystem& system, const Mesh& mesh, const DomainSpec& spec,
                          const NodalField& u, int probes);

nlohmann::json to_json(const GalerkinSystem& system);
GalerkinSystem galerkin_system_from_json(const nlohmann::json& doc);

}  // namespace robin
