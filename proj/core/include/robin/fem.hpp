#pragma once

// P1 finite elements for the mixed Neumann / Robin / Dirichlet problem and
// its linearized sensitivity problem.

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "robin/geometry.hpp"

namespace robin {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// One value per mesh vertex. The mesh must outlive the field.
struct NodalField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXd values;
};

/// Values on the vertices of a tagged chain, ordered by arclength.
struct BoundaryField {
  BoundaryTag tag = BoundaryTag::A;
  std::vector<double> s;
  std::vector<double> values;
};

/// Stiffness matrix of the Dirichlet integral, exact for P1.
SparseMatrix assemble_interior(const Mesh& mesh);

/// gamma times the exact P1 boundary mass matrix on Gamma_I.
SparseMatrix assemble_robin(const Mesh& mesh, double gamma);

/// Load vector of the Neumann flux on Gamma_A. The flux is sampled at the
/// chain vertices and integrated exactly against the hat functions.
Eigen::VectorXd assemble_flux_load(const Mesh& mesh, const PlaneFunction& flux);

/// Factorized left-hand operator (stiffness + Robin mass) with Gamma_D rows
/// and columns eliminated. Immutable once built; `solve` may be called
/// concurrently.
class MixedBvpSolver {
 public:
  MixedBvpSolver(const Mesh& mesh, double gamma);

  /// Solves for a full-length load vector; entries on Gamma_D are ignored and
  /// the returned field is exactly zero there.
  [[nodiscard]] NodalField solve(const Eigen::VectorXd& load) const;

  [[nodiscard]] const Mesh& mesh() const { return *mesh_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  /// The assembled operator before Dirichlet reduction.
  [[nodiscard]] const SparseMatrix& full_operator() const { return full_; }
  [[nodiscard]] const SparseMatrix& reduced_operator() const { return reduced_; }
  [[nodiscard]] const std::vector<int>& free_dofs() const { return free_; }

 private:
  const Mesh* mesh_;
  double gamma_;
  SparseMatrix full_;
  SparseMatrix reduced_;
  std::vector<int> free_;
  std::vector<int> reduced_index_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> factor_;
};

/// Solves Laplace's equation with flux on Gamma_A, the Robin condition on
/// Gamma_I and u = 0 on Gamma_D. Works unchanged on a deformed mesh.
NodalField solve_mixed_bvp(const Mesh& mesh, double gamma, const PlaneFunction& flux);

/// Restriction of a nodal field to the A or I chain.
BoundaryField trace(const NodalField& field, BoundaryTag tag);

/// d/ds of the P1 boundary trace: per-edge slopes averaged at interior
/// vertices, one-sided at the chain ends.
BoundaryField tangential_derivative(const NodalField& field, BoundaryTag tag);

/// Right-hand side of the sensitivity weak form:
///   int_I gamma theta (gamma + m H) u v  -  int_I theta u_s v_s
/// with theta taken at edge midpoints (mean of the two vertex values).
Eigen::VectorXd sensitivity_load(const Mesh& mesh, const DomainSpec& spec, const NodalField& u,
                                 const ThetaField& theta);

/// Shape sensitivity u' for a normal displacement theta of Gamma_I.
NodalField solve_sensitivity(const MixedBvpSolver& solver, const DomainSpec& spec, const NodalField& u,
                             const ThetaField& theta);
NodalField solve_sensitivity(const Mesh& mesh, const DomainSpec& spec, const NodalField& u,
                             const ThetaField& theta);

/// Exact L2 inner product of two P1 traces on a chain.
double chain_inner(const BoundaryChain& chain, std::span<const double> a, std::span<const double> b);
double chain_inner(std::span<const double> s, std::span<const double> a, std::span<const double> b);

/// "# mesh <fingerprint> tag <T>" header, then one value per line.
void write_field_csv(const NodalField& field, std::ostream& out);
void write_field_csv(const BoundaryField& field, const Mesh& mesh, std::ostream& out);

}  // namespace robin
