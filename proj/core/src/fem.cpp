#include "robin/fem.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace robin {

namespace {

using Triplet = Eigen::Triplet<double>;

void check_chain_field(const BoundaryChain& chain, std::span<const double> a, std::span<const double> b) {
  if (a.size() != chain.size() || b.size() != chain.size()) {
    throw std::invalid_argument(
        fmt::format("chain has {} nodes but fields have {} and {} values", chain.size(), a.size(), b.size()));
  }
}

}  // namespace

SparseMatrix assemble_interior(const Mesh& mesh) {
  std::vector<Triplet> triplets;
  triplets.reserve(mesh.triangles.size() * 9);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double area = mesh.signed_area(t);
    if (!(area > 0.0)) throw std::runtime_error(fmt::format("degenerate triangle {} (area {})", t, area));
    // Gradients of the barycentric hats are (y_j - y_k, x_k - x_j) / (2 area).
    double bx[3];
    double by[3];
    for (int i = 0; i < 3; ++i) {
      const Point& pj = mesh.vertices[tri[(i + 1) % 3]];
      const Point& pk = mesh.vertices[tri[(i + 2) % 3]];
      bx[i] = pj.y - pk.y;
      by[i] = pk.x - pj.x;
    }
    const double scale = 1.0 / (4.0 * area);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        triplets.emplace_back(tri[i], tri[j], scale * (bx[i] * bx[j] + by[i] * by[j]));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  SparseMatrix k(n, n);
  k.setFromTriplets(triplets.begin(), triplets.end());
  return k;
}

SparseMatrix assemble_robin(const Mesh& mesh, double gamma) {
  std::vector<Triplet> triplets;
  const auto& chain = mesh.gamma_i;
  for (std::size_t e = 0; e + 1 < chain.size(); ++e) {
    const int a = chain.vertices[e];
    const int b = chain.vertices[e + 1];
    const double len = chain.arclength[e + 1] - chain.arclength[e];
    const double diag = gamma * len / 3.0;
    const double off = gamma * len / 6.0;
    triplets.emplace_back(a, a, diag);
    triplets.emplace_back(b, b, diag);
    triplets.emplace_back(a, b, off);
    triplets.emplace_back(b, a, off);
  }
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Eigen::VectorXd assemble_flux_load(const Mesh& mesh, const PlaneFunction& flux) {
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
  const auto& chain = mesh.gamma_a;
  std::vector<double> phi(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) phi[k] = flux(mesh.vertices[chain.vertices[k]]);
  for (std::size_t e = 0; e + 1 < chain.size(); ++e) {
    const double len = chain.arclength[e + 1] - chain.arclength[e];
    load[chain.vertices[e]] += len / 6.0 * (2.0 * phi[e] + phi[e + 1]);
    load[chain.vertices[e + 1]] += len / 6.0 * (phi[e] + 2.0 * phi[e + 1]);
  }
  return load;
}

MixedBvpSolver::MixedBvpSolver(const Mesh& mesh, double gamma) : mesh_(&mesh), gamma_(gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument(fmt::format("gamma must be positive, got {}", gamma));
  full_ = assemble_interior(mesh) + assemble_robin(mesh, gamma);

  const auto mask = mesh.dirichlet_mask();
  reduced_index_.assign(mesh.vertices.size(), -1);
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (!mask[v]) {
      reduced_index_[v] = static_cast<int>(free_.size());
      free_.push_back(static_cast<int>(v));
    }
  }
  if (free_.size() == mesh.vertices.size()) throw std::runtime_error("mesh has no Dirichlet vertices");

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(full_.nonZeros()));
  for (Eigen::Index col = 0; col < full_.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(full_, col); it; ++it) {
      const int r = reduced_index_[it.row()];
      const int c = reduced_index_[it.col()];
      if (r >= 0 && c >= 0) triplets.emplace_back(r, c, it.value());
    }
  }
  const auto nfree = static_cast<Eigen::Index>(free_.size());
  reduced_.resize(nfree, nfree);
  reduced_.setFromTriplets(triplets.begin(), triplets.end());

  factor_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(reduced_);
  if (factor_->info() != Eigen::Success) {
    throw std::runtime_error("internal error: factorization of the mixed operator failed");
  }
}

NodalField MixedBvpSolver::solve(const Eigen::VectorXd& load) const {
  if (load.size() != static_cast<Eigen::Index>(mesh_->vertices.size())) {
    throw std::invalid_argument("load vector length does not match the mesh");
  }
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(free_.size()));
  for (std::size_t i = 0; i < free_.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = load[free_[i]];
  const Eigen::VectorXd x = factor_->solve(rhs);
  if (factor_->info() != Eigen::Success) throw std::runtime_error("internal error: sparse solve failed");

  NodalField u{mesh_, Eigen::VectorXd::Zero(load.size())};
  for (std::size_t i = 0; i < free_.size(); ++i) u.values[free_[i]] = x[static_cast<Eigen::Index>(i)];
  return u;
}

NodalField solve_mixed_bvp(const Mesh& mesh, double gamma, const PlaneFunction& flux) {
  const MixedBvpSolver solver(mesh, gamma);
  return solver.solve(assemble_flux_load(mesh, flux));
}

BoundaryField trace(const NodalField& field, BoundaryTag tag) {
  const auto& chain = field.mesh->chain(tag);
  BoundaryField out{tag, chain.arclength, std::vector<double>(chain.size())};
  for (std::size_t k = 0; k < chain.size(); ++k) out.values[k] = field.values[chain.vertices[k]];
  return out;
}

BoundaryField tangential_derivative(const NodalField& field, BoundaryTag tag) {
  const auto& chain = field.mesh->chain(tag);
  const std::size_t n = chain.size();
  std::vector<double> slope(n - 1);
  for (std::size_t e = 0; e + 1 < n; ++e) {
    slope[e] = (field.values[chain.vertices[e + 1]] - field.values[chain.vertices[e]]) /
               (chain.arclength[e + 1] - chain.arclength[e]);
  }
  BoundaryField out{tag, chain.arclength, std::vector<double>(n)};
  out.values.front() = slope.front();
  out.values.back() = slope.back();
  for (std::size_t k = 1; k + 1 < n; ++k) out.values[k] = 0.5 * (slope[k - 1] + slope[k]);
  return out;
}

Eigen::VectorXd sensitivity_load(const Mesh& mesh, const DomainSpec& spec, const NodalField& u,
                                 const ThetaField& theta) {
  const auto& chain = mesh.gamma_i;
  if (theta.values.size() != chain.size()) {
    throw std::invalid_argument(
        fmt::format("theta has {} samples but Gamma_I has {} nodes", theta.values.size(), chain.size()));
  }
  Eigen::VectorXd load = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
  const double gamma = spec.gamma;
  for (std::size_t e = 0; e + 1 < chain.size(); ++e) {
    const int a = chain.vertices[e];
    const int b = chain.vertices[e + 1];
    const double len = chain.arclength[e + 1] - chain.arclength[e];
    const double theta_mid = 0.5 * (theta.values[e] + theta.values[e + 1]);
    if (theta_mid == 0.0) continue;
    const double s_mid = 0.5 * (chain.arclength[e] + chain.arclength[e + 1]);
    const double coef = gamma * (gamma + spec.curvature_multiplier * curvature(spec, s_mid));
    const double ua = u.values[a];
    const double ub = u.values[b];

    // gamma theta (gamma + m H) u v with the exact P1 edge mass matrix.
    load[a] += theta_mid * coef * len / 6.0 * (2.0 * ua + ub);
    load[b] += theta_mid * coef * len / 6.0 * (ua + 2.0 * ub);

    // - theta u_s v_s; on the edge v_s = -1/len for a and +1/len for b.
    const double flux = theta_mid * (ub - ua) / len;
    load[a] += flux;
    load[b] -= flux;
  }
  return load;
}

NodalField solve_sensitivity(const MixedBvpSolver& solver, const DomainSpec& spec, const NodalField& u,
                             const ThetaField& theta) {
  return solver.solve(sensitivity_load(solver.mesh(), spec, u, theta));
}

NodalField solve_sensitivity(const Mesh& mesh, const DomainSpec& spec, const NodalField& u,
                             const ThetaField& theta) {
  const MixedBvpSolver solver(mesh, spec.gamma);
  return solve_sensitivity(solver, spec, u, theta);
}

double chain_inner(std::span<const double> s, std::span<const double> a, std::span<const double> b) {
  if (a.size() != s.size() || b.size() != s.size()) {
    throw std::invalid_argument(
        fmt::format("chain has {} nodes but fields have {} and {} values", s.size(), a.size(), b.size()));
  }
  double sum = 0.0;
  for (std::size_t e = 0; e + 1 < s.size(); ++e) {
    const double len = s[e + 1] - s[e];
    sum += len / 6.0 * (2.0 * a[e] * b[e] + a[e] * b[e + 1] + a[e + 1] * b[e] + 2.0 * a[e + 1] * b[e + 1]);
  }
  return sum;
}

double chain_inner(const BoundaryChain& chain, std::span<const double> a, std::span<const double> b) {
  check_chain_field(chain, a, b);
  return chain_inner(std::span<const double>(chain.arclength), a, b);
}

void write_field_csv(const NodalField& field, std::ostream& out) {
  out << "# mesh " << field.mesh->fingerprint() << " tag nodal\n";
  for (Eigen::Index i = 0; i < field.values.size(); ++i) out << fmt::format("{:.17g}\n", field.values[i]);
}

void write_field_csv(const BoundaryField& field, const Mesh& mesh, std::ostream& out) {
  out << "# mesh " << mesh.fingerprint() << " tag " << tag_letter(field.tag) << '\n';
  for (double v : field.values) out << fmt::format("{:.17g}\n", v);
}

}  // namespace robin
