#include "robin/inversion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <boost/math/quadrature/gauss.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace robin {

ThetaBasis::ThetaBasis(int n, double length, double scale, int first)
    : n_(n), length_(length), scale_(scale), first_(first) {
  if (n < 1) throw std::invalid_argument(fmt::format("basis size must be >= 1, got {}", n));
  if (!(length > 0.0)) throw std::invalid_argument(fmt::format("basis length must be positive, got {}", length));
  if (first < 1) throw std::invalid_argument("sine modes start at 1");
}

double ThetaBasis::value(int i, double s) const {
  // Exact zeros at both ends; sin(k pi) is not exactly zero in floating point.
  if (s <= 0.0 || s >= length_) return 0.0;
  const double w = (first_ + i) * std::numbers::pi / length_;
  return scale_ * std::sin(w * s);
}

double ThetaBasis::derivative(int i, double s) const {
  const double w = (first_ + i) * std::numbers::pi / length_;
  return scale_ * w * std::cos(w * s);
}

ThetaBasis ThetaBasis::scaled(double factor) const { return {n_, length_, scale_ * factor, first_}; }

ThetaBasis ThetaBasis::successors(int count) const { return {count, length_, scale_, first_ + n_}; }

std::vector<double> ThetaBasis::combine(const Eigen::VectorXd& c, std::span<const double> s) const {
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    double sum = 0.0;
    for (int i = 0; i < n_; ++i) sum += c[i] * value(i, s[k]);
    out[k] = sum;
  }
  return out;
}

std::vector<double> ThetaBasis::combine_derivative(const Eigen::VectorXd& c, std::span<const double> s) const {
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    double sum = 0.0;
    for (int i = 0; i < n_; ++i) sum += c[i] * derivative(i, s[k]);
    out[k] = sum;
  }
  return out;
}

ThetaBasis make_sine_basis(int n, double length) { return {n, length}; }

Eigen::MatrixXd h10_gram(const ThetaBasis& basis) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const int n = basis.size();
  const int panels = std::max(4, 2 * (basis.first_mode() + n));
  const double width = basis.length() / panels;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd d(n);
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    const double half = 0.5 * width;
    // Rule::abscissa() stores the non-negative half of the symmetric rule.
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    for (std::size_t q = 0; q < x.size(); ++q) {
      for (int sign : {-1, 1}) {
        if (x[q] == 0.0 && sign < 0) continue;
        const double s = mid + sign * half * x[q];
        const double weight = half * w[q];
        for (int i = 0; i < n; ++i) d[i] = basis.derivative(i, s);
        g.noalias() += weight * d * d.transpose();
      }
    }
  }
  return 0.5 * (g + g.transpose());
}

std::vector<double> apply_operator(const MixedBvpSolver& solver, const DomainSpec& spec, const NodalField& u,
                                   std::span<const double> theta_on_chain) {
  const Mesh& mesh = solver.mesh();
  ThetaField theta{mesh.gamma_i.arclength, {theta_on_chain.begin(), theta_on_chain.end()}};
  const NodalField du = solve_sensitivity(solver, spec, u, theta);
  return trace(du, BoundaryTag::A).values;
}

namespace {

std::vector<double> sample_mode(const ThetaBasis& basis, int i, std::span<const double> s) {
  std::vector<double> out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = basis.value(i, s[k]);
  return out;
}

}  // namespace

GalerkinSystem assemble_operator(const MixedBvpSolver& solver, const DomainSpec& spec, const NodalField& u,
                                 const ThetaBasis& basis) {
  const Mesh& mesh = solver.mesh();
  GalerkinSystem sys;
  sys.basis_size = basis.size();
  sys.basis_length = basis.length();
  sys.basis_scale = basis.scale();
  sys.gamma_a_s = mesh.gamma_a.arclength;
  sys.gamma_i_s = mesh.gamma_i.arclength;
  sys.mesh_fingerprint = mesh.fingerprint();
  sys.G = h10_gram(basis);

  const int n = basis.size();
  sys.traces.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    sys.traces.push_back(apply_operator(solver, spec, u, sample_mode(basis, i, sys.gamma_i_s)));
  }
  sys.M.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = chain_inner(std::span<const double>(sys.gamma_a_s), sys.traces[i], sys.traces[j]);
      sys.M(i, j) = v;
      sys.M(j, i) = v;
    }
  }
  return sys;
}

GalerkinSystem assemble_operator(const Mesh& mesh, const DomainSpec& spec, const NodalField& u,
                                 const ThetaBasis& basis) {
  const MixedBvpSolver solver(mesh, spec.gamma);
  return assemble_operator(solver, spec, u, basis);
}

Eigen::VectorXd assemble_rhs(const GalerkinSystem& system, std::span<const double> data) {
  if (data.size() != system.gamma_a_s.size()) {
    throw std::invalid_argument(fmt::format("data has {} values but the Gamma_A chain has {} nodes", data.size(),
                                            system.gamma_a_s.size()));
  }
  Eigen::VectorXd r(system.size());
  for (int i = 0; i < system.size(); ++i) {
    r[i] = chain_inner(std::span<const double>(system.gamma_a_s), system.traces[i], data);
  }
  return r;
}

Eigen::VectorXd assemble_rhs(const GalerkinSystem& system, const BoundaryField& data) {
  if (data.tag != BoundaryTag::A) throw std::invalid_argument("right-hand side data must live on Gamma_A");
  return assemble_rhs(system, std::span<const double>(data.values));
}

Reconstruction solve_tikhonov(const GalerkinSystem& system, const Eigen::VectorXd& rhs, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument(fmt::format("alpha must be positive, got {}", alpha));
  if (rhs.size() != system.size()) throw std::invalid_argument("right-hand side has the wrong dimension");
  const Eigen::MatrixXd a = system.M + alpha * system.G;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(fmt::format("Cholesky factorization of M + alpha G failed at alpha = {}", alpha));
  }
  Reconstruction rec;
  rec.coefficients = llt.solve(rhs);
  rec.alpha = alpha;
  rec.theta_field.s = system.gamma_i_s;
  rec.theta_field.values = system.basis().combine(rec.coefficients, system.gamma_i_s);
  return rec;
}

double h10_norm(const GalerkinSystem& system, const Eigen::VectorXd& c) {
  if (c.size() != system.size()) throw std::invalid_argument("coefficient vector has the wrong dimension");
  return std::sqrt(std::max(0.0, c.dot(system.G * c)));
}

double discretization_gap(const GalerkinSystem& system, const Mesh& mesh, const DomainSpec& spec,
                          const NodalField& u, int probes) {
  if (probes < 1) throw std::invalid_argument(fmt::format("probes must be >= 1, got {}", probes));
  const ThetaBasis tail = system.basis().successors(probes);
  const Eigen::MatrixXd g = h10_gram(tail);
  const MixedBvpSolver solver(mesh, spec.gamma);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const auto image = apply_operator(solver, spec, u, sample_mode(tail, i, mesh.gamma_i.arclength));
    const double num = std::sqrt(chain_inner(mesh.gamma_a, image, image));
    worst = std::max(worst, num / std::sqrt(g(i, i)));
  }
  return worst;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw std::runtime_error("matrix data size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = flat[static_cast<std::size_t>(i * cols + k)];
  return m;
}

}  // namespace

nlohmann::json to_json(const GalerkinSystem& system) {
  return {
      {"basis", {{"kind", "sine"}, {"n", system.basis_size}, {"length", system.basis_length},
                 {"scale", system.basis_scale}}},
      {"mesh_fingerprint", system.mesh_fingerprint},
      {"M", matrix_to_json(system.M)},
      {"G", matrix_to_json(system.G)},
      {"traces", system.traces},
      {"gamma_a_s", system.gamma_a_s},
      {"gamma_i_s", system.gamma_i_s},
  };
}

GalerkinSystem galerkin_system_from_json(const nlohmann::json& doc) {
  GalerkinSystem sys;
  const auto& basis = doc.at("basis");
  sys.basis_size = basis.at("n").get<int>();
  sys.basis_length = basis.at("length").get<double>();
  sys.basis_scale = basis.at("scale").get<double>();
  sys.mesh_fingerprint = doc.at("mesh_fingerprint").get<std::string>();
  sys.M = matrix_from_json(doc.at("M"));
  sys.G = matrix_from_json(doc.at("G"));
  sys.traces = doc.at("traces").get<std::vector<std::vector<double>>>();
  sys.gamma_a_s = doc.at("gamma_a_s").get<std::vector<double>>();
  sys.gamma_i_s = doc.at("gamma_i_s").get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(sys.basis_size);
  if (sys.M.rows() != n || sys.M.cols() != n || sys.G.rows() != n || sys.G.cols() != n ||
      static_cast<Eigen::Index>(sys.traces.size()) != n) {
    throw std::runtime_error("Galerkin system document has inconsistent dimensions");
  }
  return sys;
}

}  // namespace robin
