#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "robin/experiments.hpp"
#include "robin/fem.hpp"

using namespace robin;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd nodal(const Mesh& m, double (*f)(double, double)) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(m.num_vertices()));
  for (std::size_t k = 0; k < m.num_vertices(); ++k) v[static_cast<Eigen::Index>(k)] = f(m.vertices[k].x, m.vertices[k].y);
  return v;
}

double quad(const SparseMatrix& a, const Eigen::VectorXd& v) { return v.dot(a * v); }

// Relative L2(Gamma_A) error of the discrete trace, integrated with an
// independent composite Simpson rule on each edge.
double trace_error(const Mesh& mesh, const NodalField& u, const PlaneFunction& exact) {
  const BoundaryChain& c = mesh.gamma_a;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k + 1 < c.size(); ++k) {
    const Point& p = mesh.vertices[c.vertices[k]];
    const Point& q = mesh.vertices[c.vertices[k + 1]];
    const double h = c.arclength[k + 1] - c.arclength[k];
    const double ua = u.values[c.vertices[k]];
    const double ub = u.values[c.vertices[k + 1]];
    for (auto [w, t] : {std::pair{1.0, 0.0}, std::pair{4.0, 0.5}, std::pair{1.0, 1.0}}) {
      const Point x{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
      const double e = exact(x);
      const double d = (1.0 - t) * ua + t * ub - e;
      num += w * h / 6.0 * d * d;
      den += w * h / 6.0 * e * e;
    }
  }
  return std::sqrt(num / den);
}

ThetaField chain_theta(const Mesh& m, const std::function<double(double)>& f) {
  ThetaField t{m.gamma_i.arclength, {}};
  for (double s : t.s) t.values.push_back(f(s));
  return t;
}

}  // namespace

TEST_CASE("single right triangle element stiffness") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  const Eigen::MatrixXd k = Eigen::MatrixXd(assemble_interior(m));
  Eigen::Matrix3d expected;
  expected << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  CHECK((k - expected).norm() < 1e-15);
  for (int r = 0; r < 3; ++r) CHECK(std::abs(k.row(r).sum()) < 1e-15);
}

TEST_CASE("stiffness is symmetric with constants in the kernel") {
  for (const Mesh& m : {build_rectangle_mesh(6, 4), build_half_annulus_mesh(3, 10)}) {
    const SparseMatrix k = assemble_interior(m);
    CHECK(SparseMatrix(k - SparseMatrix(k.transpose())).norm() == 0.0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k.rows());
    CHECK((k * ones).norm() < 1e-12);
  }
}

TEST_CASE("stiffness quadratic form of v = y is the area") {
  const Mesh m = build_rectangle_mesh(2, 2);
  CHECK(quad(assemble_interior(m), nodal(m, [](double, double y) { return y; })) ==
        doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("Robin mass of constants and of sin(s)") {
  const double gamma = 0.7;
  const Mesh coarse = build_rectangle_mesh(16, 2);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(coarse.num_vertices()));
  CHECK(quad(assemble_robin(coarse, gamma), one) == doctest::Approx(gamma * kPi).epsilon(1e-13));
  CHECK(assemble_robin(coarse, 0.0).norm() == 0.0);

  double prev = 0.0;
  for (int nx : {16, 32, 64}) {
    const Mesh m = build_rectangle_mesh(nx, 2);
    const double err = std::abs(quad(assemble_robin(m, gamma), nodal(m, [](double x, double) { return std::sin(x); })) -
                                gamma * kPi / 2.0);
    if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("flux load sums") {
  const Mesh m = build_rectangle_mesh(12, 3);
  CHECK(assemble_flux_load(m, [](const Point&) { return 0.0; }).norm() == 0.0);
  CHECK(assemble_flux_load(m, [](const Point&) { return 1.0; }).sum() == doctest::Approx(kPi).epsilon(1e-12));
  double prev = 0.0;
  for (int nx : {16, 32, 64}) {
    const Mesh f = build_rectangle_mesh(nx, 2);
    const double err = std::abs(assemble_flux_load(f, [](const Point& p) { return std::sin(p.x); }).sum() - 2.0);
    if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("reduced operator is symmetric positive definite") {
  for (double gamma : {0.01, 0.999, 10.0}) {
    const Mesh m = build_half_annulus_mesh(3, 12);
    const MixedBvpSolver solver(m, gamma);
    const Eigen::MatrixXd a = Eigen::MatrixXd(solver.reduced_operator());
    CHECK((a - a.transpose()).norm() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("solution vanishes on Gamma_D and satisfies Galerkin orthogonality") {
  const Mesh m = build_rectangle_mesh(32, 16);
  const DomainSpec d = rectangle_domain(0.999);
  const MixedBvpSolver solver(m, d.gamma);
  const Eigen::VectorXd load = assemble_flux_load(m, d.flux);
  const NodalField u = solver.solve(load);
  const auto mask = m.dirichlet_mask();
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (mask[v]) CHECK(u.values[static_cast<Eigen::Index>(v)] == 0.0);
  }
  const Eigen::VectorXd r = solver.full_operator() * u.values - load;
  double res = 0.0;
  double ref = 0.0;
  for (int v : solver.free_dofs()) {
    res += r[v] * r[v];
    ref += load[v] * load[v];
  }
  CHECK(std::sqrt(res / ref) < 1e-10);
}

TEST_CASE("rectangle trace converges to C sin x at second order") {
  const double gamma = 0.999;
  const double c = (gamma * std::sinh(1.0) + std::cosh(1.0)) / (std::sinh(1.0) + gamma * std::cosh(1.0));
  CHECK(rectangle_trace_factor(gamma) == doctest::Approx(c).epsilon(1e-15));
  const PlaneFunction exact = [c](const Point& p) { return c * std::sin(p.x); };
  double prev = 0.0;
  for (int level : {1, 2, 4}) {
    const Mesh m = build_rectangle_mesh(32 * level, 16 * level);
    const double err = trace_error(m, solve_mixed_bvp(m, gamma, [](const Point& p) { return std::sin(p.x); }), exact);
    if (level == 4) CHECK(err < 1e-3);
    if (prev > 0.0) {
      const double rate = std::log2(prev / err);
      CHECK(rate >= 1.7);
      CHECK(rate <= 2.3);
    }
    prev = err;
  }
}

TEST_CASE("half annulus trace converges to A y + B y / r^2") {
  const double gamma = 0.99;
  const double b = (1.0 - gamma) / (1.25 * gamma + 0.75);
  const double a = 1.0 + b / 4.0;
  const PlaneFunction exact = [a, b](const Point& p) { return a * p.y + b * p.y / (p.x * p.x + p.y * p.y); };
  // Flux of the exact solution through r = 2.
  const PlaneFunction flux = [a, b](const Point& p) {
    const double r = std::hypot(p.x, p.y);
    return (a - b / (r * r)) * p.y / r;
  };
  double prev = 0.0;
  for (int level : {1, 2, 4}) {
    const Mesh m = build_half_annulus_mesh(8 * level, 32 * level);
    const double err = trace_error(m, solve_mixed_bvp(m, gamma, flux), exact);
    if (level == 4) CHECK(err < 1e-3);
    if (prev > 0.0) {
      const double rate = std::log2(prev / err);
      CHECK(rate >= 1.7);
      CHECK(rate <= 2.3);
    }
    prev = err;
  }
}

TEST_CASE("Example 1 deformed domain carries u_theta = exp(-y) sin x") {
  // 1 - C is about 1.4e-4, the size of the trace discretization error, so the
  // comparison is made on the contrast where that error largely cancels.
  const double gamma = 0.999;
  const Mesh m = build_rectangle_mesh(128, 64);
  ExperimentSpec spec = default_spec(1);
  spec.gamma = gamma;
  const ThetaField theta = ground_truth_theta(spec, m.gamma_i.arclength, m.gamma_i.length());
  const PlaneFunction flux = [](const Point& p) { return std::sin(p.x); };
  const NodalField u = solve_mixed_bvp(m, gamma, flux);
  const Mesh deformed = deform_mesh(m, theta);
  const NodalField ut = solve_mixed_bvp(deformed, gamma, flux);
  NodalField contrast{&m, ut.values - u.values};
  const double k = 1.0 - rectangle_trace_factor(gamma);
  const double err = trace_error(m, contrast, [k](const Point& p) { return k * std::sin(p.x); });
  MESSAGE("relative contrast error " << err);
  CHECK(err < 0.05);
}

TEST_CASE("tangential derivative") {
  const Mesh m = build_rectangle_mesh(40, 2);
  NodalField f{&m, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m.num_vertices()), 2.5)};
  for (double d : tangential_derivative(f, BoundaryTag::I).values) CHECK(std::abs(d) < 1e-13);

  f.values = nodal(m, [](double x, double) { return x; });
  for (double d : tangential_derivative(f, BoundaryTag::I).values) CHECK(d == doctest::Approx(1.0).epsilon(1e-12));

  double prev = 0.0;
  for (int nx : {32, 64, 128}) {
    const Mesh g = build_rectangle_mesh(nx, 2);
    const NodalField s{&g, nodal(g, [](double x, double) { return std::sin(x); })};
    const BoundaryField d = tangential_derivative(s, BoundaryTag::I);
    double err = 0.0;
    for (std::size_t k = 1; k + 1 < d.values.size(); ++k) err = std::max(err, std::abs(d.values[k] - std::cos(d.s[k])));
    if (prev > 0.0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("sensitivity is zero for zero theta and linear in theta") {
  const Mesh m = build_half_annulus_mesh(4, 24);
  const Example4Setup setup = example4_setup(0.9);
  const MixedBvpSolver solver(m, setup.domain.gamma);
  const NodalField u = solver.solve(assemble_flux_load(m, setup.domain.flux));
  const ThetaField zero = chain_theta(m, [](double) { return 0.0; });
  CHECK(solve_sensitivity(solver, setup.domain, u, zero).values.norm() == 0.0);

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ThetaField a = zero;
  ThetaField b = zero;
  for (std::size_t k = 1; k + 1 < a.values.size(); ++k) {
    a.values[k] = dist(gen);
    b.values[k] = dist(gen);
  }
  ThetaField sum = zero;
  for (std::size_t k = 0; k < sum.values.size(); ++k) sum.values[k] = a.values[k] + b.values[k];
  const Eigen::VectorXd ua = solve_sensitivity(solver, setup.domain, u, a).values;
  const Eigen::VectorXd ub = solve_sensitivity(solver, setup.domain, u, b).values;
  const Eigen::VectorXd us = solve_sensitivity(solver, setup.domain, u, sum).values;
  CHECK((us - ua - ub).norm() <= 1e-10 * us.norm());
}

TEST_CASE("Example 1 sensitivity trace approximates the analytic contrast") {
  const double gamma = 0.999;
  const Mesh m = build_rectangle_mesh(128, 64);
  const DomainSpec d = rectangle_domain(gamma);
  const MixedBvpSolver solver(m, gamma);
  const NodalField u = solver.solve(assemble_flux_load(m, d.flux));
  ExperimentSpec spec = default_spec(1);
  spec.gamma = gamma;
  const ThetaField theta = ground_truth_theta(spec, m.gamma_i.arclength, m.gamma_i.length());
  const NodalField up = solve_sensitivity(solver, d, u, theta);
  const double k = 1.0 - rectangle_trace_factor(gamma);
  const double err = trace_error(m, up, [k](const Point& p) { return k * std::sin(p.x); });
  CHECK(err < 0.05);
}

TEST_CASE("curvature multiplier only matters on the curved boundary") {
  const Mesh r = build_rectangle_mesh(16, 8);
  const DomainSpec d1 = rectangle_domain(0.9, 1.0);
  const DomainSpec d2 = rectangle_domain(0.9, 2.0);
  const NodalField u = solve_mixed_bvp(r, 0.9, d1.flux);
  const ThetaField t = chain_theta(r, [](double s) { return std::sin(s); });
  CHECK((sensitivity_load(r, d1, u, t) - sensitivity_load(r, d2, u, t)).norm() == 0.0);

  const Mesh a = build_half_annulus_mesh(4, 16);
  Example4Setup s = example4_setup(0.9);
  const NodalField ua = solve_mixed_bvp(a, 0.9, s.domain.flux);
  const ThetaField ta = chain_theta(a, [](double x) { return std::sin(x); });
  const Eigen::VectorXd l1 = sensitivity_load(a, s.domain, ua, ta);
  s.domain.curvature_multiplier = 2.0;
  CHECK((sensitivity_load(a, s.domain, ua, ta) - l1).norm() > 0.0);
}

TEST_CASE("chain inner product is exact for P1 traces") {
  const std::vector<double> s = {0.0, 0.5, 2.0};
  const std::vector<double> a = {1.0, 1.0, 1.0};
  const std::vector<double> x = {0.0, 0.5, 2.0};
  CHECK(chain_inner(s, a, a) == doctest::Approx(2.0));
  CHECK(chain_inner(s, x, x) == doctest::Approx(8.0 / 3.0));
  CHECK(chain_inner(s, a, x) == doctest::Approx(2.0));
}

TEST_CASE("field csv carries a mesh header") {
  const Mesh m = build_rectangle_mesh(4, 2);
  const NodalField u = solve_mixed_bvp(m, 1.0, [](const Point&) { return 1.0; });
  std::ostringstream nodal_out;
  write_field_csv(u, nodal_out);
  CHECK(nodal_out.str().rfind("# mesh " + m.fingerprint(), 0) == 0);
  std::ostringstream trace_out;
  write_field_csv(trace(u, BoundaryTag::A), m, trace_out);
  const std::string text = trace_out.str();
  CHECK(text.find("tag A") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(m.gamma_a.size()) + 1);
}
