#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "robin/geometry.hpp"

using namespace robin;

namespace {

constexpr double kPi = std::numbers::pi;

int count_tag(const Mesh& m, BoundaryTag tag) {
  int n = 0;
  for (const auto& e : m.boundary_edges) n += e.tag == tag ? 1 : 0;
  return n;
}

// Edges used by exactly one triangle, computed from connectivity alone.
std::set<std::pair<int, int>> topological_boundary(const Mesh& m) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t[k];
      int b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++uses[{a, b}];
    }
  }
  std::set<std::pair<int, int>> out;
  for (const auto& [edge, n] : uses) {
    if (n == 1) out.insert(edge);
  }
  return out;
}

ThetaField theta_on_chain(const Mesh& m, double (*f)(double)) {
  ThetaField t{m.gamma_i.arclength, {}};
  for (double s : t.s) t.values.push_back(f(s));
  t.values.front() = 0.0;
  t.values.back() = 0.0;
  return t;
}

}  // namespace

TEST_CASE("smallest rectangle mesh has the forced counts") {
  const Mesh m = build_rectangle_mesh(2, 2);
  CHECK(m.num_vertices() == 9);
  CHECK(m.num_triangles() == 8);
  CHECK(count_tag(m, BoundaryTag::A) == 2);
  CHECK(count_tag(m, BoundaryTag::I) == 2);
  CHECK(count_tag(m, BoundaryTag::D) == 4);
}

TEST_CASE("rectangle mesh rejects resolutions below two") {
  CHECK_THROWS_AS(build_rectangle_mesh(1, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_rectangle_mesh(4, 1), std::invalid_argument);
}

TEST_CASE("rectangle boundary edge count is the grid perimeter") {
  for (auto [nx, ny] : {std::pair{2, 3}, std::pair{7, 4}, std::pair{16, 8}}) {
    const Mesh m = build_rectangle_mesh(nx, ny);
    CHECK(m.boundary_edges.size() == static_cast<std::size_t>(2 * nx + 2 * ny));
    CHECK(m.num_vertices() == static_cast<std::size_t>((nx + 1) * (ny + 1)));
  }
}

TEST_CASE("rectangle Gamma_I arclength is pi") {
  const Mesh m = build_rectangle_mesh(128, 64);
  CHECK(std::abs(m.gamma_i.length() - kPi) < 1e-12);
  CHECK(std::abs(m.gamma_a.length() - kPi) < 1e-12);
}

TEST_CASE("half annulus rejects parameters below the minimums") {
  CHECK_THROWS_AS(build_half_annulus_mesh(1, 8), std::invalid_argument);
  CHECK_THROWS_AS(build_half_annulus_mesh(4, 3), std::invalid_argument);
}

TEST_CASE("half annulus chain lengths converge at second order") {
  double prev_i = 0.0;
  double prev_a = 0.0;
  for (int nt : {16, 32, 64}) {
    const Mesh m = build_half_annulus_mesh(4, nt);
    // Inscribed polygon of a semicircle of radius r: 2 r nt sin(pi / (2 nt)).
    const double exact_i = 2.0 * nt * std::sin(kPi / (2.0 * nt));
    CHECK(std::abs(m.gamma_i.length() - exact_i) < 1e-12);
    CHECK(std::abs(m.gamma_a.length() - 2.0 * exact_i) < 1e-12);
    const double err_i = kPi - m.gamma_i.length();
    const double err_a = 2.0 * kPi - m.gamma_a.length();
    CHECK(err_i > 0.0);
    CHECK(err_i * nt * nt == doctest::Approx(kPi * kPi * kPi / 24.0).epsilon(1e-3));
    if (prev_i > 0.0) {
      CHECK(prev_i / err_i == doctest::Approx(4.0).epsilon(0.01));
      CHECK(prev_a / err_a == doctest::Approx(4.0).epsilon(0.01));
    }
    prev_i = err_i;
    prev_a = err_a;
  }
}

TEST_CASE("half annulus vertices lie in the closed polar box") {
  const Mesh m = build_half_annulus_mesh(8, 64);
  for (const auto& p : m.vertices) {
    const double r = std::hypot(p.x, p.y);
    const double a = std::atan2(p.y, p.x);
    CHECK(r >= 1.0 - 1e-12);
    CHECK(r <= 2.0 + 1e-12);
    CHECK(a >= -1e-12);
    CHECK(a <= kPi + 1e-12);
  }
}

TEST_CASE("tags partition the topological boundary") {
  for (const Mesh& m : {build_rectangle_mesh(9, 5), build_half_annulus_mesh(3, 12)}) {
    const auto boundary = topological_boundary(m);
    std::set<std::pair<int, int>> tagged;
    for (const auto& e : m.boundary_edges) {
      auto key = std::minmax(e.v[0], e.v[1]);
      CHECK(tagged.insert({key.first, key.second}).second);
    }
    CHECK(tagged == boundary);
    CHECK_NOTHROW(m.validate());
  }
}

TEST_CASE("chains are connected, monotone and end on Gamma_D") {
  for (const Mesh& m : {build_rectangle_mesh(12, 6), build_half_annulus_mesh(4, 16)}) {
    const auto mask = m.dirichlet_mask();
    for (BoundaryTag tag : {BoundaryTag::A, BoundaryTag::I}) {
      const BoundaryChain& c = m.chain(tag);
      for (std::size_t k = 1; k < c.size(); ++k) CHECK(c.arclength[k] > c.arclength[k - 1]);
      CHECK(mask[c.vertices.front()]);
      CHECK(mask[c.vertices.back()]);
    }
  }
}

TEST_CASE("triangles are positively oriented") {
  for (const Mesh& m : {build_rectangle_mesh(6, 3), build_half_annulus_mesh(3, 8)}) {
    for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(m.signed_area(t) > 0.0);
  }
}

TEST_CASE("refinement doubles counts and keeps lengths") {
  const Mesh coarse = build_rectangle_mesh(8, 4);
  const Mesh fine = build_rectangle_mesh(16, 8);
  CHECK(fine.gamma_i.size() - 1 == 2 * (coarse.gamma_i.size() - 1));
  CHECK(count_tag(fine, BoundaryTag::D) == 2 * count_tag(coarse, BoundaryTag::D));
  CHECK(fine.gamma_i.length() == doctest::Approx(coarse.gamma_i.length()).epsilon(1e-14));
}

TEST_CASE("curvature per domain") {
  DomainSpec rect{DomainKind::Rectangle, 0.95, [](const Point&) { return 1.0; }};
  DomainSpec ann{DomainKind::HalfAnnulus, 0.95, [](const Point&) { return 1.0; }};
  for (double s : {0.0, 0.3, 1.7, kPi}) {
    CHECK(curvature(rect, s) == 0.0);
    CHECK(curvature(ann, s) == 1.0);
  }
  CHECK_NOTHROW(rect.validate());
  CHECK(2.0 * curvature(rect, 1.0) + rect.gamma > 0.0);
}

TEST_CASE("domain validation") {
  DomainSpec spec{DomainKind::Rectangle, 0.0, [](const Point&) { return 1.0; }};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.gamma = 0.5;
  spec.flux = nullptr;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  DomainSpec ann{DomainKind::HalfAnnulus, 1.5, [](const Point&) { return 1.0; }, 1.0, -1.0};
  CHECK_THROWS_AS(ann.validate(), std::invalid_argument);  // 2 * (-1) + 1.5 < 0
}

TEST_CASE("deforming by zero is the identity") {
  const Mesh m = build_half_annulus_mesh(4, 16);
  const ThetaField zero{m.gamma_i.arclength, std::vector<double>(m.gamma_i.size(), 0.0)};
  const Mesh d = deform_mesh(m, zero);
  CHECK(d.fingerprint() == m.fingerprint());
}

TEST_CASE("rectangle deformation moves the top by theta and keeps the bottom") {
  const Mesh m = build_rectangle_mesh(32, 8);
  const Mesh d = deform_mesh(m, theta_on_chain(m, [](double s) { return -0.1 * std::sin(s); }));
  for (int v : d.gamma_i.vertices) {
    CHECK(d.vertices[v].y == doctest::Approx(1.0 - 0.1 * std::sin(m.vertices[v].x)).epsilon(1e-13));
  }
  for (int v : d.gamma_a.vertices) {
    CHECK(d.vertices[v].x == m.vertices[v].x);
    CHECK(d.vertices[v].y == m.vertices[v].y);
  }
}

TEST_CASE("deformation is affine in theta") {
  const Mesh m = build_half_annulus_mesh(3, 12);
  const ThetaField a = theta_on_chain(m, [](double s) { return 0.01 * std::sin(s); });
  const ThetaField b = theta_on_chain(m, [](double s) { return 0.02 * std::sin(2.0 * s); });
  ThetaField sum = a;
  for (std::size_t k = 0; k < sum.values.size(); ++k) sum.values[k] += b.values[k];
  const Mesh da = deform_mesh(m, a);
  const Mesh db = deform_mesh(m, b);
  const Mesh ds = deform_mesh(m, sum);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    const double ex = da.vertices[v].x + db.vertices[v].x - m.vertices[v].x;
    const double ey = da.vertices[v].y + db.vertices[v].y - m.vertices[v].y;
    CHECK(std::abs(ds.vertices[v].x - ex) < 1e-14);
    CHECK(std::abs(ds.vertices[v].y - ey) < 1e-14);
  }
}

TEST_CASE("deformation that folds the domain is rejected") {
  const Mesh m = build_rectangle_mesh(16, 8);
  // The blend spreads theta over the full height, so a single cell height is
  // harmless; folding needs the top pushed past the bottom.
  CHECK_NOTHROW(deform_mesh(m, theta_on_chain(m, [](double s) { return -0.125 * std::sin(s); })));
  CHECK_THROWS_AS(deform_mesh(m, theta_on_chain(m, [](double s) { return -1.5 * std::sin(s); })),
                  std::runtime_error);
}

TEST_CASE("deform_mesh requires one sample per chain node") {
  const Mesh m = build_rectangle_mesh(4, 2);
  CHECK_THROWS_AS(deform_mesh(m, ThetaField{{0.0, 1.0}, {0.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("theta derivative by finite differences") {
  ThetaField t;
  for (int k = 0; k <= 10; ++k) {
    t.s.push_back(0.1 * k);
    t.values.push_back(3.0 * 0.1 * k - 1.0);
  }
  for (double d : t.derivative()) CHECK(d == doctest::Approx(3.0));
}

TEST_CASE("mesh listing format") {
  const Mesh m = build_rectangle_mesh(2, 2);
  std::ostringstream out;
  write_mesh_listing(m, out);
  const std::string text = out.str();
  CHECK(text.rfind("# vertices 9\n", 0) == 0);
  CHECK(text.find("# triangles 8\n") != std::string::npos);
  CHECK(text.find("# boundary_edges 8\n") != std::string::npos);
  CHECK(text.find(" A\n") != std::string::npos);
  CHECK(text.find(" I\n") != std::string::npos);
  CHECK(text.find(" D\n") != std::string::npos);
}

TEST_CASE("domain kind names round trip") {
  for (DomainKind k : {DomainKind::Rectangle, DomainKind::HalfAnnulus}) {
    CHECK(domain_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(domain_kind_from_string("disc"), std::invalid_argument);
}
