#include "robin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <utility>

#include <fmt/format.h>

namespace robin {

namespace {

constexpr double kPi = std::numbers::pi;

std::pair<int, int> sorted_edge(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

void fill_arclength(const Mesh& mesh, BoundaryChain& chain) {
  chain.arclength.assign(chain.vertices.size(), 0.0);
  for (std::size_t k = 1; k < chain.vertices.size(); ++k) {
    chain.arclength[k] = chain.arclength[k - 1] +
                         distance(mesh.vertices[chain.vertices[k - 1]], mesh.vertices[chain.vertices[k]]);
  }
}

// Splits cell (a, b, c, d), listed counter-clockwise, along one of its two
// diagonals depending on the parity of the cell index.
void push_cell(Mesh& mesh, int a, int b, int c, int d, bool flip) {
  if (!flip) {
    mesh.triangles.push_back({a, b, c});
    mesh.triangles.push_back({a, c, d});
  } else {
    mesh.triangles.push_back({a, b, d});
    mesh.triangles.push_back({b, c, d});
  }
}

}  // namespace

char tag_letter(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::A: return 'A';
    case BoundaryTag::I: return 'I';
    case BoundaryTag::D: return 'D';
  }
  return '?';
}

std::string to_string(DomainKind kind) {
  return kind == DomainKind::Rectangle ? "rectangle" : "half_annulus";
}

DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "rectangle") return DomainKind::Rectangle;
  if (name == "half_annulus") return DomainKind::HalfAnnulus;
  throw std::invalid_argument(fmt::format("unknown domain kind '{}'", name));
}

void DomainSpec::validate() const {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument(fmt::format("impedance gamma must be positive, got {}", gamma));
  }
  // H is constant on both reference boundaries, so one sample suffices.
  const double h = curvature(*this, 0.0);
  if (!(2.0 * h + gamma > 0.0)) {
    throw std::invalid_argument(
        fmt::format("assumption 2H + gamma > 0 violated: H = {}, gamma = {}", h, gamma));
  }
  if (!flux) throw std::invalid_argument("domain spec has no flux function");
}

double gamma_i_length(DomainKind) { return kPi; }

double curvature(const DomainSpec& spec, double s) {
  const double len = gamma_i_length(spec.kind);
  if (s < -1e-12 || s > len + 1e-12) {
    throw std::out_of_range(fmt::format("arclength {} outside [0, {}]", s, len));
  }
  return spec.kind == DomainKind::Rectangle ? 0.0 : spec.curvature_sign;
}

const BoundaryChain& Mesh::chain(BoundaryTag tag) const {
  if (tag == BoundaryTag::I) return gamma_i;
  if (tag == BoundaryTag::A) return gamma_a;
  throw std::invalid_argument("no arclength chain is kept for Gamma_D");
}

std::vector<bool> Mesh::dirichlet_mask() const {
  std::vector<bool> mask(vertices.size(), false);
  for (const auto& e : boundary_edges) {
    if (e.tag == BoundaryTag::D) {
      mask[e.v[0]] = true;
      mask[e.v[1]] = true;
    }
  }
  return mask;
}

double Mesh::signed_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point& a = vertices[tri[0]];
  const Point& b = vertices[tri[1]];
  const Point& c = vertices[tri[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

void Mesh::validate() const {
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    if (!(signed_area(t) > 0.0)) {
      throw std::runtime_error(fmt::format("triangle {} has non-positive area {}", t, signed_area(t)));
    }
  }

  // Topological boundary: edges used by exactly one triangle.
  std::map<std::pair<int, int>, int> use_count;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) ++use_count[sorted_edge(tri[k], tri[(k + 1) % 3])];
  }
  std::map<std::pair<int, int>, int> tagged;
  for (const auto& e : boundary_edges) {
    const auto key = sorted_edge(e.v[0], e.v[1]);
    if (++tagged[key] > 1) {
      throw std::runtime_error(fmt::format("boundary edge ({}, {}) tagged twice", key.first, key.second));
    }
    const auto it = use_count.find(key);
    if (it == use_count.end() || it->second != 1) {
      throw std::runtime_error(fmt::format("edge ({}, {}) is tagged but not on the boundary", key.first, key.second));
    }
  }
  for (const auto& [key, count] : use_count) {
    if (count == 1 && !tagged.contains(key)) {
      throw std::runtime_error(fmt::format("boundary edge ({}, {}) carries no tag", key.first, key.second));
    }
  }

  for (const BoundaryChain* c : {&gamma_i, &gamma_a}) {
    if (c->vertices.size() < 2 || c->arclength.size() != c->vertices.size()) {
      throw std::runtime_error("boundary chain is too short or has no arclength");
    }
    for (std::size_t k = 1; k < c->arclength.size(); ++k) {
      if (!(c->arclength[k] > c->arclength[k - 1])) {
        throw std::runtime_error("boundary chain arclength is not strictly increasing");
      }
      if (!tagged.contains(sorted_edge(c->vertices[k - 1], c->vertices[k]))) {
        throw std::runtime_error("boundary chain is not connected through tagged edges");
      }
    }
  }
  if (anchor.size() != vertices.size() || blend.size() != vertices.size() ||
      gamma_i_normals.size() != gamma_i.size()) {
    throw std::runtime_error("mesh deformation data has inconsistent sizes");
  }
}

std::string Mesh::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : vertices) {
    mix(&p.x, sizeof p.x);
    mix(&p.y, sizeof p.y);
  }
  for (const auto& t : triangles) mix(t.data(), sizeof(int) * 3);
  return fmt::format("{:016x}", h);
}

Mesh build_rectangle_mesh(int nx, int ny) {
  if (nx < 2 || ny < 2) {
    throw std::invalid_argument(fmt::format("rectangle mesh needs nx, ny >= 2, got {} x {}", nx, ny));
  }
  Mesh mesh;
  mesh.kind = DomainKind::Rectangle;
  const auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double x = (i == nx) ? kPi : kPi * i / nx;
      const double y = (j == ny) ? 1.0 : static_cast<double>(j) / ny;
      mesh.vertices.push_back({x, y});
      mesh.anchor.push_back(i);
      mesh.blend.push_back(y);
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      push_cell(mesh, vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1), (i + j) % 2 == 1);
    }
  }
  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({{vid(i, 0), vid(i + 1, 0)}, BoundaryTag::A});
    mesh.boundary_edges.push_back({{vid(i + 1, ny), vid(i, ny)}, BoundaryTag::I});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({{vid(0, j + 1), vid(0, j)}, BoundaryTag::D});
    mesh.boundary_edges.push_back({{vid(nx, j), vid(nx, j + 1)}, BoundaryTag::D});
  }

  mesh.gamma_i.tag = BoundaryTag::I;
  mesh.gamma_a.tag = BoundaryTag::A;
  for (int i = 0; i <= nx; ++i) {
    mesh.gamma_i.vertices.push_back(vid(i, ny));
    mesh.gamma_a.vertices.push_back(vid(i, 0));
  }
  fill_arclength(mesh, mesh.gamma_i);
  fill_arclength(mesh, mesh.gamma_a);
  mesh.gamma_i_normals.assign(mesh.gamma_i.size(), Point{0.0, 1.0});
  return mesh;
}

Mesh build_half_annulus_mesh(int nr, int nt) {
  if (nr < 2 || nt < 4) {
    throw std::invalid_argument(fmt::format("half annulus mesh needs nr >= 2, nt >= 4, got {} x {}", nr, nt));
  }
  Mesh mesh;
  mesh.kind = DomainKind::HalfAnnulus;
  const auto vid = [nt](int k, int j) { return j * (nt + 1) + k; };

  // k runs from angle pi (x < 0) to angle 0, so arclength grows with x.
  std::vector<double> cos_t(nt + 1), sin_t(nt + 1);
  for (int k = 0; k <= nt; ++k) {
    const double t = kPi * (1.0 - static_cast<double>(k) / nt);
    cos_t[k] = std::cos(t);
    sin_t[k] = std::sin(t);
  }
  cos_t[0] = -1.0;
  sin_t[0] = 0.0;
  cos_t[nt] = 1.0;
  sin_t[nt] = 0.0;
  if (nt % 2 == 0) {
    cos_t[nt / 2] = 0.0;
    sin_t[nt / 2] = 1.0;
  }

  for (int j = 0; j <= nr; ++j) {
    const double r = (j == nr) ? 2.0 : 1.0 + static_cast<double>(j) / nr;
    for (int k = 0; k <= nt; ++k) {
      mesh.vertices.push_back({r * cos_t[k], r * sin_t[k]});
      mesh.anchor.push_back(k);
      mesh.blend.push_back(2.0 - r);
    }
  }
  for (int j = 0; j < nr; ++j) {
    for (int k = 0; k < nt; ++k) {
      push_cell(mesh, vid(k, j), vid(k + 1, j), vid(k + 1, j + 1), vid(k, j + 1), (k + j) % 2 == 1);
    }
  }
  for (int k = 0; k < nt; ++k) {
    mesh.boundary_edges.push_back({{vid(k, 0), vid(k + 1, 0)}, BoundaryTag::I});
    mesh.boundary_edges.push_back({{vid(k + 1, nr), vid(k, nr)}, BoundaryTag::A});
  }
  for (int j = 0; j < nr; ++j) {
    mesh.boundary_edges.push_back({{vid(0, j + 1), vid(0, j)}, BoundaryTag::D});
    mesh.boundary_edges.push_back({{vid(nt, j), vid(nt, j + 1)}, BoundaryTag::D});
  }

  mesh.gamma_i.tag = BoundaryTag::I;
  mesh.gamma_a.tag = BoundaryTag::A;
  for (int k = 0; k <= nt; ++k) {
    mesh.gamma_i.vertices.push_back(vid(k, 0));
    mesh.gamma_a.vertices.push_back(vid(k, nr));
    // The domain lies outside the unit circle, so its outward normal on
    // Gamma_I points to the origin.
    mesh.gamma_i_normals.push_back({-cos_t[k], -sin_t[k]});
  }
  fill_arclength(mesh, mesh.gamma_i);
  fill_arclength(mesh, mesh.gamma_a);
  return mesh;
}

std::vector<double> ThetaField::derivative() const {
  const std::size_t n = values.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d.front() = (values[1] - values[0]) / (s[1] - s[0]);
  d.back() = (values[n - 1] - values[n - 2]) / (s[n - 1] - s[n - 2]);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    d[k] = (values[k + 1] - values[k - 1]) / (s[k + 1] - s[k - 1]);
  }
  return d;
}

Mesh deform_mesh(const Mesh& mesh, const ThetaField& theta) {
  if (theta.values.size() != mesh.gamma_i.size()) {
    throw std::invalid_argument(fmt::format("theta has {} samples but Gamma_I has {} nodes",
                                            theta.values.size(), mesh.gamma_i.size()));
  }
  Mesh out = mesh;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const int k = mesh.anchor[v];
    const double shift = theta.values[k] * mesh.blend[v];
    if (shift == 0.0) continue;
    out.vertices[v].x += shift * mesh.gamma_i_normals[k].x;
    out.vertices[v].y += shift * mesh.gamma_i_normals[k].y;
  }
  for (std::size_t t = 0; t < out.triangles.size(); ++t) {
    if (!(out.signed_area(t) > 0.0)) {
      throw std::runtime_error(
          fmt::format("deformation degenerates triangle {} (area {}); theta is too large for this mesh", t,
                      out.signed_area(t)));
    }
  }
  fill_arclength(out, out.gamma_i);
  return out;
}

void write_mesh_listing(const Mesh& mesh, std::ostream& out) {
  out << "# vertices " << mesh.vertices.size() << '\n';
  for (const auto& p : mesh.vertices) out << fmt::format("{:.17g} {:.17g}\n", p.x, p.y);
  out << "# triangles " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "# boundary_edges " << mesh.boundary_edges.size() << '\n';
  for (const auto& e : mesh.boundary_edges) out << e.v[0] << ' ' << e.v[1] << ' ' << tag_letter(e.tag) << '\n';
}

}  // namespace robin
