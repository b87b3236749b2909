#pragma once

// Computational domains, structured triangular meshes with tagged boundary
// chains, and the normal deformation that realizes a perturbed Robin boundary.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace robin {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class DomainKind { Rectangle, HalfAnnulus };

/// Boundary parts: A is accessible (Neumann flux, measurements), I is the
/// inaccessible Robin part, D is grounded (Dirichlet).
enum class BoundaryTag : std::uint8_t { A, I, D };

char tag_letter(BoundaryTag tag);
std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

using PlaneFunction = std::function<double(const Point&)>;

/// One instance of the mixed boundary value problem.
///
/// `curvature_multiplier` scales the curvature inside the sensitivity
/// boundary term gamma * (gamma + multiplier * H). The weak form uses 1, the
/// strong form 2; both agree on flat boundaries. `curvature_sign` fixes the
/// sign of H on the inner semicircle of the half annulus.
struct DomainSpec {
  DomainKind kind = DomainKind::Rectangle;
  double gamma = 1.0;
  PlaneFunction flux;
  double curvature_multiplier = 1.0;
  double curvature_sign = 1.0;

  /// Checks gamma > 0 and 2H + gamma > 0. Throws std::invalid_argument.
  void validate() const;
};

/// Arclength of the reference Robin boundary (pi for both domains).
double gamma_i_length(DomainKind kind);

/// Curvature H(s) of the Robin boundary. Zero on the flat top of the
/// rectangle, `curvature_sign` on the unit inner semicircle.
double curvature(const DomainSpec& spec, double s);

struct BoundaryEdge {
  std::array<int, 2> v{};
  BoundaryTag tag = BoundaryTag::A;
};

/// Ordered vertex chain along one tagged boundary part with cumulative
/// arclength measured along the mesh edges.
struct BoundaryChain {
  BoundaryTag tag = BoundaryTag::A;
  std::vector<int> vertices;
  std::vector<double> arclength;

  [[nodiscard]] std::size_t size() const { return vertices.size(); }
  [[nodiscard]] double length() const { return arclength.empty() ? 0.0 : arclength.back(); }
};

class Mesh {
 public:
  DomainKind kind = DomainKind::Rectangle;
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  BoundaryChain gamma_i;
  BoundaryChain gamma_a;

  // Deformation data: every vertex follows the Gamma_I chain node `anchor`
  // with weight `blend` in [0, 1] (1 on Gamma_I, 0 on Gamma_A).
  std::vector<int> anchor;
  std::vector<double> blend;
  // Outward unit normal of the domain at each Gamma_I chain node.
  std::vector<Point> gamma_i_normals;

  [[nodiscard]] std::size_t num_vertices() const { return vertices.size(); }
  [[nodiscard]] std::size_t num_triangles() const { return triangles.size(); }
  [[nodiscard]] const BoundaryChain& chain(BoundaryTag tag) const;

  /// Per-vertex flag: true on vertices touching a Gamma_D edge.
  [[nodiscard]] std::vector<bool> dirichlet_mask() const;

  /// Signed area of triangle t (positive for counter-clockwise ordering).
  [[nodiscard]] double signed_area(std::size_t t) const;

  /// Throws std::runtime_error on a degenerate or inverted triangle, a
  /// non-monotone chain, or inconsistent deformation data.
  void validate() const;

  /// FNV-1a hash over vertex coordinates and connectivity, hex encoded.
  [[nodiscard]] std::string fingerprint() const;
};

/// (0, pi) x (0, 1): bottom tagged A, top tagged I, sides tagged D.
/// Each grid cell is split into two triangles with alternating diagonals.
Mesh build_rectangle_mesh(int nx, int ny);

/// {1 < r < 2, 0 < angle < pi}: outer arc A, inner arc I, segments on y = 0
/// tagged D. `nr` radial cells, `nt` angular cells.
Mesh build_half_annulus_mesh(int nr, int nt);

/// Normal displacement of Gamma_I sampled at the Gamma_I chain nodes.
struct ThetaField {
  std::vector<double> s;
  std::vector<double> values;

  /// Central differences in the interior, one-sided at the ends.
  [[nodiscard]] std::vector<double> derivative() const;
};

/// Moves Gamma_I nodes along the outward normal by theta and interior nodes
/// by the blended displacement of their anchor. Throws std::runtime_error if
/// a triangle degenerates or inverts.
Mesh deform_mesh(const Mesh& mesh, const ThetaField& theta);

/// Plain-text listing: "# vertices N" then "x y" lines, "# triangles M" then
/// "i j k" lines, "# boundary_edges K" then "i j TAG" lines.
void write_mesh_listing(const Mesh& mesh, std::ostream& out);

}  // namespace robin
