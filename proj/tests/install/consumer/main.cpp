#include <cmath>
#include <cstdio>

#include "robin/balancing.hpp"
#include "robin/geometry.hpp"

int main() {
  const robin::Mesh mesh = robin::build_rectangle_mesh(4, 2);
  const double t = robin::threshold(robin::BalancingConfig{});
  std::printf("vertices %zu threshold %.4e\n", mesh.num_vertices(), t);
  return mesh.num_vertices() == 15 && std::abs(t - 7.2361e-9) < 1e-12 ? 0 : 1;
}
