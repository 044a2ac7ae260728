#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "mgn/geometry.hpp"
#include "mgn/mesher.hpp"

using namespace mgn;

namespace {

double boundary_distance(Vec2 p, double length) {
  return std::min({p.x, length - p.x, p.y, kChannelHeight - p.y});
}

void check_mesh_invariants(const Mesh& m, const DomainSpec& spec, double near = 0.0098) {
  const double length = spec.channel_length;
  double area = 0;
  for (const auto& t : m.triangles) {
    const double a = signed_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    REQUIRE(a > 1e-10);
    area += a;
  }
  double holes = 0;
  for (const auto& o : spec.obstacles) {
    const auto poly = obstacle_polygon(o, near);
    for (std::size_t i = 0; i < poly.size(); ++i) holes += 0.5 * cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  // Full cover of the channel minus the obstacle polygons, without overlap.
  CHECK(area == doctest::Approx(length * kChannelHeight - holes).epsilon(1e-9));

  const auto edges = undirected_edges(m);
  const long euler = static_cast<long>(m.num_vertices()) - static_cast<long>(edges.size()) +
                     static_cast<long>(m.num_triangles());
  CHECK(euler == 1 - static_cast<long>(spec.obstacles.size()));

  REQUIRE(m.node_type.size() == m.num_vertices());
  std::set<int> on_obstacle;
  REQUIRE(m.obstacle_boundaries.size() == spec.obstacles.size());
  for (const auto& loop : m.obstacle_boundaries) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
      on_obstacle.insert(loop[i]);
      CHECK(norm(m.vertices[loop[(i + 1) % loop.size()]] - m.vertices[loop[i]]) <= near + 1e-9);
    }
  }
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    const Vec2 p = m.vertices[i];
    const NodeType t = m.node_type[i];
    if (std::abs(p.x) < 1e-9) {
      CHECK(t == NodeType::inflow);
    } else if (std::abs(p.x - length) < 1e-9) {
      CHECK(t == NodeType::outflow);
    } else if (std::abs(p.y) < 1e-9 || std::abs(p.y - kChannelHeight) < 1e-9 || on_obstacle.count(static_cast<int>(i))) {
      CHECK(t == NodeType::wall);
    } else {
      CHECK(t == NodeType::fluid);
      CHECK(boundary_distance(p, length) > 1e-6);
    }
  }
}

}  // namespace

TEST_CASE("reference configuration matches the published mesh size") {
  const DomainSpec spec = reference_domain();
  const Mesh m = triangulate(spec);
  const MeshStats s = mesh_stats(m);
  CHECK(s.vertices >= 1655);
  CHECK(s.vertices <= 2483);
  CHECK(s.cells >= static_cast<std::size_t>(0.8 * 3924));
  CHECK(s.cells <= static_cast<std::size_t>(1.2 * 3924));
  CHECK(s.min_angle_deg >= 20.0);
  CHECK(s.min_edge > 0.0);
  check_mesh_invariants(m, spec);
}

TEST_CASE("elongated benchmark channel") {
  DomainSpec spec;
  spec.channel_length = kBenchmarkChannelLength;
  ObstacleSpec c;
  c.center = {0.2, 0.2};
  c.radius = 0.05;
  spec.obstacles.push_back(c);
  const Mesh m = triangulate(spec);
  CHECK(m.num_vertices() >= static_cast<std::size_t>(0.8 * 2582));
  CHECK(m.num_vertices() <= static_cast<std::size_t>(1.2 * 2582));
  CHECK(m.num_triangles() >= static_cast<std::size_t>(0.8 * 4898));
  CHECK(m.num_triangles() <= static_cast<std::size_t>(1.2 * 4898));
  check_mesh_invariants(m, spec);
}

TEST_CASE("every family meshes into a valid graded mesh") {
  for (auto f : kAllFamilies) {
    for (std::uint64_t i = 0; i < 4; ++i) {
      const DomainSpec spec = sample_geometry(f, 21, i);
      const Mesh m = triangulate(spec);
      CHECK(mesh_stats(m).min_angle_deg >= 20.0);
      check_mesh_invariants(m, spec);
    }
  }
}

TEST_CASE("obstacle-free channel and coarse meshes") {
  DomainSpec spec;
  const Mesh m = triangulate(spec);
  check_mesh_invariants(m, spec);
  const Mesh coarse = triangulate(reference_domain(), MesherOptions{}.scaled(2.0));
  CHECK(coarse.num_vertices() < triangulate(reference_domain()).num_vertices() / 2);
  check_mesh_invariants(coarse, reference_domain(), 2 * 0.0098);
}

TEST_CASE("meshing is deterministic") {
  const DomainSpec spec = sample_geometry(DatasetFamily::mixed_all, 4, 2);
  const Mesh a = triangulate(spec), b = triangulate(spec);
  CHECK(a.vertices == b.vertices);
  CHECK(a.triangles == b.triangles);
}

TEST_CASE("classify_nodes examples") {
  const DomainSpec spec = reference_domain();
  const std::vector<Vec2> pts = {{0.0, 0.2}, {0.8, 0.41}, {0.375, 0.2}, {0.8, 0.2}, {1.6, 0.1}, {0.0, 0.0}, {1.6, 0.41}};
  const auto types = classify_nodes(pts, spec);
  CHECK(types[0] == NodeType::inflow);
  CHECK(types[1] == NodeType::wall);
  CHECK(types[2] == NodeType::wall);
  CHECK(types[3] == NodeType::fluid);
  CHECK(types[4] == NodeType::outflow);
  CHECK(types[5] == NodeType::inflow);
  CHECK(types[6] == NodeType::outflow);
}

TEST_CASE("mesh_stats of a single triangle") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.triangles = {{0, 1, 2}};
  const MeshStats s = mesh_stats(m);
  CHECK(s.vertices == 3);
  CHECK(s.cells == 1);
  CHECK(s.min_angle_deg == doctest::Approx(45.0));
  CHECK(s.min_edge == doctest::Approx(1.0));
  CHECK(s.max_edge == doctest::Approx(std::sqrt(2.0)));
  CHECK(undirected_edges(m).size() == 3);
}

TEST_CASE("text dump lists every vertex and triangle") {
  const Mesh m = triangulate(reference_domain(), MesherOptions{}.scaled(3.0));
  std::ostringstream os;
  write_mesh_text(m, os);
  std::size_t lines = 0;
  for (char c : os.str()) lines += c == '\n';
  CHECK(lines >= m.num_vertices() + m.num_triangles());
}
