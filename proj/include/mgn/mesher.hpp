#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgn/geometry.hpp"

namespace mgn {

/// One-hot order used by the graph encoding: fluid, wall, inflow, outflow.
enum class NodeType : std::uint8_t { fluid = 0, wall = 1, inflow = 2, outflow = 3 };

inline constexpr int kNumNodeTypes = 4;

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<NodeType> node_type;
  /// Closed vertex loop per obstacle, in obstacle order.
  std::vector<std::vector<int>> obstacle_boundaries;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
};

struct MesherOptions {
  double far_size = 0.0225;
  double near_size = 0.0098;
  /// Growth of the target size with distance from the nearest obstacle.
  double grading = 1.0;
  /// Triangles with a smaller angle are refined.
  double min_angle_deg = 25.0;
  /// A triangle is refined while its longest edge exceeds size_factor * size(centroid).
  double size_factor = 1.3;
  std::size_t max_vertices = 500000;

  /// Uniformly coarser (factor > 1) or finer mesh with the same grading shape.
  MesherOptions scaled(double factor) const {
    MesherOptions o = *this;
    o.far_size *= factor;
    o.near_size *= factor;
    return o;
  }
};

class MeshingError : public std::runtime_error {
 public:
  MeshingError(const std::string& what, const DomainSpec& spec);
  const DomainSpec& spec() const { return spec_; }

 private:
  DomainSpec spec_;
};

/// Target element size at `p`: min(far, near + grading * distance to the
/// nearest obstacle outline).
double target_size(Vec2 p, const std::vector<std::vector<Vec2>>& obstacle_outlines, const MesherOptions& opts);

/// Conforming triangulation of the channel minus the obstacle interiors.
Mesh triangulate(const DomainSpec& spec, const MesherOptions& opts = {});

/// Types every vertex: x = 0 inflow, x = L outflow (corners included), top,
/// bottom and obstacle outlines wall, everything else fluid.
std::vector<NodeType> classify_nodes(std::span<const Vec2> vertices, const DomainSpec& spec,
                                     const MesherOptions& opts = {});

struct MeshStats {
  std::size_t vertices = 0;
  std::size_t cells = 0;
  double min_angle_deg = 0.0;
  double min_edge = 0.0;
  double max_edge = 0.0;
};

MeshStats mesh_stats(const Mesh& mesh);

/// Unique undirected edges (a < b), sorted lexicographically.
std::vector<std::array<int, 2>> undirected_edges(const Mesh& mesh);

double signed_area(Vec2 a, Vec2 b, Vec2 c);

/// Plain-text dump: header line, vertices with type, then triangles.
void write_mesh_text(const Mesh& mesh, std::ostream& os);

}  // namespace mgn
