#pragma once

#include <span>
#include <vector>

#include "mgn/dataset.hpp"
#include "mgn/mesher.hpp"
#include "mgn/nn.hpp"
#include "mgn/rng.hpp"

namespace mgn {

inline constexpr int kEdgeFeatures = 3;
inline constexpr int kNodeFeatures = 2 + kNumNodeTypes;
inline constexpr int kOutputs = 3;

/// Directed graph of a mesh: every undirected edge appears in both directions.
/// Edges are sorted by (receiver, sender), which fixes the summation order of
/// the incoming-edge aggregation.
struct Graph {
  int num_nodes = 0;
  std::vector<int> senders;
  std::vector<int> receivers;
  /// Raw features of edge u -> w: (x_u - x_w, |x_u - x_w|), one column per edge.
  Matrix edge_features;

  int num_edges() const { return static_cast<int>(senders.size()); }
};

Graph build_graph(std::span<const Vec2> vertices, std::span<const std::array<int, 3>> triangles);
Graph build_graph(const Mesh& mesh);

struct GraphSample {
  Matrix node_features;  // kNodeFeatures x V: normalized velocity, one-hot type
  Matrix edge_features;  // kEdgeFeatures x E, normalized
  Matrix target;         // kOutputs x V, empty when absent
};

/// 2 x V velocity block of a (vx, vy, p) frame.
Matrix frame_velocity(std::span<const double> frame);

GraphSample encode_state(const Graph& graph, const Matrix& velocity, std::span<const NodeType> types,
                         const NormStats& stats);

/// Normalized targets ((v_next - v) / dt, p_next) for input velocity `velocity`.
Matrix encode_target(const Matrix& velocity, std::span<const double> next_frame, double dt, const NormStats& stats);

/// Adds i.i.d. N(0, sigma^2) noise to every velocity component, vertex by
/// vertex (x then y).
void add_noise(Matrix& velocity, double sigma, Rng& rng);

}  // namespace mgn
