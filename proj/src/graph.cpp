#include "mgn/graph.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace mgn {

Graph build_graph(std::span<const Vec2> vertices, std::span<const std::array<int, 3>> triangles) {
  std::vector<std::pair<int, int>> directed;  // (receiver, sender)
  directed.reserve(triangles.size() * 6);
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      directed.emplace_back(a, b);
      directed.emplace_back(b, a);
    }
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g;
  g.num_nodes = static_cast<int>(vertices.size());
  g.senders.reserve(directed.size());
  g.receivers.reserve(directed.size());
  g.edge_features.resize(kEdgeFeatures, static_cast<Eigen::Index>(directed.size()));
  for (std::size_t e = 0; e < directed.size(); ++e) {
    const auto [w, u] = directed[e];
    g.senders.push_back(u);
    g.receivers.push_back(w);
    const Vec2 d = vertices[u] - vertices[w];
    g.edge_features(0, e) = d.x;
    g.edge_features(1, e) = d.y;
    g.edge_features(2, e) = norm(d);
  }
  return g;
}

Graph build_graph(const Mesh& mesh) { return build_graph(mesh.vertices, mesh.triangles); }

Matrix frame_velocity(std::span<const double> frame) {
  const auto n = static_cast<Eigen::Index>(frame.size() / 3);
  Matrix v(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(0, i) = frame[3 * i];
    v(1, i) = frame[3 * i + 1];
  }
  return v;
}

GraphSample encode_state(const Graph& graph, const Matrix& velocity, std::span<const NodeType> types,
                         const NormStats& stats) {
  if (velocity.rows() != 2 || velocity.cols() != graph.num_nodes ||
      static_cast<int>(types.size()) != graph.num_nodes) {
    throw std::invalid_argument("encode_state: state does not match the graph");
  }
  GraphSample s;
  s.node_features = Matrix::Zero(kNodeFeatures, graph.num_nodes);
  for (int i = 0; i < graph.num_nodes; ++i) {
    for (int c = 0; c < 2; ++c) {
      s.node_features(c, i) = normalize(velocity(c, i), stats.velocity_mean[c], stats.velocity_std[c]);
    }
    s.node_features(2 + static_cast<int>(types[i]), i) = 1.0;
  }
  s.edge_features.resize(kEdgeFeatures, graph.num_edges());
  for (int e = 0; e < graph.num_edges(); ++e) {
    for (int c = 0; c < kEdgeFeatures; ++c) {
      s.edge_features(c, e) = normalize(graph.edge_features(c, e), stats.edge_mean[c], stats.edge_std[c]);
    }
  }
  return s;
}

Matrix encode_target(const Matrix& velocity, std::span<const double> next_frame, double dt, const NormStats& stats) {
  const Eigen::Index n = velocity.cols();
  if (static_cast<Eigen::Index>(next_frame.size()) != 3 * n) {
    throw std::invalid_argument("encode_target: frame size mismatch");
  }
  Matrix t(kOutputs, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      const double d = (next_frame[3 * i + c] - velocity(c, i)) / dt;
      t(c, i) = normalize(d, stats.derivative_mean[c], stats.derivative_std[c]);
    }
    t(2, i) = normalize(next_frame[3 * i + 2], stats.pressure_mean, stats.pressure_std);
  }
  return t;
}

void add_noise(Matrix& velocity, double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: negative sigma");
  if (sigma == 0.0) return;
  std::normal_distribution<double> dist(0.0, sigma);
  for (Eigen::Index i = 0; i < velocity.cols(); ++i) {
    for (Eigen::Index c = 0; c < velocity.rows(); ++c) velocity(c, i) += dist(rng);
  }
}

}  // namespace mgn
