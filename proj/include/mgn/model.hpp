#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "mgn/dataset.hpp"
#include "mgn/graph.hpp"
#include "mgn/nn.hpp"
#include "mgn/solver.hpp"

namespace mgn {

struct MgnConfig {
  int latent = 128;
  int hidden_layers = 2;
  int blocks = 15;
  /// All message-passing blocks apply the same edge and node networks.
  bool shared_processor = true;

  friend bool operator==(const MgnConfig&, const MgnConfig&) = default;
};

void to_json(nlohmann::json& j, const MgnConfig& c);
void from_json(const nlohmann::json& j, MgnConfig& c);

/// Encode-process-decode network. MLP hidden widths equal the latent width.
class MgnModel {
 public:
  struct Tape {
    Mlp::Tape node_encoder, edge_encoder, decoder;
    std::vector<Mlp::Tape> edge, node;
  };

  explicit MgnModel(const MgnConfig& cfg = {});

  void init(std::uint64_t seed);

  const MgnConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  /// Normalized output q (kOutputs x V).
  Matrix forward(const Graph& graph, const GraphSample& sample, Tape* tape = nullptr) const;
  /// Accumulates dLoss/dtheta for the recorded forward pass.
  void backward(const Graph& graph, const Tape& tape, const Matrix& grad_q);

  const Mlp& edge_mlp(int block) const { return edge_[cfg_.shared_processor ? 0 : block]; }
  const Mlp& node_mlp(int block) const { return node_[cfg_.shared_processor ? 0 : block]; }
  const Mlp& node_encoder() const { return node_encoder_; }
  const Mlp& edge_encoder() const { return edge_encoder_; }
  const Mlp& decoder() const { return decoder_; }

 private:
  MgnConfig cfg_;
  ParamStore store_;
  Mlp node_encoder_, edge_encoder_, decoder_;
  std::vector<Mlp> edge_, node_;
};

struct NextState {
  Matrix velocity;  // 2 x V
  Eigen::RowVectorXd pressure;
};

/// v_{k+1} = v_k + dt * q1, p_{k+1} = q2 for denormalized q.
NextState predict_next_state(const Matrix& velocity, const Matrix& q, double dt);

/// Denormalizes a network output with the target statistics.
Matrix denormalize_output(const Matrix& q, const NormStats& stats);

/// One-step simulator on a fixed mesh. Velocities at inflow and wall vertices
/// are reset to their Dirichlet values after every step.
class Simulator {
 public:
  Simulator(const MgnModel& model, const NormStats& stats, const Mesh& mesh, const DomainSpec& domain, double dt);

  /// Next (vx, vy, p) frame from the velocity of `frame`.
  std::vector<double> step(std::span<const double> frame) const;

  const Graph& graph() const { return graph_; }

 private:
  const MgnModel& model_;
  NormStats stats_;
  const Mesh& mesh_;
  DomainSpec domain_;
  double dt_;
  Graph graph_;
  GraphSample sample_;
};

/// Autoregressive rollout seeded with the first stored frame of `truth`;
/// the result has `frames` frames and frame 0 equals the seed.
Trajectory rollout(const MgnModel& model, const NormStats& stats, const Trajectory& truth, int frames);
Trajectory rollout(const MgnModel& model, const NormStats& stats, const Trajectory& truth);

/// Frame 0 copied from the truth, frame j predicted from true frame j - 1.
Trajectory one_step_predictions(const MgnModel& model, const NormStats& stats, const Trajectory& truth);

}  // namespace mgn
