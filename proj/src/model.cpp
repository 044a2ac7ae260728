#include "mgn/model.hpp"

#include <stdexcept>
#include <string>

namespace mgn {

void to_json(nlohmann::json& j, const MgnConfig& c) {
  j = nlohmann::json{{"latent", c.latent},
                     {"hidden_layers", c.hidden_layers},
                     {"blocks", c.blocks},
                     {"shared_processor", c.shared_processor}};
}

void from_json(const nlohmann::json& j, MgnConfig& c) {
  c.latent = j.value("latent", c.latent);
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.blocks = j.value("blocks", c.blocks);
  c.shared_processor = j.value("shared_processor", c.shared_processor);
}

MgnModel::MgnModel(const MgnConfig& cfg) : cfg_(cfg) {
  if (cfg.latent < 1 || cfg.blocks < 1 || cfg.hidden_layers < 0) throw std::invalid_argument("invalid MgnConfig");
  const int h = cfg.latent, n = cfg.hidden_layers;
  node_encoder_ = Mlp(store_, "node_encoder", kNodeFeatures, h, n, h, true);
  edge_encoder_ = Mlp(store_, "edge_encoder", kEdgeFeatures, h, n, h, true);
  const int distinct = cfg.shared_processor ? 1 : cfg.blocks;
  for (int b = 0; b < distinct; ++b) {
    const std::string p = "processor." + std::to_string(b);
    edge_.emplace_back(store_, p + ".edge", 3 * h, h, n, h, true);
    node_.emplace_back(store_, p + ".node", 2 * h, h, n, h, true);
  }
  decoder_ = Mlp(store_, "decoder", h, h, n, kOutputs, false);
}

void MgnModel::init(std::uint64_t seed) {
  Rng rng(seed);
  node_encoder_.init(store_, rng);
  edge_encoder_.init(store_, rng);
  for (std::size_t b = 0; b < edge_.size(); ++b) {
    edge_[b].init(store_, rng);
    node_[b].init(store_, rng);
  }
  decoder_.init(store_, rng);
  store_.zero_grad();
  store_.set_step_count(0);
  for (auto& p : store_.all()) {
    p.m.setZero();
    p.v.setZero();
  }
}

Matrix MgnModel::forward(const Graph& graph, const GraphSample& sample, Tape* tape) const {
  const int n_nodes = graph.num_nodes, n_edges = graph.num_edges(), h = cfg_.latent;
  if (sample.node_features.cols() != n_nodes || sample.edge_features.cols() != n_edges) {
    throw std::invalid_argument("sample does not match the graph");
  }
  if (tape) {
    tape->edge.assign(cfg_.blocks, {});
    tape->node.assign(cfg_.blocks, {});
  }
  Matrix v = node_encoder_.forward(store_, sample.node_features, tape ? &tape->node_encoder : nullptr);
  Matrix e = edge_encoder_.forward(store_, sample.edge_features, tape ? &tape->edge_encoder : nullptr);
  Matrix edge_in(3 * h, n_edges), node_in(2 * h, n_nodes);
  for (int b = 0; b < cfg_.blocks; ++b) {
    edge_in.topRows(h) = e;
    for (int k = 0; k < n_edges; ++k) {
      edge_in.block(h, k, h, 1) = v.col(graph.senders[k]);
      edge_in.block(2 * h, k, h, 1) = v.col(graph.receivers[k]);
    }
    const Matrix e_new = edge_mlp(b).forward(store_, edge_in, tape ? &tape->edge[b] : nullptr);
    node_in.topRows(h) = v;
    node_in.bottomRows(h).setZero();
    for (int k = 0; k < n_edges; ++k) node_in.block(h, graph.receivers[k], h, 1) += e_new.col(k);
    const Matrix v_new = node_mlp(b).forward(store_, node_in, tape ? &tape->node[b] : nullptr);
    e += e_new;
    v += v_new;
  }
  return decoder_.forward(store_, v, tape ? &tape->decoder : nullptr);
}

void MgnModel::backward(const Graph& graph, const Tape& tape, const Matrix& grad_q) {
  const int n_edges = graph.num_edges(), h = cfg_.latent;
  Matrix gv = decoder_.backward(store_, tape.decoder, grad_q);
  Matrix ge = Matrix::Zero(h, n_edges);
  for (int b = cfg_.blocks - 1; b >= 0; --b) {
    // Residual streams pass gv and ge straight through.
    const Matrix g_node_in = node_mlp(b).backward(store_, tape.node[b], gv);
    gv += g_node_in.topRows(h);
    Matrix g_enew = ge;
    for (int k = 0; k < n_edges; ++k) g_enew.col(k) += g_node_in.block(h, graph.receivers[k], h, 1);
    const Matrix g_edge_in = edge_mlp(b).backward(store_, tape.edge[b], g_enew);
    ge += g_edge_in.topRows(h);
    for (int k = 0; k < n_edges; ++k) {
      gv.col(graph.senders[k]) += g_edge_in.block(h, k, h, 1);
      gv.col(graph.receivers[k]) += g_edge_in.block(2 * h, k, h, 1);
    }
  }
  edge_encoder_.backward(store_, tape.edge_encoder, ge);
  node_encoder_.backward(store_, tape.node_encoder, gv);
}

NextState predict_next_state(const Matrix& velocity, const Matrix& q, double dt) {
  if (q.rows() != kOutputs || q.cols() != velocity.cols()) throw std::invalid_argument("predict_next_state: shape");
  return {velocity + dt * q.topRows(2), q.row(2)};
}

Matrix denormalize_output(const Matrix& q, const NormStats& stats) {
  Matrix out(q.rows(), q.cols());
  for (int c = 0; c < 2; ++c) {
    out.row(c) = (q.row(c).array() * stats.derivative_std[c] + stats.derivative_mean[c]).matrix();
  }
  out.row(2) = (q.row(2).array() * stats.pressure_std + stats.pressure_mean).matrix();
  return out;
}

Simulator::Simulator(const MgnModel& model, const NormStats& stats, const Mesh& mesh, const DomainSpec& domain,
                     double dt)
    : model_(model), stats_(stats), mesh_(mesh), domain_(domain), dt_(dt), graph_(build_graph(mesh)) {
  sample_ = encode_state(graph_, Matrix::Zero(2, graph_.num_nodes), mesh.node_type, stats);
}

std::vector<double> Simulator::step(std::span<const double> frame) const {
  const Matrix v = frame_velocity(frame);
  GraphSample sample = sample_;
  for (int i = 0; i < graph_.num_nodes; ++i) {
    for (int c = 0; c < 2; ++c) sample.node_features(c, i) = normalize(v(c, i), stats_.velocity_mean[c], stats_.velocity_std[c]);
  }
  const Matrix q = denormalize_output(model_.forward(graph_, sample), stats_);
  const NextState next = predict_next_state(v, q, dt_);
  std::vector<double> out(frame.size());
  for (int i = 0; i < graph_.num_nodes; ++i) {
    double vx = next.velocity(0, i), vy = next.velocity(1, i);
    switch (mesh_.node_type[i]) {
      case NodeType::inflow:
        vx = inflow_profile(mesh_.vertices[i].y, domain_.inflow_peak).x;
        vy = 0.0;
        break;
      case NodeType::wall:
        vx = vy = 0.0;
        break;
      default:
        break;
    }
    out[3 * i] = vx;
    out[3 * i + 1] = vy;
    out[3 * i + 2] = next.pressure[i];
  }
  return out;
}

namespace {

Trajectory predicted_shell(const Trajectory& truth) {
  Trajectory t;
  t.mesh = truth.mesh;
  t.domain = truth.domain;
  t.frame_interval = truth.frame_interval;
  t.predicted = true;
  return t;
}

void check_finite(const std::vector<double>& f, int index) {
  for (double x : f) {
    if (!std::isfinite(x)) throw std::runtime_error("non-finite prediction at step " + std::to_string(index));
  }
}

}  // namespace

Trajectory rollout(const MgnModel& model, const NormStats& stats, const Trajectory& truth, int frames) {
  if (truth.num_frames() < 1) throw std::invalid_argument("rollout: empty trajectory");
  if (frames < 1) throw std::invalid_argument("rollout: frame count must be positive");
  Trajectory out = predicted_shell(truth);
  const Simulator sim(model, stats, out.mesh, out.domain, truth.frame_interval);
  out.frames.push_back(truth.frames[0]);
  out.times.push_back(truth.times.empty() ? truth.frame_interval : truth.times[0]);
  for (int j = 1; j < frames; ++j) {
    out.frames.push_back(sim.step(out.frames.back()));
    check_finite(out.frames.back(), j);
    out.times.push_back(out.times[0] + j * truth.frame_interval);
  }
  return out;
}

Trajectory rollout(const MgnModel& model, const NormStats& stats, const Trajectory& truth) {
  return rollout(model, stats, truth, truth.num_frames());
}

Trajectory one_step_predictions(const MgnModel& model, const NormStats& stats, const Trajectory& truth) {
  if (truth.num_frames() < 1) throw std::invalid_argument("one_step_predictions: empty trajectory");
  Trajectory out = predicted_shell(truth);
  const Simulator sim(model, stats, out.mesh, out.domain, truth.frame_interval);
  out.frames.push_back(truth.frames[0]);
  for (int j = 1; j < truth.num_frames(); ++j) {
    out.frames.push_back(sim.step(truth.frames[j - 1]));
    check_finite(out.frames.back(), j);
  }
  out.times = truth.times;
  return out;
}

}  // namespace mgn
