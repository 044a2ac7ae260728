#include "mgn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mgn/binary_io.hpp"

namespace mgn {

using nlohmann::json;

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},       {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
           {"gamma", c.gamma},         {"noise_std", c.noise_std},   {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.gamma = j.value("gamma", c.gamma);
  c.noise_std = j.value("noise_std", c.noise_std);
  c.seed = j.value("seed", c.seed);
}

double lr_at_epoch(int epoch, double initial, double gamma) {
  if (epoch < 1) throw std::invalid_argument("lr_at_epoch: epochs start at 1");
  return initial * std::pow(gamma, epoch - 1);
}

double loss_at_node(const std::array<double, 3>& prediction, const std::array<double, 3>& truth) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (prediction[c] - truth[c]) * (prediction[c] - truth[c]);
  return s / 3.0;
}

double node_loss(const Matrix& prediction, const Matrix& target, Matrix* grad) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw std::invalid_argument("node_loss: shape mismatch");
  }
  const Matrix diff = prediction - target;
  const double n = static_cast<double>(prediction.cols());
  const double rows = static_cast<double>(prediction.rows());
  if (grad) *grad = diff * (2.0 / (rows * n));
  return diff.squaredNorm() / (rows * n);
}

std::vector<Transition> shuffled_transitions(std::span<const Trajectory> trajs, Rng& rng) {
  std::vector<Transition> out;
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    for (int k = 0; k + 1 < trajs[t].num_frames(); ++k) out.push_back({static_cast<int>(t), k});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

Trainer::Trainer(MgnModel model, const NormStats& stats, const TrainConfig& cfg, std::span<const Trajectory> train)
    : model_(std::move(model)), stats_(stats), cfg_(cfg), train_(train) {
  if (cfg.batch_size != 1) throw std::invalid_argument("only batch size 1 is supported");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  graphs_.reserve(train.size());
  for (const auto& t : train) graphs_.push_back(build_graph(t.mesh));
}

EpochStats Trainer::train_epoch() {
  const auto start = std::chrono::steady_clock::now();
  const int epoch = epochs_done_ + 1;
  const double lr = lr_at_epoch(epoch, cfg_.learning_rate, cfg_.gamma);
  Rng rng = make_rng(cfg_.seed, static_cast<std::uint64_t>(epoch));
  const auto order = shuffled_transitions(train_, rng);
  double total = 0.0;
  MgnModel::Tape tape;
  Matrix grad;
  for (const auto& tr : order) {
    const Trajectory& traj = train_[tr.trajectory];
    const Graph& graph = graphs_[tr.trajectory];
    Matrix v = frame_velocity(traj.frames[tr.frame]);
    add_noise(v, cfg_.noise_std, rng);
    const GraphSample sample = encode_state(graph, v, traj.mesh.node_type, stats_);
    // The stored next state is the target; with a noisy input the velocity
    // derivative that reaches it absorbs the noise.
    const Matrix target = encode_target(v, traj.frames[tr.frame + 1], traj.frame_interval, stats_);
    const Matrix q = model_.forward(graph, sample, &tape);
    const double loss = node_loss(q, target, &grad);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", trajectory " +
                               std::to_string(tr.trajectory) + ", frame " + std::to_string(tr.frame));
    }
    total += loss;
    model_.backward(graph, tape, grad);
    model_.params().adam_step(lr);
  }
  epochs_done_ = epoch;
  EpochStats s;
  s.epoch = epoch;
  s.learning_rate = lr;
  s.transitions = order.size();
  s.mean_loss = order.empty() ? 0.0 : total / static_cast<double>(order.size());
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

double Trainer::evaluation_loss() const {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < train_.size(); ++t) {
    const Trajectory& traj = train_[t];
    for (int k = 0; k + 1 < traj.num_frames(); ++k) {
      const Matrix v = frame_velocity(traj.frames[k]);
      const GraphSample sample = encode_state(graphs_[t], v, traj.mesh.node_type, stats_);
      const Matrix target = encode_target(v, traj.frames[k + 1], traj.frame_interval, stats_);
      total += node_loss(model_.forward(graphs_[t], sample), target);
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

void save_checkpoint(const std::filesystem::path& path, const MgnModel& model, const NormStats& stats,
                     const TrainConfig& train, int epochs_done, const json& meta) {
  const ParamStore& store = model.params();
  json registry = json::array();
  for (const auto& p : store.all()) {
    registry.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  json header{{"version", 1},
              {"model", model.config()},
              {"train", train},
              {"norm_stats", stats},
              {"epochs_done", epochs_done},
              {"adam_step", store.step_count()},
              {"parameters", registry},
              {"meta", meta}};
  Container c;
  c.header = header.dump();
  for (const auto& p : store.all()) append_doubles(c.body, {p.value.data(), static_cast<std::size_t>(p.value.size())});
  for (const auto& p : store.all()) append_doubles(c.body, {p.m.data(), static_cast<std::size_t>(p.m.size())});
  for (const auto& p : store.all()) append_doubles(c.body, {p.v.data(), static_cast<std::size_t>(p.v.size())});
  write_container(path, kCheckpointMagic, c);
}

namespace {

void fill_store(const json& header, const Container& c, ParamStore& store, const std::string& name) {
  const json& reg = header.at("parameters");
  if (reg.size() != store.size()) throw FormatError(name + ": parameter count mismatch");
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[static_cast<int>(i)];
    if (reg[i].at("name").get<std::string>() != p.name || reg[i].at("rows").get<long>() != p.value.rows() ||
        reg[i].at("cols").get<long>() != p.value.cols()) {
      throw FormatError(name + ": parameter shape mismatch at " + p.name);
    }
  }
  BodyReader reader(c.body);
  for (auto& p : store.all()) reader.read_doubles({p.value.data(), static_cast<std::size_t>(p.value.size())});
  for (auto& p : store.all()) reader.read_doubles({p.m.data(), static_cast<std::size_t>(p.m.size())});
  for (auto& p : store.all()) reader.read_doubles({p.v.data(), static_cast<std::size_t>(p.v.size())});
  if (!reader.done()) throw FormatError(name + ": trailing bytes in body");
  store.zero_grad();
  store.set_step_count(header.at("adam_step").get<std::int64_t>());
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Container c = read_container(path, kCheckpointMagic);
  try {
    const json h = json::parse(c.header);
    if (h.at("version").get<int>() != 1) throw FormatError(path.string() + ": unsupported checkpoint version");
    Checkpoint ck{MgnModel(h.at("model").get<MgnConfig>()), h.at("norm_stats").get<NormStats>(),
                  h.at("train").get<TrainConfig>(), h.at("epochs_done").get<int>(),
                  h.value("meta", json::object())};
    fill_store(h, c, ck.model.params(), path.string());
    return ck;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed header: " + e.what());
  }
}

void load_parameters(const std::filesystem::path& path, MgnModel& model) {
  const Container c = read_container(path, kCheckpointMagic);
  try {
    const json h = json::parse(c.header);
    if (h.at("model").get<MgnConfig>() != model.config()) throw FormatError(path.string() + ": architecture mismatch");
    fill_store(h, c, model.params(), path.string());
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed header: " + e.what());
  }
}

}  // namespace mgn
