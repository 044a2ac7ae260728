#include "mgn/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mgn {

using nlohmann::json;

namespace {

struct SquaredSums {
  double velocity = 0.0;
  double pressure = 0.0;
};

SquaredSums squared_error(const Trajectory& truth, const Trajectory& pred, int frames) {
  if (truth.num_vertices() != pred.num_vertices()) throw std::invalid_argument("vertex count mismatch");
  if (truth.num_frames() < frames || pred.num_frames() < frames) {
    throw std::invalid_argument("trajectory shorter than " + std::to_string(frames) + " frames");
  }
  SquaredSums s;
  const std::size_t nv = truth.num_vertices();
  for (int j = 0; j < frames; ++j) {
    const auto& a = truth.frames[j];
    const auto& b = pred.frames[j];
    for (std::size_t i = 0; i < nv; ++i) {
      const double dx = a[3 * i] - b[3 * i], dy = a[3 * i + 1] - b[3 * i + 1], dp = a[3 * i + 2] - b[3 * i + 2];
      s.velocity += dx * dx + dy * dy;
      s.pressure += dp * dp;
    }
  }
  return s;
}

void check_pairs(std::span<const Trajectory> truth, std::span<const Trajectory> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("simulation count mismatch");
  if (truth.empty()) throw std::invalid_argument("no simulations");
}

}  // namespace

FieldError pooled_rmse(std::span<const Trajectory> truth, std::span<const Trajectory> predicted, int frames) {
  check_pairs(truth, predicted);
  const double k = static_cast<double>(truth.size());
  FieldError e;
  for (std::size_t s = 0; s < truth.size(); ++s) {
    const int j = frames < 0 ? truth[s].num_frames() : frames;
    const SquaredSums sq = squared_error(truth[s], predicted[s], j);
    const double denom = static_cast<double>(truth[s].num_vertices()) * j * k;
    e.velocity += sq.velocity / (2.0 * denom);
    e.pressure += sq.pressure / denom;
  }
  e.velocity = std::sqrt(e.velocity);
  e.pressure = std::sqrt(e.pressure);
  return e;
}

FieldError eps_one(std::span<const Trajectory> truth, std::span<const Trajectory> one_step) {
  return pooled_rmse(truth, one_step);
}

FieldError eps_fifty(std::span<const Trajectory> truth, std::span<const Trajectory> rollouts) {
  return pooled_rmse(truth, rollouts, 50);
}

FieldError eps_all(std::span<const Trajectory> truth, std::span<const Trajectory> rollouts) {
  return pooled_rmse(truth, rollouts);
}

std::vector<FieldError> eps_all_per_sim(std::span<const Trajectory> truth, std::span<const Trajectory> rollouts) {
  check_pairs(truth, rollouts);
  std::vector<FieldError> out;
  for (std::size_t s = 0; s < truth.size(); ++s) out.push_back(pooled_rmse(truth.subspan(s, 1), rollouts.subspan(s, 1)));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void to_json(json& j, const FieldError& e) { j = json{{"velocity", e.velocity}, {"pressure", e.pressure}}; }

void from_json(const json& j, FieldError& e) {
  e.velocity = j.at("velocity").get<double>();
  e.pressure = j.at("pressure").get<double>();
}

void to_json(json& j, const EvalResult& r) {
  j = json{{"one_step", r.one_step},
           {"fifty_steps", r.fifty_steps},
           {"all_steps", r.all_steps},
           {"all_steps_median", r.all_steps_median},
           {"per_sim", r.per_sim},
           {"simulations", r.simulations},
           {"frames", r.frames},
           {"vertices", r.vertices}};
}

void from_json(const json& j, EvalResult& r) {
  r.one_step = j.at("one_step").get<FieldError>();
  r.fifty_steps = j.at("fifty_steps").get<FieldError>();
  r.all_steps = j.at("all_steps").get<FieldError>();
  r.all_steps_median = j.at("all_steps_median").get<FieldError>();
  r.per_sim = j.at("per_sim").get<std::vector<FieldError>>();
  r.simulations = j.at("simulations").get<int>();
  r.frames = j.at("frames").get<int>();
  r.vertices = j.at("vertices").get<std::vector<int>>();
}

EvalResult evaluate_predictions(std::span<const Trajectory> truth, std::span<const Trajectory> one_step,
                                std::span<const Trajectory> rollouts) {
  EvalResult r;
  r.one_step = eps_one(truth, one_step);
  r.fifty_steps = eps_fifty(truth, rollouts);
  r.all_steps = eps_all(truth, rollouts);
  r.per_sim = eps_all_per_sim(truth, rollouts);
  std::vector<double> v, p;
  for (const auto& e : r.per_sim) {
    v.push_back(e.velocity);
    p.push_back(e.pressure);
  }
  r.all_steps_median = {median(v), median(p)};
  r.simulations = static_cast<int>(truth.size());
  r.frames = truth.front().num_frames();
  for (const auto& t : truth) r.vertices.push_back(static_cast<int>(t.num_vertices()));
  return r;
}

EvalResult evaluate_model(const MgnModel& model, const NormStats& stats, std::span<const Trajectory> truth,
                          int workers) {
  std::vector<Trajectory> one(truth.size()), roll(truth.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(truth.size());
  auto work = [&] {
    for (std::size_t i = next++; i < truth.size(); i = next++) {
      try {
        one[i] = one_step_predictions(model, stats, truth[i]);
        roll[i] = rollout(model, stats, truth[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(workers, static_cast<int>(truth.size())); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) throw std::runtime_error("simulation " + std::to_string(i) + ": " + errors[i]);
  }
  return evaluate_predictions(truth, one, roll);
}

Spread aggregate_seeds(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate_seeds: no values");
  Spread s;
  for (double x : values) s.mean += x;
  s.mean /= static_cast<double>(values.size());
  for (double x : values) s.deviation = std::max(s.deviation, std::abs(x - s.mean));
  return s;
}

double median_seconds(const std::function<void()>& fn, int repetitions) {
  if (repetitions < 1) throw std::invalid_argument("median_seconds: repetitions must be positive");
  std::vector<double> t;
  for (int r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return median(std::move(t));
}

TimingResult timing_bench(const std::function<void(std::size_t)>& solver, const std::function<void(std::size_t)>& model,
                          std::size_t count, int repetitions) {
  if (count == 0) throw std::invalid_argument("timing_bench: no simulations");
  std::vector<double> s, m;
  for (std::size_t i = 0; i < count; ++i) {
    s.push_back(median_seconds([&] { solver(i); }, repetitions));
    m.push_back(median_seconds([&] { model(i); }, repetitions));
  }
  TimingResult r;
  r.solver_seconds = median(s);
  r.model_seconds = median(m);
  r.speedup = r.solver_seconds / r.model_seconds;
  return r;
}

}  // namespace mgn
