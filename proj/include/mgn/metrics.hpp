#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mgn/dataset.hpp"
#include "mgn/model.hpp"
#include "mgn/solver.hpp"

namespace mgn {

/// Velocity and pressure variants of one error quantity.
struct FieldError {
  double velocity = 0.0;
  double pressure = 0.0;
};

/// Pooled RMSE over simulations k, frames j < `frames` and vertices i:
///   sqrt(sum_k sum_j sum_i |v - v~|^2 / (c * I_k * J * K))
/// with c = 2 for velocity and c = 1 for pressure. frames = -1 uses every frame.
/// Throws if shapes differ or a simulation is shorter than `frames`.
FieldError pooled_rmse(std::span<const Trajectory> truth, std::span<const Trajectory> predicted, int frames = -1);

/// One-step error; `one_step` holds predictions from the true previous frame.
FieldError eps_one(std::span<const Trajectory> truth, std::span<const Trajectory> one_step);
/// Rollout error over the first 50 frames.
FieldError eps_fifty(std::span<const Trajectory> truth, std::span<const Trajectory> rollouts);
FieldError eps_all(std::span<const Trajectory> truth, std::span<const Trajectory> rollouts);
/// Per-simulation all-steps errors.
std::vector<FieldError> eps_all_per_sim(std::span<const Trajectory> truth, std::span<const Trajectory> rollouts);

/// Median; the mean of the two middle values for an even count.
double median(std::vector<double> values);

struct EvalResult {
  FieldError one_step, fifty_steps, all_steps, all_steps_median;
  std::vector<FieldError> per_sim;
  int simulations = 0;
  int frames = 0;
  std::vector<int> vertices;
};

void to_json(nlohmann::json& j, const FieldError& e);
void from_json(const nlohmann::json& j, FieldError& e);
void to_json(nlohmann::json& j, const EvalResult& r);
void from_json(const nlohmann::json& j, EvalResult& r);

EvalResult evaluate_predictions(std::span<const Trajectory> truth, std::span<const Trajectory> one_step,
                                std::span<const Trajectory> rollouts);

/// One-step and full rollouts of `model` on every trajectory, then the eight errors.
EvalResult evaluate_model(const MgnModel& model, const NormStats& stats, std::span<const Trajectory> truth,
                          int workers = 1);

struct Spread {
  double mean = 0.0;
  double deviation = 0.0;  // max |x_i - mean|
};

Spread aggregate_seeds(std::span<const double> values);

struct TimingResult {
  double solver_seconds = 0.0;  // median per simulation
  double model_seconds = 0.0;
  double speedup = 0.0;
};

/// Median wall-clock seconds of `fn` over `repetitions` runs.
double median_seconds(const std::function<void()>& fn, int repetitions);

/// Times `solver(i)` and `model(i)` for every simulation i < count; each
/// per-simulation time is the median over `repetitions`.
TimingResult timing_bench(const std::function<void(std::size_t)>& solver, const std::function<void(std::size_t)>& model,
                          std::size_t count, int repetitions = 3);

}  // namespace mgn
