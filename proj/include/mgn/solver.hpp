#pragma once

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgn/geometry.hpp"
#include "mgn/mesher.hpp"

namespace mgn {

struct SolverConfig {
  double viscosity = 0.001;
  /// Spacing of stored frames.
  double frame_interval = 0.01;
  int frames = 300;
  /// Internal step at the reference inflow peak; scaled inversely with the peak.
  double base_timestep = 0.00025;
  double base_peak = 1.25;
};

/// Per-vertex velocity and pressure samples at the stored frame times
/// t_j = j * frame_interval, j = 1..J. Frame layout: (vx, vy, p) per vertex.
struct Trajectory {
  Mesh mesh;
  DomainSpec domain;
  double frame_interval = 0.01;
  bool predicted = false;
  std::vector<double> times;
  std::vector<std::vector<double>> frames;

  int num_frames() const { return static_cast<int>(frames.size()); }
  std::size_t num_vertices() const { return mesh.vertices.size(); }
  Vec2 velocity(int frame, std::size_t vertex) const {
    const auto& f = frames[frame];
    return {f[3 * vertex], f[3 * vertex + 1]};
  }
  double pressure(int frame, std::size_t vertex) const { return frames[frame][3 * vertex + 2]; }

  /// Keeps only the first `count` frames.
  void truncate(int count);
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parabolic inflow (U * 4y(H - y) / H^2, 0).
Vec2 inflow_profile(double y, double peak);

/// Internal step for inflow peak U: base * (base_peak / U), shortened so that
/// it divides the frame interval exactly.
double internal_timestep(double peak, const SolverConfig& cfg = {});
int substeps_per_frame(double peak, const SolverConfig& cfg = {});

struct Forces {
  double drag = 0.0;
  double lift = 0.0;
};

/// Incremental pressure-correction scheme on Taylor-Hood (P2 velocity, P1
/// pressure) elements. Convection is explicit, viscosity Crank-Nicolson, so
/// all three systems have constant SPD matrices that are factored once.
/// Boundary conditions: parabolic inflow at x = 0, no-slip on the channel
/// walls and obstacles, do-nothing outflow with p = 0 at x = L.
class IpcsSolver {
 public:
  IpcsSolver(const Mesh& mesh, double channel_length, double inflow_peak, double dt, double viscosity);
  ~IpcsSolver();
  IpcsSolver(IpcsSolver&&) noexcept;
  IpcsSolver& operator=(IpcsSolver&&) noexcept;

  /// Advances one internal step; throws SolverError on non-finite fields.
  void step();
  double time() const;
  double dt() const;

  /// Vertex samples (vx, vy, p) per vertex.
  std::vector<double> sample() const;

  /// L2 norm of the P1 projection of div(u).
  double divergence_l2() const;
  double velocity_l2() const;
  /// Relative L2 distance of the velocity to the Poiseuille profile.
  double poiseuille_error() const;

  /// Force exerted by the fluid on the outline of obstacle `index`.
  Forces obstacle_forces(std::size_t index) const;
  /// P1 pressure at an arbitrary point (nearest element, clamped).
  double pressure_at(Vec2 p) const;

  std::size_t num_velocity_dofs() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs the solver from rest and stores cfg.frames frames (t = 0 excluded).
Trajectory solve_trajectory(const Mesh& mesh, const DomainSpec& spec, const SolverConfig& cfg = {});

struct QoiSample {
  double t = 0.0;
  double drag_coefficient = 0.0;
  double lift_coefficient = 0.0;
  double pressure_difference = 0.0;
};

struct QoiResult {
  double max_drag = 0.0;
  double max_lift = 0.0;
  double pressure_difference = 0.0;
  double frequency = 0.0;
  double strouhal = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

/// Benchmark quantities over the last interval between two lift maxima.
/// Throws if the record contains fewer than two lift maxima.
QoiResult compute_qoi(std::span<const QoiSample> samples, double mean_velocity = 1.0, double diameter = 0.1);

struct QoiRunOptions {
  double end_time = 30.0;
  double inflow_peak = 1.5;
  /// Only samples after this time are recorded.
  double record_from = 0.0;
  MesherOptions mesher;
  SolverConfig solver;
};

/// Flow around the cylinder at (0.2, 0.2), r = 0.05, in the 2.2-long channel.
std::vector<QoiSample> run_benchmark(const QoiRunOptions& opts,
                                     const std::function<void(double)>& progress = {});

}  // namespace mgn
