#include <doctest.h>

#include <cmath>

#include "mgn/solver.hpp"

using namespace mgn;

namespace {

Mesh coarse_reference() { return triangulate(reference_domain(), MesherOptions{}.scaled(2.0)); }

}  // namespace

TEST_CASE("inflow profile") {
  CHECK(inflow_profile(0.205, 1.5).x == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(inflow_profile(0.0, 2.0).x == 0.0);
  CHECK(inflow_profile(0.41, 2.0).x == doctest::Approx(0.0));
  CHECK(inflow_profile(0.1025, 2.0).x == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(inflow_profile(0.1025, 2.0).y == 0.0);
}

TEST_CASE("internal timestep scales inversely with the inflow peak") {
  CHECK(internal_timestep(1.25) == doctest::Approx(0.00025).epsilon(1e-12));
  CHECK(internal_timestep(2.5) == doctest::Approx(0.000125).epsilon(1e-12));
  for (double u = 0.25; u <= 2.25; u += 0.0137) {
    const double dt = internal_timestep(u);
    const double ratio = 0.01 / dt;
    CHECK(std::abs(ratio - std::round(ratio)) < 1e-9);
    CHECK(dt <= 0.00025 * 1.25 / u * (1 + 1e-12));
    CHECK(substeps_per_frame(u) == static_cast<int>(std::round(ratio)));
  }
}

TEST_CASE("obstacle-free channel relaxes to Poiseuille flow") {
  DomainSpec spec;
  spec.obstacles.clear();
  spec.inflow_peak = 0.3;
  const Mesh m = triangulate(spec, MesherOptions{}.scaled(2.0));
  IpcsSolver s(m, spec.channel_length, 0.3, 0.01, 0.001);
  for (int n = 0; n < 1500; ++n) s.step();
  CHECK(s.poiseuille_error() < 0.02);
  CHECK(s.divergence_l2() <= 1e-6 * s.velocity_l2());
}

TEST_CASE("trajectories honour the boundary conditions") {
  const Mesh m = coarse_reference();
  DomainSpec spec = reference_domain(1.5);
  SolverConfig cfg;
  cfg.frames = 8;
  const Trajectory t = solve_trajectory(m, spec, cfg);
  REQUIRE(t.num_frames() == 8);
  CHECK(t.times.front() == doctest::Approx(0.01));
  CHECK(t.times.back() == doctest::Approx(0.08));
  for (int j = 0; j < t.num_frames(); ++j) {
    for (std::size_t i = 0; i < t.num_vertices(); ++i) {
      const Vec2 v = t.velocity(j, i);
      switch (m.node_type[i]) {
        case NodeType::inflow:
          CHECK(std::abs(v.x - inflow_profile(m.vertices[i].y, 1.5).x) <= 1e-8);
          CHECK(std::abs(v.y) <= 1e-8);
          break;
        case NodeType::wall:
          CHECK(v.x == 0.0);
          CHECK(v.y == 0.0);
          break;
        default:
          break;
      }
      CHECK(norm(v) <= 4 * 1.5);
      CHECK(std::isfinite(t.pressure(j, i)));
    }
  }
}

TEST_CASE("solves are bit-reproducible") {
  const Mesh m = coarse_reference();
  SolverConfig cfg;
  cfg.frames = 3;
  const auto a = solve_trajectory(m, reference_domain(), cfg);
  const auto b = solve_trajectory(m, reference_domain(), cfg);
  CHECK(a.frames == b.frames);
}

TEST_CASE("halving the time step changes frames less than one frame of evolution") {
  const Mesh m = coarse_reference();
  const double u = 1.0;
  IpcsSolver coarse(m, kChannelLength, u, 0.0005, 0.001), fine(m, kChannelLength, u, 0.00025, 0.001);
  std::vector<double> prev;
  for (int n = 0; n < 200; ++n) {
    if (n == 180) prev = coarse.sample();
    coarse.step();
  }
  for (int n = 0; n < 400; ++n) fine.step();
  const auto a = coarse.sample(), b = fine.sample();
  double diff = 0, evolution = 0;
  for (std::size_t i = 0; i < a.size(); i += 3) {
    diff += std::pow(a[i] - b[i], 2) + std::pow(a[i + 1] - b[i + 1], 2);
    evolution += std::pow(a[i] - prev[i], 2) + std::pow(a[i + 1] - prev[i + 1], 2);
  }
  CHECK(std::sqrt(diff) < std::sqrt(evolution));
}

TEST_CASE("forces vanish for a fluid at rest around the obstacle") {
  const Mesh m = coarse_reference();
  IpcsSolver s(m, kChannelLength, 1.0, 0.001, 0.001);
  const Forces f = s.obstacle_forces(0);
  CHECK(f.drag == 0.0);
  CHECK(f.lift == 0.0);
  s.step();
  CHECK(s.obstacle_forces(0).drag > 0.0);
}

TEST_CASE("point pressure interpolates the vertex values") {
  const Mesh m = coarse_reference();
  IpcsSolver s(m, kChannelLength, 1.0, 0.001, 0.001);
  for (int n = 0; n < 5; ++n) s.step();
  const auto f = s.sample();
  for (std::size_t i = 0; i < m.num_vertices(); i += 37) {
    CHECK(s.pressure_at(m.vertices[i]) == doctest::Approx(f[3 * i + 2]).epsilon(1e-9));
  }
}

TEST_CASE("benchmark quantities from a synthetic periodic record") {
  std::vector<QoiSample> samples;
  const double pi = std::acos(-1.0);
  for (int n = 0; n <= 20000; ++n) {
    const double t = n * 1e-4;
    samples.push_back({t, 3.0 + 0.2 * std::sin(4 * pi * 3.0 * t), std::sin(2 * pi * 3.0 * t), 2.5 + 0.1 * std::cos(2 * pi * 3.0 * t)});
  }
  const QoiResult r = compute_qoi(samples);
  CHECK(r.max_lift == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.max_drag == doctest::Approx(3.2).epsilon(1e-6));
  CHECK(r.frequency == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(r.strouhal == doctest::Approx(0.3).epsilon(1e-3));
  // Window midpoint lies half a period after a lift maximum, where the cosine term vanishes.
  CHECK(r.pressure_difference == doctest::Approx(2.5).epsilon(1e-4));

  std::vector<QoiSample> short_record(samples.begin(), samples.begin() + 2000);
  CHECK_THROWS(compute_qoi(short_record));
}
