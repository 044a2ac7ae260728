#include <doctest.h>

#include <chrono>
#include <cmath>

#include "mgn/metrics.hpp"
#include "test_support.hpp"

using namespace mgn;
using namespace mgn::testing;

namespace {

Trajectory constant_trajectory(const Mesh& mesh, int frames, double vx, double vy, double p) {
  Trajectory t;
  t.mesh = mesh;
  for (int j = 0; j < frames; ++j) {
    std::vector<double> f;
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) f.insert(f.end(), {vx, vy, p});
    t.frames.push_back(f);
  }
  return t;
}

// Direct triple sum over simulations, frames and vertices.
FieldError brute_force(const std::vector<Trajectory>& a, const std::vector<Trajectory>& b, int frames) {
  double v = 0, p = 0;
  const double k = static_cast<double>(a.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    const int j_count = frames < 0 ? a[s].num_frames() : frames;
    const double n = static_cast<double>(a[s].num_vertices());
    for (int j = 0; j < j_count; ++j) {
      for (std::size_t i = 0; i < a[s].num_vertices(); ++i) {
        const Vec2 d = a[s].velocity(j, i) - b[s].velocity(j, i);
        v += (d.x * d.x + d.y * d.y) / (2 * n * j_count * k);
        const double dp = a[s].pressure(j, i) - b[s].pressure(j, i);
        p += dp * dp / (n * j_count * k);
      }
    }
  }
  return {std::sqrt(v), std::sqrt(p)};
}

void spin(double seconds) {
  const auto start = std::chrono::steady_clock::now();
  volatile double x = 0;
  while (std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < seconds) x = x + 1;
}

}  // namespace

TEST_CASE("worked examples") {
  const Mesh m = grid_mesh(3, 3);
  const std::vector<Trajectory> truth{constant_trajectory(m, 4, 0, 0, 0)};
  const std::vector<Trajectory> pred{constant_trajectory(m, 4, 1, 0, 1)};
  const FieldError e = eps_all(truth, pred);
  CHECK(e.velocity == doctest::Approx(std::sqrt(0.5)));
  CHECK(e.pressure == doctest::Approx(1.0));
  const FieldError same = eps_all(truth, truth);
  CHECK(same.velocity == 0.0);
  CHECK(same.pressure == 0.0);
}

TEST_CASE("pooled errors match a brute-force sum") {
  std::vector<Trajectory> truth{random_trajectory(grid_mesh(5, 4), 60, 1), random_trajectory(grid_mesh(3, 6), 60, 2),
                                random_trajectory(grid_mesh(7, 3), 60, 3)};
  std::vector<Trajectory> pred{random_trajectory(grid_mesh(5, 4), 60, 4), random_trajectory(grid_mesh(3, 6), 60, 5),
                               random_trajectory(grid_mesh(7, 3), 60, 6)};
  auto close = [](FieldError a, FieldError b) {
    CHECK(std::abs(a.velocity - b.velocity) <= 1e-12);
    CHECK(std::abs(a.pressure - b.pressure) <= 1e-12);
  };
  close(eps_all(truth, pred), brute_force(truth, pred, -1));
  close(eps_fifty(truth, pred), brute_force(truth, pred, 50));
  close(eps_one(truth, pred), brute_force(truth, pred, -1));
  const auto per = eps_all_per_sim(truth, pred);
  REQUIRE(per.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) close(per[s], brute_force({truth[s]}, {pred[s]}, -1));
}

TEST_CASE("error properties") {
  std::vector<Trajectory> truth{random_trajectory(grid_mesh(4, 4), 10, 1), random_trajectory(grid_mesh(5, 3), 10, 2)};
  std::vector<Trajectory> pred{random_trajectory(grid_mesh(4, 4), 10, 3), random_trajectory(grid_mesh(5, 3), 10, 4)};
  const FieldError e = eps_all(truth, pred);

  SUBCASE("symmetric") {
    const FieldError r = eps_all(pred, truth);
    CHECK(r.velocity == doctest::Approx(e.velocity).epsilon(1e-14));
    CHECK(r.pressure == doctest::Approx(e.pressure).epsilon(1e-14));
  }
  SUBCASE("homogeneous of degree one") {
    auto scale = [](std::vector<Trajectory> v, double c) {
      for (auto& t : v) {
        for (auto& f : t.frames) {
          for (double& x : f) x *= c;
        }
      }
      return v;
    };
    const FieldError s = eps_all(scale(truth, 3.0), scale(pred, 3.0));
    CHECK(s.velocity == doctest::Approx(3.0 * e.velocity).epsilon(1e-12));
    CHECK(s.pressure == doctest::Approx(3.0 * e.pressure).epsilon(1e-12));
  }
  SUBCASE("independent of simulation order") {
    std::vector<Trajectory> t2{truth[1], truth[0]}, p2{pred[1], pred[0]};
    const FieldError s = eps_all(t2, p2);
    CHECK(s.velocity == doctest::Approx(e.velocity).epsilon(1e-14));
    CHECK(s.pressure == doctest::Approx(e.pressure).epsilon(1e-14));
  }
  SUBCASE("independent of vertex order") {
    auto reversed = [](std::vector<Trajectory> v) {
      for (auto& t : v) {
        for (auto& f : t.frames) {
          std::vector<double> r(f.size());
          const std::size_t n = f.size() / 3;
          for (std::size_t i = 0; i < n; ++i) std::copy_n(&f[3 * i], 3, &r[3 * (n - 1 - i)]);
          f = r;
        }
      }
      return v;
    };
    const FieldError s = eps_all(reversed(truth), reversed(pred));
    CHECK(s.velocity == doctest::Approx(e.velocity).epsilon(1e-14));
    CHECK(s.pressure == doctest::Approx(e.pressure).epsilon(1e-14));
  }
  SUBCASE("shape errors") {
    CHECK_THROWS(eps_all(truth, std::vector<Trajectory>{pred[0]}));
    CHECK_THROWS(eps_fifty(truth, pred));
    std::vector<Trajectory> wrong{pred[1], pred[0]};
    CHECK_THROWS(eps_all(truth, wrong));
    CHECK_THROWS(eps_all(std::vector<Trajectory>{}, std::vector<Trajectory>{}));
  }
}

TEST_CASE("median and seed aggregation") {
  CHECK(median({1, 2, 100}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(median({7}) == 7.0);
  CHECK_THROWS(median({}));
  const std::vector<double> a{0, 3, 12}, b{1, 2, 3}, c{5};
  CHECK(aggregate_seeds(a).mean == 5.0);
  CHECK(aggregate_seeds(a).deviation == 7.0);
  CHECK(aggregate_seeds(b).mean == 2.0);
  CHECK(aggregate_seeds(b).deviation == 1.0);
  CHECK(aggregate_seeds(c).deviation == 0.0);
  CHECK_THROWS(aggregate_seeds(std::vector<double>{}));
}

TEST_CASE("evaluation of an exact model gives zero errors") {
  std::vector<Trajectory> truth{random_trajectory(grid_mesh(4, 4), 55, 1)};
  const EvalResult r = evaluate_predictions(truth, truth, truth);
  CHECK(r.one_step.velocity == 0.0);
  CHECK(r.fifty_steps.pressure == 0.0);
  CHECK(r.all_steps_median.velocity == 0.0);
  CHECK(r.simulations == 1);
  CHECK(r.frames == 55);
  const nlohmann::json j = r;
  CHECK(j.get<EvalResult>().vertices == r.vertices);
}

TEST_CASE("timing harness") {
  const TimingResult self = timing_bench([](std::size_t) { spin(0.04); }, [](std::size_t) { spin(0.04); }, 3, 5);
  CHECK(self.speedup >= 0.8);
  CHECK(self.speedup <= 1.25);
  const TimingResult fast = timing_bench([](std::size_t) { spin(0.02); }, [](std::size_t) { spin(0.002); }, 2, 3);
  CHECK(fast.speedup > 5.0);
  CHECK_THROWS(timing_bench([](std::size_t) {}, [](std::size_t) {}, 0));
  int calls = 0;
  CHECK(median_seconds([&] { ++calls; }, 4) >= 0.0);
  CHECK(calls == 4);
}
