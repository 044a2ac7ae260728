#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "mgn/binary_io.hpp"
#include "mgn/dataset.hpp"
#include "mgn/graph.hpp"

using namespace mgn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mgn_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Trajectory random_trajectory(int frames, std::uint64_t seed) {
  Trajectory t;
  t.domain = sample_geometry(DatasetFamily::mixed_all, seed, 0);
  t.mesh = triangulate(t.domain, MesherOptions{}.scaled(3.0));
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int j = 0; j < frames; ++j) {
    std::vector<double> f(3 * t.num_vertices());
    for (double& x : f) x = dist(rng);
    t.frames.push_back(std::move(f));
    t.times.push_back((j + 1) * 0.01);
  }
  return t;
}

bool same_bits(const Trajectory& a, const Trajectory& b) {
  return a.domain == b.domain && a.mesh.vertices == b.mesh.vertices && a.mesh.triangles == b.mesh.triangles &&
         a.mesh.node_type == b.mesh.node_type && a.mesh.obstacle_boundaries == b.mesh.obstacle_boundaries &&
         a.frames == b.frames && a.times == b.times && a.frame_interval == b.frame_interval &&
         a.predicted == b.predicted;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os << s;
}

}  // namespace

TEST_CASE("trajectory files round trip bit-identically") {
  const auto dir = scratch_dir("roundtrip");
  Trajectory t = random_trajectory(5, 1);
  t.predicted = true;
  write_trajectory(t, dir / "a.mgt");
  const Trajectory back = read_trajectory(dir / "a.mgt");
  CHECK(same_bits(t, back));
  write_trajectory(back, dir / "b.mgt");
  CHECK(slurp(dir / "a.mgt") == slurp(dir / "b.mgt"));
}

TEST_CASE("file size follows the layout") {
  const auto dir = scratch_dir("layout");
  const Trajectory t = random_trajectory(300, 2);
  write_trajectory(t, dir / "a.mgt");
  const std::string bytes = slurp(dir / "a.mgt");
  std::uint64_t header = 0;
  std::memcpy(&header, bytes.data() + 8, 8);
  CHECK(bytes.size() == 8 + 8 + header + 300 * t.num_vertices() * 3 * 8 + 4);
  CHECK(bytes.substr(0, 8) == "MGNTRAJ1");
}

TEST_CASE("corrupt files are rejected") {
  const auto dir = scratch_dir("corrupt");
  write_trajectory(random_trajectory(2, 3), dir / "a.mgt");
  const std::string good = slurp(dir / "a.mgt");

  std::string bad_magic = good;
  bad_magic[3] = 'X';
  spit(dir / "magic.mgt", bad_magic);
  CHECK_THROWS_AS(read_trajectory(dir / "magic.mgt"), FormatError);

  std::string flipped = good;
  flipped[good.size() / 2] ^= 0x10;
  spit(dir / "flip.mgt", flipped);
  CHECK_THROWS_AS(read_trajectory(dir / "flip.mgt"), FormatError);

  spit(dir / "short.mgt", good.substr(0, good.size() - 100));
  CHECK_THROWS_AS(read_trajectory(dir / "short.mgt"), FormatError);
  spit(dir / "tiny.mgt", good.substr(0, 10));
  CHECK_THROWS_AS(read_trajectory(dir / "tiny.mgt"), FormatError);
}

TEST_CASE("crc32 matches the standard check value") { CHECK(crc32("123456789") == 0xCBF43926u); }

TEST_CASE("split rule") {
  CHECK(train_split_count(440) == 400);
  CHECK(train_split_count(2) == 1);
  CHECK(train_split_count(11) == 10);
  DatasetManifest m;
  m.count = 10;
  m.train_count = train_split_count(10);
  auto tr = m.train_indices(), ev = m.eval_indices();
  CHECK(tr.size() + ev.size() == 10);
  CHECK(tr.back() < ev.front());
}

TEST_CASE("generation writes files and manifest and resumes without rework") {
  const auto dir = scratch_dir("generate");
  GenerateOptions g;
  g.count = 2;
  g.seed = 5;
  g.mesher = MesherOptions{}.scaled(3.0);
  g.solver.frames = 3;
  const auto first = generate_dataset(dir, g);
  CHECK(first.generated == 2);
  CHECK(first.failures.empty());
  const auto m = read_manifest(dir);
  CHECK(m.count == 2);
  CHECK(m.train_count == 1);
  CHECK(m.family == "standard_cylinder");
  CHECK(load_split(dir, m, Split::train).size() == 1);
  CHECK(load_split(dir, m, Split::eval).size() == 1);
  const auto t0 = slurp(dir / m.files[0]);

  const auto again = generate_dataset(dir, g);
  CHECK(again.generated == 0);
  CHECK(again.skipped == 2);
  CHECK(slurp(dir / m.files[0]) == t0);

  fs::remove(dir / m.files[1]);
  CHECK_THROWS(read_manifest(dir));
  const auto repaired = generate_dataset(dir, g);
  CHECK(repaired.generated == 1);
  CHECK(read_trajectory(dir / m.files[1]).frames == load_split(dir, read_manifest(dir), Split::eval)[0].frames);
}

TEST_CASE("norm stats of a two-valued feature") {
  // Two vertices whose x-velocity alternates between 0 and 2.
  Trajectory t;
  t.mesh.vertices = {{0, 0}, {1, 0}, {0, 1}};
  t.mesh.triangles = {{0, 1, 2}};
  t.mesh.node_type = {NodeType::fluid, NodeType::fluid, NodeType::fluid};
  for (int j = 0; j < 5; ++j) {
    std::vector<double> f(9, 3.0);
    for (int i = 0; i < 3; ++i) f[3 * i] = (j % 2) * 2.0;
    t.frames.push_back(f);
    t.times.push_back(0.01 * (j + 1));
  }
  const std::vector<Trajectory> train{t};
  const NormStats s = compute_norm_stats(train);
  // Inputs are frames 0..3: values {0, 2, 0, 2}.
  CHECK(s.velocity_mean[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.velocity_std[0] == doctest::Approx(1.0).epsilon(1e-14));
  // Constant features clamp to the floor.
  CHECK(s.velocity_std[1] == kStdFloor);
  CHECK(s.pressure_std == kStdFloor);
  CHECK(s.pressure_mean == 3.0);
  // Derivatives alternate between +200 and -200.
  CHECK(s.derivative_mean[0] == doctest::Approx(0.0));
  CHECK(s.derivative_std[0] == doctest::Approx(200.0));
  CHECK(std::abs(s.edge_mean[0]) < 1e-15);
}

TEST_CASE("normalized training features have zero mean and unit deviation") {
  std::vector<Trajectory> train{random_trajectory(6, 10), random_trajectory(4, 11)};
  const NormStats s = compute_norm_stats(train);
  double sum[5] = {}, sq[5] = {}, n = 0;
  for (const auto& t : train) {
    for (int k = 0; k + 1 < t.num_frames(); ++k) {
      const Matrix v = frame_velocity(t.frames[k]);
      const GraphSample g = encode_state(build_graph(t.mesh), v, t.mesh.node_type, s);
      const Matrix target = encode_target(v, t.frames[k + 1], t.frame_interval, s);
      for (Eigen::Index i = 0; i < v.cols(); ++i) {
        const double x[5] = {g.node_features(0, i), g.node_features(1, i), target(0, i), target(1, i), target(2, i)};
        for (int c = 0; c < 5; ++c) {
          sum[c] += x[c];
          sq[c] += x[c] * x[c];
        }
        n += 1;
      }
    }
  }
  for (int c = 0; c < 5; ++c) {
    CHECK(std::abs(sum[c] / n) < 1e-10);
    CHECK(std::abs(std::sqrt(sq[c] / n - (sum[c] / n) * (sum[c] / n)) - 1.0) < 1e-10);
  }
  double esum[3] = {}, esq[3] = {}, ne = 0;
  for (const auto& t : train) {
    const Graph g = build_graph(t.mesh);
    const GraphSample gs = encode_state(g, Matrix::Zero(2, g.num_nodes), t.mesh.node_type, s);
    for (Eigen::Index e = 0; e < gs.edge_features.cols(); ++e) {
      for (int c = 0; c < 3; ++c) {
        esum[c] += gs.edge_features(c, e);
        esq[c] += gs.edge_features(c, e) * gs.edge_features(c, e);
      }
      ne += 1;
    }
  }
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(esum[c] / ne) < 1e-10);
    CHECK(std::abs(std::sqrt(esq[c] / ne) - 1.0) < 1e-10);
  }
}

TEST_CASE("normalize and denormalize are inverse") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = uniform(rng, -100, 100), m = uniform(rng, -5, 5), s = uniform(rng, 1e-3, 10);
    CHECK(std::abs(denormalize(normalize(x, m, s), m, s) - x) <= 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("empty split is an error") { CHECK_THROWS(compute_norm_stats({})); }
