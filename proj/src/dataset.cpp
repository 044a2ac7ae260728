#include "mgn/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "mgn/binary_io.hpp"
#include "mgn/graph.hpp"

namespace mgn {

using nlohmann::json;

namespace {

json mesh_to_json(const Mesh& m) {
  std::vector<double> xy;
  xy.reserve(2 * m.vertices.size());
  for (const auto& v : m.vertices) {
    xy.push_back(v.x);
    xy.push_back(v.y);
  }
  std::vector<int> tri;
  tri.reserve(3 * m.triangles.size());
  for (const auto& t : m.triangles) tri.insert(tri.end(), t.begin(), t.end());
  std::vector<int> types;
  types.reserve(m.node_type.size());
  for (auto t : m.node_type) types.push_back(static_cast<int>(t));
  return json{{"vertices", xy}, {"triangles", tri}, {"node_types", types}, {"obstacle_boundaries", m.obstacle_boundaries}};
}

Mesh mesh_from_json(const json& j) {
  Mesh m;
  const auto xy = j.at("vertices").get<std::vector<double>>();
  const auto tri = j.at("triangles").get<std::vector<int>>();
  const auto types = j.at("node_types").get<std::vector<int>>();
  if (xy.size() % 2 != 0 || tri.size() % 3 != 0 || types.size() * 2 != xy.size()) {
    throw FormatError("inconsistent mesh arrays");
  }
  const int nv = static_cast<int>(types.size());
  for (std::size_t i = 0; i < xy.size(); i += 2) m.vertices.push_back({xy[i], xy[i + 1]});
  for (std::size_t i = 0; i < tri.size(); i += 3) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (tri[i + k] < 0 || tri[i + k] >= nv) throw FormatError("triangle index out of range");
    }
    m.triangles.push_back({tri[i], tri[i + 1], tri[i + 2]});
  }
  for (int t : types) {
    if (t < 0 || t >= kNumNodeTypes) throw FormatError("invalid node type");
    m.node_type.push_back(static_cast<NodeType>(t));
  }
  m.obstacle_boundaries = j.at("obstacle_boundaries").get<std::vector<std::vector<int>>>();
  return m;
}

}  // namespace

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  const std::size_t width = 3 * traj.num_vertices();
  for (const auto& f : traj.frames) {
    if (f.size() != width) throw std::invalid_argument("write_trajectory: frame size does not match the mesh");
  }
  json header{{"version", 1},
              {"domain", traj.domain},
              {"mesh", mesh_to_json(traj.mesh)},
              {"num_frames", traj.num_frames()},
              {"frame_interval", traj.frame_interval},
              {"times", traj.times},
              {"predicted", traj.predicted}};
  Container c;
  c.header = header.dump();
  c.body.reserve(traj.frames.size() * width * sizeof(double));
  for (const auto& f : traj.frames) append_doubles(c.body, f);
  write_container(path, kTrajectoryMagic, c);
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  const Container c = read_container(path, kTrajectoryMagic);
  Trajectory t;
  try {
    const json h = json::parse(c.header);
    if (h.at("version").get<int>() != 1) throw FormatError("unsupported trajectory version");
    t.domain = h.at("domain").get<DomainSpec>();
    t.mesh = mesh_from_json(h.at("mesh"));
    t.frame_interval = h.at("frame_interval").get<double>();
    t.times = h.at("times").get<std::vector<double>>();
    t.predicted = h.at("predicted").get<bool>();
    const int frames = h.at("num_frames").get<int>();
    if (frames < 0 || static_cast<int>(t.times.size()) != frames) throw FormatError("frame count mismatch");
    t.frames.assign(frames, std::vector<double>(3 * t.num_vertices()));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed header: " + e.what());
  }
  BodyReader reader(c.body);
  try {
    for (auto& f : t.frames) reader.read_doubles(f);
  } catch (const FormatError&) {
    throw FormatError(path.string() + ": truncated body");
  }
  if (!reader.done()) throw FormatError(path.string() + ": trailing bytes in body");
  return t;
}

int train_split_count(int n) { return static_cast<int>(static_cast<long long>(n) * 400 / 440); }

std::vector<int> DatasetManifest::train_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < train_count; ++i) idx.push_back(i);
  return idx;
}

std::vector<int> DatasetManifest::eval_indices() const {
  std::vector<int> idx;
  for (int i = train_count; i < count; ++i) idx.push_back(i);
  return idx;
}

void to_json(json& j, const MesherOptions& o) {
  j = json{{"far_size", o.far_size},         {"near_size", o.near_size},     {"grading", o.grading},
           {"min_angle_deg", o.min_angle_deg}, {"size_factor", o.size_factor}, {"max_vertices", o.max_vertices}};
}

void from_json(const json& j, MesherOptions& o) {
  o.far_size = j.value("far_size", o.far_size);
  o.near_size = j.value("near_size", o.near_size);
  o.grading = j.value("grading", o.grading);
  o.min_angle_deg = j.value("min_angle_deg", o.min_angle_deg);
  o.size_factor = j.value("size_factor", o.size_factor);
  o.max_vertices = j.value("max_vertices", o.max_vertices);
}

void to_json(json& j, const SolverConfig& c) {
  j = json{{"viscosity", c.viscosity},
           {"frame_interval", c.frame_interval},
           {"frames", c.frames},
           {"base_timestep", c.base_timestep},
           {"base_peak", c.base_peak}};
}

void from_json(const json& j, SolverConfig& c) {
  c.viscosity = j.value("viscosity", c.viscosity);
  c.frame_interval = j.value("frame_interval", c.frame_interval);
  c.frames = j.value("frames", c.frames);
  c.base_timestep = j.value("base_timestep", c.base_timestep);
  c.base_peak = j.value("base_peak", c.base_peak);
}

void to_json(json& j, const DatasetManifest& m) {
  j = json{{"dataset_id", m.dataset_id}, {"family", m.family}, {"count", m.count},   {"train_count", m.train_count},
           {"seed", m.seed},             {"frames", m.frames}, {"mesher", m.mesher}, {"solver", m.solver},
           {"files", m.files}};
}

void from_json(const json& j, DatasetManifest& m) {
  m.dataset_id = j.at("dataset_id").get<std::string>();
  m.family = j.at("family").get<std::string>();
  m.count = j.at("count").get<int>();
  m.train_count = j.at("train_count").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.frames = j.at("frames").get<int>();
  m.mesher = j.at("mesher").get<MesherOptions>();
  m.solver = j.at("solver").get<SolverConfig>();
  m.files = j.at("files").get<std::vector<std::string>>();
}

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
  const auto path = dir / kManifestName;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << json(m).dump(2) << '\n';
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  std::ifstream is(path);
  if (!is) throw std::runtime_error("no manifest in " + dir.string());
  DatasetManifest m;
  try {
    m = json::parse(is).get<DatasetManifest>();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (static_cast<int>(m.files.size()) != m.count || m.train_count < 0 || m.train_count > m.count) {
    throw FormatError(path.string() + ": inconsistent counts");
  }
  for (const auto& f : m.files) {
    if (!std::filesystem::exists(dir / f)) throw FormatError(path.string() + ": missing file " + f);
  }
  return m;
}

std::vector<Trajectory> load_split(const std::filesystem::path& dir, const DatasetManifest& m, Split split) {
  std::vector<Trajectory> out;
  for (int i : split == Split::train ? m.train_indices() : m.eval_indices()) {
    out.push_back(read_trajectory(dir / m.files[i]));
  }
  return out;
}

std::string trajectory_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim_%04d.mgt", index);
  return buf;
}

GenerateReport generate_dataset(const std::filesystem::path& dir, const GenerateOptions& opts,
                                const std::function<void(const std::string&)>& log) {
  if (opts.count < 1) throw std::invalid_argument("generate_dataset: count must be positive");
  std::filesystem::create_directories(dir);
  GenerateReport report;
  std::mutex mu;
  std::atomic<int> next{0};
  auto note = [&](const std::string& s) {
    if (log) log(s);
  };

  auto work = [&] {
    for (int i = next++; i < opts.count; i = next++) {
      const auto path = dir / trajectory_file_name(i);
      if (std::filesystem::exists(path)) {
        try {
          read_trajectory(path);
          std::lock_guard lock(mu);
          ++report.skipped;
          continue;
        } catch (const std::exception&) {
          // Corrupt or partial: simulate again.
        }
      }
      try {
        const DomainSpec spec = sample_geometry(opts.family, opts.seed, static_cast<std::uint64_t>(i));
        const Mesh mesh = triangulate(spec, opts.mesher);
        const Trajectory traj = solve_trajectory(mesh, spec, opts.solver);
        write_trajectory(traj, path);
        std::lock_guard lock(mu);
        ++report.generated;
        note("simulation " + std::to_string(i) + ": " + std::to_string(mesh.num_vertices()) + " vertices, U = " +
             std::to_string(spec.inflow_peak));
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        report.failures.push_back("simulation " + std::to_string(i) + ": " + e.what());
        note(report.failures.back());
      }
    }
  };
  const int workers = std::max(1, std::min(opts.workers, opts.count));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  DatasetManifest m;
  m.family = std::string(family_name(opts.family));
  m.dataset_id = m.family + "-n" + std::to_string(opts.count) + "-s" + std::to_string(opts.seed);
  m.count = opts.count;
  m.train_count = train_split_count(opts.count);
  m.seed = opts.seed;
  m.frames = opts.solver.frames;
  m.mesher = opts.mesher;
  m.solver = opts.solver;
  for (int i = 0; i < opts.count; ++i) m.files.push_back(trajectory_file_name(i));
  if (report.failures.empty()) write_manifest(dir, m);
  return report;
}

void to_json(json& j, const NormStats& s) {
  j = json{{"edge_mean", s.edge_mean},
           {"edge_std", s.edge_std},
           {"velocity_mean", s.velocity_mean},
           {"velocity_std", s.velocity_std},
           {"derivative_mean", s.derivative_mean},
           {"derivative_std", s.derivative_std},
           {"pressure_mean", s.pressure_mean},
           {"pressure_std", s.pressure_std}};
}

void from_json(const json& j, NormStats& s) {
  s.edge_mean = j.at("edge_mean").get<std::array<double, 3>>();
  s.edge_std = j.at("edge_std").get<std::array<double, 3>>();
  s.velocity_mean = j.at("velocity_mean").get<std::array<double, 2>>();
  s.velocity_std = j.at("velocity_std").get<std::array<double, 2>>();
  s.derivative_mean = j.at("derivative_mean").get<std::array<double, 2>>();
  s.derivative_std = j.at("derivative_std").get<std::array<double, 2>>();
  s.pressure_mean = j.at("pressure_mean").get<double>();
  s.pressure_std = j.at("pressure_std").get<double>();
}

namespace {

// Visits every feature instance of the training split as an 8-vector:
// 3 edge features, then 2 input velocities, 2 derivatives and 1 pressure.
template <typename EdgeFn, typename NodeFn>
void visit_features(std::span<const Trajectory> train, EdgeFn&& on_edge, NodeFn&& on_node) {
  for (const auto& t : train) {
    const Graph g = build_graph(t.mesh);
    for (int e = 0; e < g.num_edges(); ++e) on_edge(g.edge_features.col(e));
    const std::size_t nv = t.num_vertices();
    for (int k = 0; k + 1 < t.num_frames(); ++k) {
      const auto& cur = t.frames[k];
      const auto& nxt = t.frames[k + 1];
      for (std::size_t i = 0; i < nv; ++i) {
        const double vx = cur[3 * i], vy = cur[3 * i + 1];
        on_node(std::array<double, 5>{vx, vy, (nxt[3 * i] - vx) / t.frame_interval,
                                      (nxt[3 * i + 1] - vy) / t.frame_interval, nxt[3 * i + 2]});
      }
    }
  }
}

}  // namespace

NormStats compute_norm_stats(std::span<const Trajectory> train) {
  if (train.empty()) throw std::invalid_argument("compute_norm_stats: empty training split");
  std::array<double, 3> esum{}, esq{};
  std::array<double, 5> nsum{}, nsq{};
  double ne = 0, nn = 0;
  visit_features(
      train,
      [&](const auto& col) {
        for (int c = 0; c < 3; ++c) esum[c] += col(c);
        ne += 1;
      },
      [&](const std::array<double, 5>& x) {
        for (int c = 0; c < 5; ++c) nsum[c] += x[c];
        nn += 1;
      });
  if (ne == 0 || nn == 0) throw std::invalid_argument("compute_norm_stats: no transitions in training split");
  std::array<double, 3> emean{};
  std::array<double, 5> nmean{};
  for (int c = 0; c < 3; ++c) emean[c] = esum[c] / ne;
  for (int c = 0; c < 5; ++c) nmean[c] = nsum[c] / nn;
  visit_features(
      train,
      [&](const auto& col) {
        for (int c = 0; c < 3; ++c) esq[c] += (col(c) - emean[c]) * (col(c) - emean[c]);
      },
      [&](const std::array<double, 5>& x) {
        for (int c = 0; c < 5; ++c) nsq[c] += (x[c] - nmean[c]) * (x[c] - nmean[c]);
      });
  auto sd = [](double sq, double n) { return std::max(kStdFloor, std::sqrt(sq / n)); };
  NormStats s;
  for (int c = 0; c < 3; ++c) {
    s.edge_mean[c] = emean[c];
    s.edge_std[c] = sd(esq[c], ne);
  }
  for (int c = 0; c < 2; ++c) {
    s.velocity_mean[c] = nmean[c];
    s.velocity_std[c] = sd(nsq[c], nn);
    s.derivative_mean[c] = nmean[2 + c];
    s.derivative_std[c] = sd(nsq[2 + c], nn);
  }
  s.pressure_mean = nmean[4];
  s.pressure_std = sd(nsq[4], nn);
  return s;
}

}  // namespace mgn
