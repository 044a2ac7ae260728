#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgn/geometry.hpp"
#include "mgn/mesher.hpp"
#include "mgn/solver.hpp"

namespace mgn {

inline constexpr std::string_view kTrajectoryMagic = "MGNTRAJ1";

/// Trajectory file: the shared container (see binary_io.hpp) with a JSON
/// header holding the domain, mesh, node types, frame count, frame interval,
/// frame times and the predicted flag, and a body of J frames of
/// V * (vx, vy, p) doubles.
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory(const std::filesystem::path& path);

/// Number of training simulations for a dataset of n: floor(n * 400 / 440).
int train_split_count(int n);

struct DatasetManifest {
  std::string dataset_id;
  std::string family;
  int count = 0;
  int train_count = 0;
  std::uint64_t seed = 0;
  int frames = 0;
  MesherOptions mesher;
  SolverConfig solver;
  std::vector<std::string> files;  // index order; the first train_count are training data

  std::vector<int> train_indices() const;
  std::vector<int> eval_indices() const;
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);
void to_json(nlohmann::json& j, const MesherOptions& o);
void from_json(const nlohmann::json& j, MesherOptions& o);
void to_json(nlohmann::json& j, const SolverConfig& c);
void from_json(const nlohmann::json& j, SolverConfig& c);

inline constexpr const char* kManifestName = "manifest.json";

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
/// Reads the manifest and checks that every listed file exists.
DatasetManifest read_manifest(const std::filesystem::path& dir);

enum class Split { train, eval };

std::vector<Trajectory> load_split(const std::filesystem::path& dir, const DatasetManifest& m, Split split);

struct GenerateOptions {
  DatasetFamily family = DatasetFamily::standard_cylinder;
  int count = 440;
  std::uint64_t seed = 0;
  MesherOptions mesher;
  SolverConfig solver;
  int workers = 1;
};

struct GenerateReport {
  int generated = 0;
  int skipped = 0;
  std::vector<std::string> failures;  // one line per failed simulation
};

std::string trajectory_file_name(int index);

/// Simulates every missing trajectory of the dataset in `dir` (files that
/// already read back cleanly are kept) and writes the manifest. Failures are
/// collected per simulation; the remaining simulations still run.
GenerateReport generate_dataset(const std::filesystem::path& dir, const GenerateOptions& opts,
                                const std::function<void(const std::string&)>& log = {});

/// Normalization statistics. Every group stores per-component mean and
/// population standard deviation (clamped below at kStdFloor).
struct NormStats {
  std::array<double, 3> edge_mean{0, 0, 0}, edge_std{1, 1, 1};
  std::array<double, 2> velocity_mean{0, 0}, velocity_std{1, 1};
  std::array<double, 2> derivative_mean{0, 0}, derivative_std{1, 1};
  double pressure_mean = 0.0, pressure_std = 1.0;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

inline constexpr double kStdFloor = 1e-8;

void to_json(nlohmann::json& j, const NormStats& s);
void from_json(const nlohmann::json& j, NormStats& s);

/// Exact two-pass statistics over the training split: edge features once per
/// directed mesh edge of each trajectory, input velocity over every
/// (vertex, transition), targets ((v_{k+1} - v_k) / m, p_{k+1}) likewise.
NormStats compute_norm_stats(std::span<const Trajectory> train);

inline double normalize(double x, double mean, double std) { return (x - mean) / std; }
inline double denormalize(double x, double mean, double std) { return x * std + mean; }

}  // namespace mgn
