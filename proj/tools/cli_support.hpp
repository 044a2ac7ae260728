#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgn/dataset.hpp"
#include "mgn/metrics.hpp"
#include "mgn/model.hpp"
#include "mgn/trainer.hpp"

namespace mgn::cli {

/// Every hyperparameter a run can override. Loaded from a JSON file with the
/// optional sections "model", "train", "solver" and "mesher" plus "seeds".
struct RunSettings {
  MgnConfig model;
  TrainConfig train;
  SolverConfig solver;
  MesherOptions mesher;
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

RunSettings load_settings(const std::filesystem::path& path);
nlohmann::json settings_json(const RunSettings& s);

/// MGN_WORKERS, or the hardware concurrency when unset.
int worker_count();

/// Normalization statistics of the training split, cached next to the manifest.
NormStats dataset_stats(const std::filesystem::path& dir, const DatasetManifest& m);

inline constexpr const char* kUntrainedRow = "None";

/// One evaluated (train dataset, eval dataset, seed) combination.
struct CellResult {
  std::string train = kUntrainedRow;  // family of the training data, or "None"
  std::string eval;
  std::uint64_t seed = 0;
  EvalResult result;
};

void to_json(nlohmann::json& j, const CellResult& c);
void from_json(const nlohmann::json& j, CellResult& c);

std::string cell_file_name(const CellResult& c);
std::vector<CellResult> read_cells(const std::filesystem::path& dir);

/// "mean ± deviation" with a fixed number of decimals.
std::string format_spread(const Spread& s, int decimals);

inline constexpr std::array<const char*, 4> kColumns = {"1-step", "50-steps", "all-steps", "all-steps median"};

struct TableCell {
  Spread velocity, pressure;
  int seeds = 0;
};

/// One evaluation dataset: rows are training datasets (untrained last),
/// columns the four error kinds.
struct ResultTable {
  std::string eval;
  std::vector<std::string> rows;
  std::vector<std::array<std::optional<TableCell>, 4>> cells;
};

std::vector<ResultTable> build_tables(std::span<const CellResult> cells);

/// Markdown rendering; velocity in units of 1e-3, pressure in units of 1e-2,
/// the column minimum in bold.
std::string render_table(const ResultTable& t);

/// Final-frame velocity magnitude and pressure, truth above prediction, as PNG.
void write_field_plot(const std::filesystem::path& path, const Trajectory& truth, const Trajectory& predicted);

}  // namespace mgn::cli
