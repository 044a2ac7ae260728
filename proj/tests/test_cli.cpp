#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cli_support.hpp"
#include "test_support.hpp"

using namespace mgn;
using namespace mgn::cli;

namespace {

CellResult cell(const std::string& train, const std::string& eval, std::uint64_t seed, double v, double p) {
  CellResult c;
  c.train = train;
  c.eval = eval;
  c.seed = seed;
  for (FieldError* f : {&c.result.one_step, &c.result.fifty_steps, &c.result.all_steps, &c.result.all_steps_median}) {
    *f = {v, p};
  }
  return c;
}

}  // namespace

TEST_CASE("spread formatting") {
  const std::vector<double> seeds{0, 3, 12};
  CHECK(format_spread(aggregate_seeds(seeds), 0) == "5 ± 7");
  CHECK(format_spread({2.32, 0.105}, 2) == "2.32 ± 0.10");
}

TEST_CASE("complete matrix gives one table per evaluation dataset") {
  std::vector<CellResult> cells;
  std::vector<std::string> families;
  for (auto f : kAllFamilies) families.emplace_back(family_name(f));
  for (const auto& e : families) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      for (const auto& t : families) cells.push_back(cell(t, e, s, 1e-3 * (s + 1), 1e-2));
      cells.push_back(cell(kUntrainedRow, e, s, 0.03, 0.5));
    }
  }
  const auto tables = build_tables(cells);
  REQUIRE(tables.size() == 5);
  for (const auto& t : tables) {
    CHECK(t.rows.size() == 6);
    CHECK(t.rows.back() == kUntrainedRow);
    CHECK(t.rows.front() == "standard_cylinder");
    REQUIRE(t.cells.size() == 6);
    for (const auto& row : t.cells) {
      for (const auto& c : row) {
        REQUIRE(c.has_value());
        CHECK(c->seeds == 3);
      }
    }
    CHECK(t.cells[0][0]->velocity.mean == doctest::Approx(2e-3));
    CHECK(t.cells[0][0]->velocity.deviation == doctest::Approx(1e-3));
  }
  const std::string md = render_table(tables[0]);
  CHECK(md.find("| None | 30.00 ± 0.00 |") != std::string::npos);
  CHECK(md.find("**2.00 ± 1.00**") != std::string::npos);
}

TEST_CASE("single cell gives a one-row table") {
  const std::vector<CellResult> cells{cell("cylinder_stretch", "2cylinders", 0, 0.004, 0.02)};
  const auto tables = build_tables(cells);
  REQUIRE(tables.size() == 1);
  CHECK(tables[0].rows.size() == 1);
  CHECK(tables[0].cells[0].size() == 4);
  const std::string md = render_table(tables[0]);
  CHECK(md.find("| cylinder_stretch | 4.00 ± 0.00 |") != std::string::npos);
  CHECK(md.find("| cylinder_stretch | 2.00 ± 0.00 |") != std::string::npos);
}

TEST_CASE("cell files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mgn_test_cli_cells";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  CellResult c = cell("mixed_all", "standard_cylinder", 2, 0.1, 0.2);
  c.result.per_sim = {{0.1, 0.2}};
  c.result.vertices = {10};
  std::ofstream(dir / cell_file_name(c)) << nlohmann::json(c).dump();
  std::ofstream(dir / "settings.json") << "{}";
  const auto read = read_cells(dir);
  REQUIRE(read.size() == 1);
  CHECK(read[0].train == "mixed_all");
  CHECK(read[0].seed == 2);
  CHECK(read[0].result.one_step.velocity == 0.1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("settings file with partial sections") {
  const auto path = std::filesystem::temp_directory_path() / "mgn_test_cli_settings.json";
  std::ofstream(path) << R"({"model": {"latent": 32}, "train": {"learning_rate": 0.001}, "seeds": [4, 5]})";
  const RunSettings s = load_settings(path);
  CHECK(s.model.latent == 32);
  CHECK(s.model.blocks == 15);
  CHECK(s.train.learning_rate == 0.001);
  CHECK(s.train.gamma == 0.82540);
  CHECK(s.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(load_settings(path).model == s.model);
  std::ofstream(path) << "{not json";
  CHECK_THROWS(load_settings(path));
  std::filesystem::remove(path);
}

TEST_CASE("field plot writes a PNG") {
  const auto path = std::filesystem::temp_directory_path() / "mgn_test_cli_plot.png";
  const Trajectory t = testing::random_trajectory(testing::grid_mesh(6, 4), 2, 1);
  write_field_plot(path, t, t);
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic + 1, 3) == "PNG");
  CHECK(std::filesystem::file_size(path) > 100);
  std::filesystem::remove(path);
}
