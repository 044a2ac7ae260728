#include "cli_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

#include <png.h>

namespace mgn::cli {

using nlohmann::json;

RunSettings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  RunSettings s;
  if (j.contains("model")) s.model = j["model"].get<MgnConfig>();
  if (j.contains("train")) s.train = j["train"].get<TrainConfig>();
  if (j.contains("solver")) s.solver = j["solver"].get<SolverConfig>();
  if (j.contains("mesher")) s.mesher = j["mesher"].get<MesherOptions>();
  if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  return s;
}

json settings_json(const RunSettings& s) {
  return json{{"model", s.model}, {"train", s.train}, {"solver", s.solver}, {"mesher", s.mesher}, {"seeds", s.seeds}};
}

int worker_count() {
  if (const char* env = std::getenv("MGN_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

NormStats dataset_stats(const std::filesystem::path& dir, const DatasetManifest& m) {
  const auto cache = dir / "norm_stats.json";
  if (std::filesystem::exists(cache)) {
    std::ifstream in(cache);
    const json j = json::parse(in);
    if (j.value("dataset_id", "") == m.dataset_id && j.value("train_count", -1) == m.train_count) {
      return j.at("stats").get<NormStats>();
    }
  }
  const auto train = load_split(dir, m, Split::train);
  if (train.empty()) throw std::runtime_error(dir.string() + ": empty training split, no normalization statistics");
  const NormStats stats = compute_norm_stats(train);
  std::ofstream(cache) << json{{"dataset_id", m.dataset_id}, {"train_count", m.train_count}, {"stats", stats}}.dump(2);
  return stats;
}

void to_json(json& j, const CellResult& c) {
  j = json{{"train", c.train}, {"eval", c.eval}, {"seed", c.seed}, {"result", c.result}};
}

void from_json(const json& j, CellResult& c) {
  c.train = j.at("train").get<std::string>();
  c.eval = j.at("eval").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.result = j.at("result").get<EvalResult>();
}

std::string cell_file_name(const CellResult& c) {
  return c.train + "__" + c.eval + "__s" + std::to_string(c.seed) + ".json";
}

std::vector<CellResult> read_cells(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".json" && e.path().filename().string().find("__") != std::string::npos) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<CellResult> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      out.push_back(json::parse(in).get<CellResult>());
    } catch (const json::exception& e) {
      throw std::runtime_error(f.string() + ": " + e.what());
    }
  }
  return out;
}

std::string format_spread(const Spread& s, int decimals) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, s.mean, decimals, s.deviation);
  return buf;
}

namespace {

int family_rank(const std::string& name) {
  const auto f = parse_family(name);
  return f ? static_cast<int>(*f) : 100;
}

bool row_order(const std::string& a, const std::string& b) {
  if (a == kUntrainedRow || b == kUntrainedRow) return b == kUntrainedRow && a != kUntrainedRow;
  const int ra = family_rank(a), rb = family_rank(b);
  return ra != rb ? ra < rb : a < b;
}

FieldError column_value(const EvalResult& r, int column) {
  switch (column) {
    case 0:
      return r.one_step;
    case 1:
      return r.fifty_steps;
    case 2:
      return r.all_steps;
    default:
      return r.all_steps_median;
  }
}

}  // namespace

std::vector<ResultTable> build_tables(std::span<const CellResult> cells) {
  std::map<std::string, std::map<std::string, std::vector<const CellResult*>>> grouped;
  for (const auto& c : cells) grouped[c.eval][c.train].push_back(&c);
  std::vector<std::string> evals;
  for (const auto& [e, rows] : grouped) evals.push_back(e);
  std::sort(evals.begin(), evals.end(), row_order);
  std::vector<ResultTable> out;
  for (const auto& e : evals) {
    ResultTable t;
    t.eval = e;
    for (const auto& [train, list] : grouped[e]) t.rows.push_back(train);
    std::sort(t.rows.begin(), t.rows.end(), row_order);
    for (const auto& train : t.rows) {
      const auto& list = grouped[e][train];
      std::array<std::optional<TableCell>, 4> row;
      for (int col = 0; col < 4; ++col) {
        std::vector<double> v, p;
        for (const CellResult* c : list) {
          const FieldError f = column_value(c->result, col);
          v.push_back(f.velocity);
          p.push_back(f.pressure);
        }
        row[col] = TableCell{aggregate_seeds(v), aggregate_seeds(p), static_cast<int>(list.size())};
      }
      t.cells.push_back(row);
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string render_table(const ResultTable& t) {
  struct Block {
    const char* name;
    double scale;
    Spread TableCell::*field;
  };
  const Block blocks[] = {{"velocity (x1e-3)", 1e3, &TableCell::velocity}, {"pressure (x1e-2)", 1e2, &TableCell::pressure}};
  std::string out = "### Evaluated on " + t.eval + "\n\n";
  for (const auto& b : blocks) {
    out += "| " + std::string(b.name) + " |";
    for (const char* c : kColumns) out += std::string(" ") + c + " |";
    out += "\n|---|";
    for (std::size_t c = 0; c < kColumns.size(); ++c) out += "---|";
    out += "\n";
    std::array<double, 4> best;
    best.fill(INFINITY);
    for (const auto& row : t.cells) {
      for (int c = 0; c < 4; ++c) {
        if (row[c]) best[c] = std::min(best[c], ((*row[c]).*b.field).mean);
      }
    }
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      out += "| " + t.rows[r] + " |";
      for (int c = 0; c < 4; ++c) {
        const auto& cell = t.cells[r][c];
        if (!cell) {
          out += " missing |";
          continue;
        }
        const Spread s = (*cell).*b.field;
        std::string text = format_spread({s.mean * b.scale, s.deviation * b.scale}, 2);
        if (s.mean == best[c] && t.rows.size() > 1) text = "**" + text + "**";
        out += " " + text + " |";
      }
      out += "\n";
    }
    out += "\n";
  }
  return out;
}

namespace {

struct Rgb {
  unsigned char r, g, b;
};

// Piecewise-linear approximation of the viridis colour map.
Rgb colour(double t) {
  static const double stops[][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  auto mix = [&](int c) { return static_cast<unsigned char>(std::lround(stops[i][c] * (1 - f) + stops[i + 1][c] * f)); };
  return {mix(0), mix(1), mix(2)};
}

void write_png(const std::filesystem::path& path, int width, int height, const std::vector<unsigned char>& rgb) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("PNG encoding failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) png_write_row(png, rgb.data() + static_cast<std::size_t>(y) * width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

void write_field_plot(const std::filesystem::path& path, const Trajectory& truth, const Trajectory& predicted) {
  if (truth.num_frames() == 0 || predicted.num_frames() == 0 || truth.num_vertices() != predicted.num_vertices()) {
    throw std::invalid_argument("write_field_plot: incompatible trajectories");
  }
  const Mesh& mesh = truth.mesh;
  const std::size_t nv = mesh.num_vertices();
  const auto& ft = truth.frames.back();
  const auto& fp = predicted.frames.back();
  // Panels: |v| truth, |v| prediction, p truth, p prediction.
  std::array<std::vector<double>, 4> field;
  for (auto& f : field) f.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    field[0][i] = std::hypot(ft[3 * i], ft[3 * i + 1]);
    field[1][i] = std::hypot(fp[3 * i], fp[3 * i + 1]);
    field[2][i] = ft[3 * i + 2];
    field[3][i] = fp[3 * i + 2];
  }
  std::array<std::pair<double, double>, 2> range;
  for (int k = 0; k < 2; ++k) {
    // Colour range follows the ground truth so both panels are comparable.
    const auto [lo, hi] = std::minmax_element(field[2 * k].begin(), field[2 * k].end());
    range[k] = {*lo, *hi > *lo ? *hi : *lo + 1.0};
  }
  double xmax = 0, ymax = 0;
  for (const auto& v : mesh.vertices) {
    xmax = std::max(xmax, v.x);
    ymax = std::max(ymax, v.y);
  }
  const int width = 800, gap = 6;
  const double px = width / xmax;
  const int panel = static_cast<int>(std::ceil(ymax * px)) + 1;
  const int height = 4 * panel + 3 * gap;
  std::vector<unsigned char> img(static_cast<std::size_t>(width) * height * 3, 255);
  for (int k = 0; k < 4; ++k) {
    const auto [lo, hi] = range[k / 2];
    const int y0 = k * (panel + gap);
    for (int y = 0; y < panel; ++y) {
      for (int x = 0; x < width; ++x) {
        unsigned char* p = &img[(static_cast<std::size_t>(y0 + y) * width + x) * 3];
        p[0] = p[1] = p[2] = 160;
      }
    }
    for (const auto& t : mesh.triangles) {
      const Vec2 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
      const double area = signed_area(a, b, c);
      const int xa = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}) * px)));
      const int xb = std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}) * px)));
      const int ya = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}) * px)));
      const int yb = std::min(panel - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}) * px)));
      for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) {
          const Vec2 q{(x + 0.5) / px, (y + 0.5) / px};
          const double l0 = signed_area(q, b, c) / area, l1 = signed_area(a, q, c) / area, l2 = 1.0 - l0 - l1;
          if (l0 < -1e-9 || l1 < -1e-9 || l2 < -1e-9) continue;
          const double v = l0 * field[k][t[0]] + l1 * field[k][t[1]] + l2 * field[k][t[2]];
          const Rgb col = colour((v - lo) / (hi - lo));
          // Image rows run top-down; the channel's y axis points up.
          unsigned char* p = &img[(static_cast<std::size_t>(y0 + panel - 1 - y) * width + x) * 3];
          p[0] = col.r;
          p[1] = col.g;
          p[2] = col.b;
        }
      }
    }
  }
  write_png(path, width, height, img);
}

}  // namespace mgn::cli
