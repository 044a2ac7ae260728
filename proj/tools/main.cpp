#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "mgn/metrics.hpp"
#include "mgn/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mgn;
using namespace mgn::cli;

namespace {

/// Flags that override RunSettings; unset flags keep the file (or default) value.
struct Overrides {
  std::string config;
  std::optional<int> latent, blocks, hidden_layers, epochs, frames;
  std::optional<double> lr, gamma, noise, mesh_scale, viscosity;
  bool separate_blocks = false;

  void add_model(CLI::App* app) {
    app->add_option("--latent", latent, "latent and hidden width");
    app->add_option("--blocks", blocks, "message passing blocks");
    app->add_option("--hidden-layers", hidden_layers, "hidden layers per MLP");
    app->add_flag("--separate-blocks", separate_blocks, "separate weights for every block");
  }
  void add_train(CLI::App* app) {
    app->add_option("--epochs", epochs);
    app->add_option("--lr", lr, "initial learning rate");
    app->add_option("--gamma", gamma, "per-epoch learning rate decay");
    app->add_option("--noise", noise, "std of the input velocity noise");
  }
  void add_data(CLI::App* app) {
    app->add_option("--frames", frames, "stored frames per simulation");
    app->add_option("--mesh-scale", mesh_scale, "uniform mesh coarsening factor");
    app->add_option("--viscosity", viscosity);
  }

  RunSettings resolve() const {
    RunSettings s = config.empty() ? RunSettings{} : load_settings(config);
    if (latent) s.model.latent = *latent;
    if (blocks) s.model.blocks = *blocks;
    if (hidden_layers) s.model.hidden_layers = *hidden_layers;
    if (separate_blocks) s.model.shared_processor = false;
    if (epochs) s.train.epochs = *epochs;
    if (lr) s.train.learning_rate = *lr;
    if (gamma) s.train.gamma = *gamma;
    if (noise) s.train.noise_std = *noise;
    if (frames) s.solver.frames = *frames;
    if (mesh_scale) s.mesher = s.mesher.scaled(*mesh_scale);
    if (viscosity) s.solver.viscosity = *viscosity;
    return s;
  }
};

std::uint64_t model_seed(std::uint64_t seed) { return derive_seed(seed, 0x6d6f64656cULL); }

void log_line(std::ofstream* file, const std::string& line) {
  std::cout << line << std::endl;
  if (file && *file) *file << line << std::endl;
}

/// Trains (or resumes) a checkpoint at `out` until `settings.train.epochs` are done.
void run_training(const fs::path& data, const RunSettings& settings, std::uint64_t seed, const fs::path& out,
                  bool resume, const fs::path& log_path) {
  const DatasetManifest manifest = read_manifest(data);
  const auto train = load_split(data, manifest, Split::train);
  if (train.empty()) throw std::runtime_error(data.string() + ": empty training split");
  NormStats stats = dataset_stats(data, manifest);
  TrainConfig cfg = settings.train;
  cfg.seed = seed;
  MgnModel model(settings.model);
  int done = 0;
  if (resume && fs::exists(out)) {
    Checkpoint ck = load_checkpoint(out);
    if (ck.meta.value("dataset_id", "") != manifest.dataset_id) {
      throw std::runtime_error(out.string() + " was trained on a different dataset");
    }
    if (ck.model.config() != settings.model) throw std::runtime_error(out.string() + ": architecture differs from the settings");
    model = std::move(ck.model);
    stats = ck.stats;
    const int epochs = cfg.epochs;
    cfg = ck.train;
    cfg.epochs = epochs;
    done = ck.epochs_done;
  } else {
    model.init(model_seed(seed));
  }
  const json meta{{"dataset_id", manifest.dataset_id}, {"family", manifest.family}};
  std::ofstream log(log_path, std::ios::app);
  Trainer trainer(std::move(model), stats, cfg, train);
  trainer.set_epochs_done(done);
  if (done == 0) save_checkpoint(out, trainer.model(), stats, cfg, 0, meta);
  while (trainer.epochs_done() < cfg.epochs) {
    const EpochStats e = trainer.train_epoch();
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch=%d lr=%.6e loss=%.6e transitions=%zu seconds=%.2f", e.epoch,
                  e.learning_rate, e.mean_loss, e.transitions, e.seconds);
    log_line(&log, buf);
    save_checkpoint(out, trainer.model(), stats, cfg, e.epoch, meta);
  }
}

struct EvalRequest {
  fs::path data;
  std::optional<fs::path> checkpoint;  // untrained when empty
  RunSettings settings;
  std::uint64_t seed = 0;
  Split split = Split::eval;
  bool allow_train_eval = false;
  std::optional<fs::path> plots;
};

CellResult run_evaluation(const EvalRequest& req) {
  const DatasetManifest manifest = read_manifest(req.data);
  CellResult cell;
  cell.eval = manifest.family;
  cell.seed = req.seed;
  MgnModel model(req.settings.model);
  NormStats stats;
  if (req.checkpoint) {
    Checkpoint ck = load_checkpoint(*req.checkpoint);
    if (req.split == Split::train && !req.allow_train_eval && ck.meta.value("dataset_id", "") == manifest.dataset_id) {
      throw std::runtime_error("refusing to evaluate on the checkpoint's own training split (use --allow-train-eval)");
    }
    model = std::move(ck.model);
    stats = ck.stats;
    cell.train = ck.meta.value("family", std::string("unknown"));
    cell.seed = ck.train.seed;
  } else {
    model.init(model_seed(req.seed));
    stats = dataset_stats(req.data, manifest);
  }
  const auto truth = load_split(req.data, manifest, req.split);
  if (truth.empty()) throw std::runtime_error(req.data.string() + ": nothing to evaluate in this split");
  cell.result = evaluate_model(model, stats, truth, worker_count());
  if (req.plots) {
    fs::create_directories(*req.plots);
    const fs::path png = *req.plots / (fs::path(cell_file_name(cell)).stem().string() + ".png");
    write_field_plot(png, truth.front(), rollout(model, stats, truth.front()));
  }
  return cell;
}

void write_json(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  std::ofstream(tmp) << j.dump(2) << '\n';
  fs::rename(tmp, path);
}

void print_eval(const EvalResult& r) {
  std::printf("%-18s %12s %12s\n", "", "velocity", "pressure");
  const std::pair<const char*, FieldError> rows[] = {{"1-step", r.one_step},
                                                     {"50-steps", r.fifty_steps},
                                                     {"all-steps", r.all_steps},
                                                     {"all-steps median", r.all_steps_median}};
  for (const auto& [name, e] : rows) std::printf("%-18s %12.5e %12.5e\n", name, e.velocity, e.pressure);
}

std::vector<std::string> family_names() {
  std::vector<std::string> out;
  for (auto f : kAllFamilies) out.emplace_back(family_name(f));
  return out;
}

std::string write_report(const fs::path& results, const fs::path& out) {
  const auto cells = read_cells(results);
  std::string text = "# Evaluation report\n\n";
  if (cells.empty()) text += "No results found.\n";
  for (const auto& t : build_tables(cells)) {
    text += render_table(t);
    const fs::path plots = results / "plots";
    if (fs::exists(plots)) {
      std::vector<std::string> images;
      for (const auto& e : fs::directory_iterator(plots)) {
        const std::string name = e.path().filename().string();
        if (e.path().extension() == ".png" && name.find("__" + t.eval + "__") != std::string::npos) images.push_back(name);
      }
      std::sort(images.begin(), images.end());
      for (const auto& img : images) {
        text += "![" + img + "](" + fs::relative(plots / img, out.parent_path().empty() ? "." : out.parent_path()).string() + ")\n";
      }
      if (!images.empty()) text += "\n";
    }
  }
  std::ofstream(out) << text;
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mesh graph network toolkit: datasets, training, evaluation"};
  app.require_subcommand(1);
  Overrides ov;

  auto* gen = app.add_subcommand("generate", "simulate a dataset");
  std::string family;
  int count = 440;
  std::uint64_t seed = 0;
  fs::path out, data, checkpoint, log_path, results;
  gen->add_option("--family", family)->required()->check(CLI::IsMember(family_names()));
  gen->add_option("--count", count)->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed);
  gen->add_option("--out", out, "dataset directory")->required();
  gen->add_option("--config", ov.config)->check(CLI::ExistingFile);
  ov.add_data(gen);

  auto* train = app.add_subcommand("train", "train a model on a dataset's training split");
  bool resume = false;
  train->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", out, "checkpoint path")->required();
  train->add_option("--seed", seed);
  train->add_option("--log", log_path, "epoch log (default: <out>.log)");
  train->add_flag("--resume", resume, "continue from an existing checkpoint at --out");
  train->add_option("--config", ov.config)->check(CLI::ExistingFile);
  ov.add_model(train);
  ov.add_train(train);

  auto* eval = app.add_subcommand("evaluate", "rollout errors of a checkpoint or an untrained model");
  bool untrained = false, allow_train_eval = false;
  std::string split = "eval";
  fs::path plots;
  eval->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
  auto* ck_opt = eval->add_option("--checkpoint", checkpoint)->check(CLI::ExistingFile);
  auto* un_opt = eval->add_flag("--untrained", untrained, "freshly initialized model (the None baseline)");
  ck_opt->excludes(un_opt);
  eval->add_option("--seed", seed, "initialization seed for --untrained");
  eval->add_option("--split", split)->check(CLI::IsMember({"eval", "train"}));
  eval->add_flag("--allow-train-eval", allow_train_eval);
  eval->add_option("--out", out, "result JSON");
  eval->add_option("--plots", plots, "directory for final-frame field plots");
  eval->add_option("--config", ov.config)->check(CLI::ExistingFile);
  ov.add_model(eval);

  auto* matrix = app.add_subcommand("matrix", "train on every dataset and evaluate on every dataset");
  std::vector<fs::path> datasets;
  std::vector<std::uint64_t> seeds;
  bool with_plots = false;
  matrix->add_option("--data", datasets, "dataset directories")->required()->check(CLI::ExistingDirectory);
  matrix->add_option("--seeds", seeds)->delimiter(',');
  matrix->add_option("--out", out, "results directory")->required();
  matrix->add_flag("--plots", with_plots);
  matrix->add_option("--config", ov.config)->check(CLI::ExistingFile);
  ov.add_model(matrix);
  ov.add_train(matrix);

  auto* report = app.add_subcommand("report", "tables from a results directory");
  report->add_option("--results", results)->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", out, "markdown file (default: <results>/report.md)");

  auto* bench = app.add_subcommand("bench", "solver versus model wall-clock per simulation");
  int reps = 3;
  std::optional<int> bench_frames;
  bool require_speedup = false;
  count = 3;
  bench->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
  bench->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  bench->add_option("--count", count, "simulations from the evaluation split")->check(CLI::PositiveNumber);
  bench->add_option("--reps", reps)->check(CLI::PositiveNumber);
  bench->add_option("--frames", bench_frames, "frames per simulation (default: all)");
  bench->add_flag("--require-speedup", require_speedup, "exit with status 2 unless the model is faster");
  bench->add_option("--out", out, "result JSON");

  auto* qoi = app.add_subcommand("qoi", "drag, lift and pressure difference on the benchmark cylinder");
  double end_time = 30.0, mesh_scale = 1.0;
  qoi->add_option("--end-time", end_time);
  qoi->add_option("--mesh-scale", mesh_scale);
  qoi->add_option("--out", out, "result JSON");

  auto* mesh_cmd = app.add_subcommand("mesh", "sample and triangulate one geometry");
  int index = 0;
  mesh_cmd->add_option("--family", family)->required()->check(CLI::IsMember(family_names()));
  mesh_cmd->add_option("--seed", seed);
  mesh_cmd->add_option("--index", index);
  mesh_cmd->add_option("--mesh-scale", mesh_scale);
  mesh_cmd->add_option("--out", out, "text dump of the mesh");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const RunSettings s = ov.resolve();
      GenerateOptions g;
      g.family = *parse_family(family);
      g.count = count;
      g.seed = seed;
      g.mesher = s.mesher;
      g.solver = s.solver;
      g.workers = worker_count();
      const GenerateReport rep = generate_dataset(out, g, [](const std::string& line) { std::cout << line << std::endl; });
      std::printf("generated %d, kept %d, failed %zu\n", rep.generated, rep.skipped, rep.failures.size());
      for (const auto& f : rep.failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
      return rep.failures.empty() ? 0 : 1;
    }
    if (*train) {
      run_training(data, ov.resolve(), seed, out, resume, log_path.empty() ? fs::path(out.string() + ".log") : log_path);
      return 0;
    }
    if (*eval) {
      if (!untrained && checkpoint.empty()) throw CLI::ValidationError("evaluate", "--checkpoint or --untrained is required");
      EvalRequest req{data, std::nullopt, ov.resolve(), seed, split == "train" ? Split::train : Split::eval, allow_train_eval,
                      std::nullopt};
      if (!untrained) req.checkpoint = checkpoint;
      if (!plots.empty()) req.plots = plots;
      const CellResult cell = run_evaluation(req);
      print_eval(cell.result);
      if (!out.empty()) write_json(out, cell);
      return 0;
    }
    if (*matrix) {
      RunSettings s = ov.resolve();
      if (!seeds.empty()) s.seeds = seeds;
      fs::create_directories(out / "checkpoints");
      std::vector<std::string> errors;
      std::vector<DatasetManifest> manifests;
      for (const auto& d : datasets) manifests.push_back(read_manifest(d));
      auto evaluate_all = [&](const std::optional<fs::path>& ck, const std::string& train_family, std::uint64_t sd) {
        for (std::size_t e = 0; e < datasets.size(); ++e) {
          CellResult key;
          key.train = train_family;
          key.eval = manifests[e].family;
          key.seed = sd;
          const fs::path file = out / cell_file_name(key);
          if (fs::exists(file)) continue;
          try {
            EvalRequest req{datasets[e], ck, s, sd, Split::eval, false, std::nullopt};
            if (with_plots) req.plots = out / "plots";
            write_json(file, run_evaluation(req));
            std::cout << "wrote " << file.string() << std::endl;
          } catch (const std::exception& ex) {
            errors.push_back(file.filename().string() + ": " + ex.what());
          }
        }
      };
      for (std::size_t t = 0; t < datasets.size(); ++t) {
        for (const std::uint64_t sd : s.seeds) {
          const fs::path ck = out / "checkpoints" / (manifests[t].family + "__s" + std::to_string(sd) + ".mgc");
          try {
            run_training(datasets[t], s, sd, ck, true, fs::path(ck.string() + ".log"));
          } catch (const std::exception& ex) {
            errors.push_back(ck.filename().string() + ": " + ex.what());
            continue;
          }
          evaluate_all(ck, manifests[t].family, sd);
        }
      }
      for (const std::uint64_t sd : s.seeds) evaluate_all(std::nullopt, kUntrainedRow, sd);
      std::cout << write_report(out, out / "report.md");
      for (const auto& e : errors) std::fprintf(stderr, "incomplete: %s\n", e.c_str());
      return errors.empty() ? 0 : 1;
    }
    if (*report) {
      std::cout << write_report(results, out.empty() ? results / "report.md" : out);
      return 0;
    }
    if (*bench) {
      const DatasetManifest manifest = read_manifest(data);
      auto sims = load_split(data, manifest, Split::eval);
      if (sims.size() > static_cast<std::size_t>(count)) sims.resize(count);
      const Checkpoint ck = load_checkpoint(checkpoint);
      SolverConfig solver = manifest.solver;
      const int frames = bench_frames.value_or(manifest.solver.frames);
      solver.frames = frames;
      for (auto& t : sims) t.truncate(std::min(t.num_frames(), frames));
      rollout(ck.model, ck.stats, sims.front(), std::min(frames, 2));  // warm-up
      const TimingResult r = timing_bench([&](std::size_t i) { solve_trajectory(sims[i].mesh, sims[i].domain, solver); },
                                          [&](std::size_t i) { rollout(ck.model, ck.stats, sims[i], frames); },
                                          sims.size(), reps);
      std::printf("simulations %zu, frames %d, vertices %zu\n", sims.size(), frames, sims.front().num_vertices());
      std::printf("solver %.3f s/sim, model %.3f s/sim, speedup %.2f\n", r.solver_seconds, r.model_seconds, r.speedup);
      if (!out.empty()) {
        write_json(out, json{{"solver_seconds", r.solver_seconds},
                             {"model_seconds", r.model_seconds},
                             {"speedup", r.speedup},
                             {"frames", frames},
                             {"simulations", sims.size()}});
      }
      return require_speedup && !(r.speedup > 1.0) ? 2 : 0;
    }
    if (*qoi) {
      QoiRunOptions opts;
      opts.end_time = end_time;
      opts.record_from = std::max(0.0, end_time - 5.0);
      opts.mesher = MesherOptions{}.scaled(mesh_scale);
      const auto samples = run_benchmark(opts, [](double t) {
        if (std::abs(t - std::round(t)) < 1e-9) std::fprintf(stderr, "t = %.0f\n", t);
      });
      const QoiResult q = compute_qoi(samples);
      std::printf("max c_D %.4f  max c_L %.4f  dp %.4f  frequency %.4f  St %.4f\n", q.max_drag, q.max_lift,
                  q.pressure_difference, q.frequency, q.strouhal);
      if (!out.empty()) {
        write_json(out, json{{"max_drag", q.max_drag},
                             {"max_lift", q.max_lift},
                             {"pressure_difference", q.pressure_difference},
                             {"frequency", q.frequency},
                             {"strouhal", q.strouhal},
                             {"window", {q.window_start, q.window_end}}});
      }
      return 0;
    }
    if (*mesh_cmd) {
      const DomainSpec spec = sample_geometry(*parse_family(family), seed, static_cast<std::uint64_t>(index));
      const Mesh m = triangulate(spec, MesherOptions{}.scaled(mesh_scale));
      const MeshStats st = mesh_stats(m);
      std::printf("%s\nvertices %zu cells %zu min angle %.2f deg edges [%.4f, %.4f]\n", json(spec).dump().c_str(),
                  st.vertices, st.cells, st.min_angle_deg, st.min_edge, st.max_edge);
      if (!out.empty()) {
        std::ofstream os(out);
        write_mesh_text(m, os);
      }
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
