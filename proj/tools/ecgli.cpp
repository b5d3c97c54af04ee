// ecgli: command-line front end of the simulation / surrogate / inversion
// pipeline. Exit codes: 0 ok, 2 config or usage error, 3 numeric failure,
// 4 I/O or corrupt data.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "ecgli/cli/config.hpp"
#include "ecgli/cli/manifest.hpp"
#include "ecgli/cli/pipeline.hpp"
#include "ecgli/cli/plot.hpp"
#include "ecgli/fem/mesh_io.hpp"
#include "ecgli/parallel.hpp"

namespace fs = std::filesystem;
using namespace ecgli;

namespace {

void log_line(const std::string& s) { std::fprintf(stderr, "[ecgli] %s\n", s.c_str()); }

Vec parse_vector(const std::string& s) {
  Vec v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("expected comma-separated numbers, got '" + s + "'");
    }
  }
  return v;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (double d : parse_vector(s)) {
    if (d != static_cast<int>(d) || d < 1) throw ConfigError("subdivisions must be positive integers: '" + s + "'");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

cli::RunConfig load_config(const std::string& path) {
  return path.empty() ? cli::parse_config_text("") : cli::parse_config(path);
}

int cmd_simulate(const std::string& config, const std::string& p_text, const fs::path& out, int save_every,
                 const std::string& mesh_out) {
  const auto cfg = load_config(config);
  const dataset::ForwardModel fm(cfg.hf);
  const Vec p = parse_vector(p_text);
  const auto t0 = std::chrono::steady_clock::now();
  const auto run = fm.simulate_full(p, save_every);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(out);
  pecg::write_signal_csv(out / "signal_full.csv", run.signal);
  pecg::write_signal_csv(out / "signal.csv", dataset::resample_signal(run.signal, cfg.hf.n_t, cfg.hf.t_end));
  cli::RunManifest m;
  m.set("version", cli::kVersion);
  m.set("config_hash", cli::config_hash(cfg));
  m.set("command", "simulate");
  m.set("p", p_text);
  m.set("signal", "signal.csv");
  m.set("signal_full", "signal_full.csv");
  m.set("nodes", std::to_string(fm.grid().num_nodes()));
  if (save_every > 0) {
    std::ofstream f(out / "snapshots.bin", std::ios::binary);
    for (const auto& v : run.trajectory.snapshots) f.write(reinterpret_cast<const char*>(v.data()), v.size() * 8);
    if (!f) throw IoError("write failed: snapshots.bin");
    m.set("snapshots", "snapshots.bin");
    m.set("snapshot_count", std::to_string(run.trajectory.snapshots.size()));
    m.set("snapshot_every_ms", save_every * cfg.hf.dt);
  }
  if (!mesh_out.empty()) {
    fem::write_grid(fs::path(mesh_out), fm.grid());
    m.set("mesh", mesh_out);
  }
  m.set("time.simulate", secs);
  cli::write_manifest(out / "manifest.txt", m);
  log_line("simulated " + std::to_string(run.signal.n_t) + " steps in " + std::to_string(secs) + " s");
  return 0;
}

int cmd_gen_dataset(const std::string& kind, const std::string& config, std::uint64_t seed, bool seed_set,
                    const fs::path& out, int jobs, bool csv) {
  auto cfg = load_config(config);
  if (!kind.empty()) {
    try {
      cfg.hf.kind = dataset::parse_case_kind(kind);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--case: ") + e.what());
    }
    cfg.inverse.subdivisions = cli::default_subdivisions(cfg.hf.kind);
  }
  if (seed_set) cfg.dataset_seed = seed;
  cfg.validate();
  const auto ds = cli::stage_gen_dataset(cfg, out, jobs, log_line);
  if (csv) dataset::export_csv(out / "csv", ds);
  log_line("wrote " + std::to_string(ds.samples.size()) + " samples to " + out.string());
  return 0;
}

int cmd_train(const fs::path& dataset_dir, int latent, const std::string& schedule, std::uint64_t seed, bool seed_set,
              const fs::path& out, int jobs) {
  auto cfg = load_config(schedule);
  if (latent > 0) cfg.surrogate.n_s = latent;
  if (seed_set) cfg.surrogate.seed = seed;
  const auto ds = dataset::load_dataset(dataset_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto tr = cli::stage_train(cfg, ds, jobs, log_line);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  surrogate::save_model(out, tr.model);
  const fs::path history = out.string() + ".history.csv";
  surrogate::write_history_csv(history, tr.history);
  cli::RunManifest m;
  m.set("version", cli::kVersion);
  m.set("command", "train");
  m.set("config_hash", cli::config_hash(cfg));
  m.set("seed", std::to_string(cfg.surrogate.seed));
  m.set("dataset_hash", cli::file_hash(dataset_dir / "data.bin"));
  m.set("model", out.filename().string());
  m.set("history", history.filename().string());
  m.set("best_epoch", std::to_string(tr.best_epoch));
  m.set("best_val_mse", tr.best_val_mse);
  m.set("lbfgs_line_search_failed", tr.lbfgs_line_search_failed ? "true" : "false");
  m.set("time.train", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  cli::write_manifest(out.string() + ".manifest.txt", m);
  log_line("best validation MSE " + std::to_string(tr.best_val_mse) + " at epoch " + std::to_string(tr.best_epoch));
  return 0;
}

int cmd_invert(const fs::path& model_path, const std::string& observed, const std::string& kind_text,
               const std::string& subdiv, const std::string& strategy, const fs::path& out, const std::string& config,
               const std::string& dataset_dir) {
  auto cfg = load_config(config);
  const auto model = surrogate::load_model(model_path);
  dataset::CaseKind kind = cfg.hf.kind;
  if (!kind_text.empty()) {
    try {
      kind = dataset::parse_case_kind(kind_text);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("--case: ") + e.what());
    }
  }
  cfg.hf.kind = kind;
  // Observation: a CSV file or <dataset-dir>:<index>.
  pecg::PecgSignal obs;
  std::optional<Vec> p_true;
  std::optional<dataset::Dataset> ds;
  const auto colon = observed.rfind(':');
  if (!fs::exists(observed) && colon != std::string::npos) {
    ds = dataset::load_dataset(observed.substr(0, colon));
    const auto idx = std::stoul(observed.substr(colon + 1));
    if (idx >= ds->samples.size()) throw ConfigError("--observed: sample index out of range");
    obs = ds->samples[idx].signal;
    p_true = ds->samples[idx].p;
    kind = ds->kind;
  } else {
    obs = pecg::read_signal_csv(fs::path(observed));
    if (!dataset_dir.empty()) ds = dataset::load_dataset(dataset_dir);
  }
  const dataset::ParamBox box = ds ? ds->domain : [&] {
    auto h = cfg.hf;
    h.kind = kind;
    return dataset::admissible_domain(h);
  }();
  if (static_cast<int>(box.dim()) != model.n_p) throw ConfigError("--case does not match the model's parameter count");
  const auto& norm = model.norm;
  if (obs.n_leads != static_cast<std::size_t>(model.n_leads) || obs.n_t != static_cast<std::size_t>(model.n_t)) {
    throw InvalidArgument("observed signal shape does not match the model");
  }
  const dataset::ParamBox qbox{norm.normalize_params(box.lo), norm.normalize_params(box.hi)};
  const std::vector<int> sub = subdiv.empty() ? cfg.inverse.subdivisions : parse_ints(subdiv);
  if (sub.size() != box.dim()) throw ConfigError("--subdiv: expected one count per parameter");
  const auto strat = strategy.empty() ? cfg.inverse.strategy : inverse::parse_strategy(strategy);
  const auto j = inverse::surrogate_misfit(model, norm.normalize_signal(obs.values));
  const auto cands = inverse::partition_candidates(qbox, sub);
  const auto sr = strat == inverse::Strategy::Warmup
                      ? inverse::screen_with_warmup(j, cands, qbox, cfg.inverse.warmup_iterations, cfg.inverse.warmup_lr)
                      : inverse::screen(j, cands);
  auto r = inverse::invert(j, qbox, sr.p, cfg.inverse.inverse);
  for (auto& row : r.trace) row.p = norm.denormalize_params(row.p);
  const Vec p_hat = norm.denormalize_params(r.p_hat);
  fs::create_directories(out);
  cli::write_trace_csv(out / "trace.csv", r.trace);
  pecg::write_signal_csv(out / "reconstruction.csv", surrogate::surrogate_forward(model, p_hat));
  pecg::write_signal_csv(out / "observed.csv", obs);
  cli::RunManifest m;
  m.set("version", cli::kVersion);
  m.set("command", "invert");
  m.set("config_hash", cli::config_hash(cfg));
  m.set("model_hash", cli::file_hash(model_path));
  m.set("strategy", inverse::to_string(strat));
  std::string ps;
  for (std::size_t i = 0; i < p_hat.size(); ++i) ps += (i ? "," : "") + std::to_string(p_hat[i]);
  m.set("p_hat", ps);
  m.set("misfit", r.misfit);
  m.set("screening_misfit", sr.misfit);
  m.set("screening_index", std::to_string(sr.index));
  m.set("time.invert", r.wall_seconds);
  if (p_true) {
    const auto to_cart = inverse::center_map(kind, cfg.hf.bounds);
    m.set("localization_error", distance(to_cart(p_hat), to_cart(*p_true)));
  }
  m.set("trace", "trace.csv");
  m.set("reconstruction", "reconstruction.csv");
  cli::write_manifest(out / "manifest.txt", m);
  log_line("estimate (" + ps + ") misfit " + std::to_string(r.misfit));
  return 0;
}

int cmd_eval(const fs::path& model_path, const fs::path& dataset_dir, const std::string& split, const fs::path& out,
             int jobs) {
  const auto model = surrogate::load_model(model_path);
  const auto ds = dataset::load_dataset(dataset_dir);
  const auto mt = surrogate::evaluate(model, ds.split(split), jobs);
  cli::RunManifest m;
  m.set("version", cli::kVersion);
  m.set("command", "eval");
  m.set("model_hash", cli::file_hash(model_path));
  m.set("dataset_hash", cli::file_hash(dataset_dir / "data.bin"));
  m.set("split", split);
  cli::record_metrics(m, "eval", mt);
  fs::create_directories(out);
  cli::write_manifest(out / "manifest.txt", m);
  std::printf("mse %.6e normalized_rmse %.6e pearson_dissimilarity %.6e\n", mt.mse, mt.normalized_rmse,
              mt.pearson_dissimilarity);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ECG-based localization: simulation, surrogate training and inversion"};
  app.require_subcommand(1);
  int jobs = default_jobs();
  app.add_option("--jobs", jobs, "worker threads (default: ECGLI_JOBS or all cores)")->check(CLI::PositiveNumber);

  std::string config, p_text, mesh_out, kind, schedule, observed, subdiv, strategy, split = "test", dataset_dir;
  fs::path out, dataset_path, model_path;
  int save_every = 0, latent = 0;
  std::uint64_t seed = 0;
  bool csv = false, force = false;
  std::vector<std::string> csvs;

  auto* sim = app.add_subcommand("simulate", "one high-fidelity simulation and its pseudo-ECG");
  sim->add_option("--config", config, "config file")->required();
  sim->add_option("--p", p_text, "case parameters, comma-separated")->required();
  sim->add_option("--out", out, "output directory")->required();
  sim->add_option("--save-every", save_every, "store v every N steps (0: none)");
  sim->add_option("--mesh-out", mesh_out, "also write the mesh in binary form");

  auto* gen = app.add_subcommand("gen-dataset", "sample parameters and simulate a dataset");
  gen->add_option("--case", kind, "stimulus-2d | stimulus-3d | ischemia-2d | ischemia-radius-2d");
  gen->add_option("--config", config, "config file");
  auto* seed_gen = gen->add_option("--seed", seed, "dataset seed");
  gen->add_option("--out", out, "dataset directory")->required();
  gen->add_flag("--csv", csv, "also export per-sample CSV files");

  auto* tr = app.add_subcommand("train", "train the latent-dynamics surrogate");
  tr->add_option("--dataset", dataset_path, "dataset directory")->required();
  tr->add_option("--latent", latent, "latent dimension n_s (overrides config)");
  tr->add_option("--schedule", schedule, "config file with [surrogate] and [schedule]");
  auto* seed_tr = tr->add_option("--seed", seed, "initialization seed");
  tr->add_option("--out", out, "model file")->required();

  auto* inv = app.add_subcommand("invert", "estimate parameters from one observed signal");
  inv->add_option("--model", model_path, "model file")->required();
  inv->add_option("--observed", observed, "signal CSV or <dataset-dir>:<index>")->required();
  inv->add_option("--case", kind, "case kind (defaults to the config)");
  inv->add_option("--subdiv", subdiv, "candidate subdivisions, e.g. 8,4 or 4,1,4");
  inv->add_option("--strategy", strategy, "screen | warmup");
  inv->add_option("--config", config, "config file with [inverse] options and the domain");
  inv->add_option("--dataset", dataset_dir, "dataset whose domain bounds the search");
  inv->add_option("--out", out, "output directory")->required();

  auto* ev = app.add_subcommand("eval", "surrogate metrics on a dataset split");
  ev->add_option("--model", model_path, "model file")->required();
  ev->add_option("--dataset", dataset_path, "dataset directory")->required();
  ev->add_option("--split", split, "train | val | test | all");
  ev->add_option("--out", out, "output directory")->required();

  auto* pl = app.add_subcommand("plot", "overlay signals as SVG (first file dashed)");
  pl->add_option("csv", csvs, "signal CSV files")->required();
  pl->add_option("--out", out, "SVG file")->required();

  auto* run = app.add_subcommand("run", "full pipeline: gen-dataset, train, invert, eval");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--out", out, "output directory")->required();
  run->add_flag("--force", force, "recompute even when outputs are up to date");

  auto* schema = app.add_subcommand("config-schema", "print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(config, p_text, out, save_every, mesh_out);
    if (*gen) return cmd_gen_dataset(kind, config, seed, seed_gen->count() > 0, out, jobs, csv);
    if (*tr) return cmd_train(dataset_path, latent, schedule, seed, seed_tr->count() > 0, out, jobs);
    if (*inv) return cmd_invert(model_path, observed, kind, subdiv, strategy, out, config, dataset_dir);
    if (*ev) return cmd_eval(model_path, dataset_path, split, out, jobs);
    if (*pl) {
      std::vector<fs::path> paths(csvs.begin(), csvs.end());
      cli::plot_signals(paths, out);
      return 0;
    }
    if (*run) {
      const auto cfg = cli::parse_config(config);
      const auto m = cli::run_pipeline(cfg, out, {force, jobs, log_line});
      std::fputs(cli::manifest_text(m).c_str(), stdout);
      return 0;
    }
    if (*schema) {
      std::fputs(cli::describe_schema().c_str(), stdout);
      return 0;
    }
  } catch (const ConfigError& e) {
    log_line(std::string("config error: ") + e.what());
    return 2;
  } catch (const InvalidArgument& e) {
    log_line(std::string("invalid argument: ") + e.what());
    return 2;
  } catch (const NumericFailure& e) {
    log_line(std::string("numeric failure: ") + e.what());
    return 3;
  } catch (const IoError& e) {
    log_line(std::string("I/O error: ") + e.what());
    return 4;
  } catch (const CorruptData& e) {
    log_line(std::string("corrupt data: ") + e.what());
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    log_line(std::string("I/O error: ") + e.what());
    return 4;
  }
  return 0;
}
