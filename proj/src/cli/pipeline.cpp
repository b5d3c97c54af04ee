#include "ecgli/cli/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>

namespace ecgli::cli {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

dataset::Dataset stage_gen_dataset(const RunConfig& cfg, const std::filesystem::path& dir, int jobs,
                                   const Logger& log) {
  auto ds = dataset::generate_dataset(cfg.hf, cfg.sizes, cfg.dataset_seed, jobs, config_hash(cfg),
                                      [&](std::size_t done, std::size_t total) {
                                        if (log && (done == total || done % 8 == 0)) {
                                          log("simulated " + std::to_string(done) + "/" + std::to_string(total));
                                        }
                                      });
  dataset::save_dataset(dir, ds);
  return ds;
}

surrogate::TrainResult stage_train(const RunConfig& cfg, const dataset::Dataset& ds, int jobs, const Logger& log) {
  surrogate::SurrogateShape shape;
  shape.n_p = static_cast<int>(ds.domain.dim());
  shape.n_leads = static_cast<int>(ds.n_leads());
  shape.n_s = cfg.surrogate.n_s;
  shape.n_t = static_cast<int>(ds.n_t());
  shape.dyn_hidden = cfg.surrogate.dyn_hidden;
  shape.rec_hidden = cfg.surrogate.rec_hidden;
  shape.dt = cfg.surrogate.dt;
  const auto& s0 = ds.samples.front().signal;
  const auto model = surrogate::make_surrogate(shape, ds.norm, s0.t0, s0.dt, cfg.surrogate.seed);
  const auto tb = surrogate::make_batch(ds.split("train"), ds.norm);
  const auto vb = surrogate::make_batch(ds.split("val"), ds.norm);
  surrogate::EpochLog elog;
  if (log) {
    elog = [&](const surrogate::HistoryRow& r) {
      if (r.epoch % 50 == 0) {
        log("epoch " + std::to_string(r.epoch) + " " + r.stage + " loss " + g17(r.train_loss) + " val " + g17(r.val_mse));
      }
    };
  }
  return surrogate::train(model, tb, vb, cfg.schedule, jobs, elog);
}

void write_inverse_csv(const std::filesystem::path& path, const inverse::InverseBatchStats& st) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "index,p_true,p_hat,misfit,screening_misfit,localization_error,radius_relative_error,seconds,status\n";
  auto vec = [](const Vec& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + g17(v[i]);
    return s;
  };
  for (const auto& s : st.samples) {
    out << s.index << "," << vec(s.p_true) << "," << vec(s.p_hat) << "," << g17(s.misfit) << ","
        << g17(s.screening_misfit) << "," << g17(s.localization_error) << ","
        << (s.radius_relative_error ? g17(*s.radius_relative_error) : "") << "," << g17(s.wall_seconds) << ","
        << (s.failed ? "failed: " + s.error : "ok") << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<inverse::TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "iteration,stage,misfit,p\n";
  for (const auto& r : trace) {
    out << r.iteration << "," << r.stage << "," << g17(r.misfit) << ",";
    for (std::size_t i = 0; i < r.p.size(); ++i) out << (i ? ";" : "") << g17(r.p[i]);
    out << "\n";
  }
}

void record_stats(RunManifest& m, const std::string& prefix, const inverse::InverseBatchStats& st) {
  m.set(prefix + ".min_misfit", st.min_misfit);
  m.set(prefix + ".mean_misfit", st.mean_misfit);
  m.set(prefix + ".std_misfit", st.std_misfit);
  m.set(prefix + ".mean_seconds", st.mean_seconds);
  m.set(prefix + ".median_localization_error", st.median_localization_error);
  m.set(prefix + ".mean_localization_error", st.mean_localization_error);
  m.set(prefix + ".localization_mse", st.localization_mse);
  if (st.median_radius_relative_error) m.set(prefix + ".median_radius_relative_error", *st.median_radius_relative_error);
  m.set(prefix + ".failures", std::to_string(st.failures));
}

void record_metrics(RunManifest& m, const std::string& prefix, const surrogate::Metrics& mt) {
  m.set(prefix + ".mse", mt.mse);
  m.set(prefix + ".normalized_rmse", mt.normalized_rmse);
  m.set(prefix + ".pearson_dissimilarity", mt.pearson_dissimilarity);
}

RunManifest run_pipeline(const RunConfig& cfg, const std::filesystem::path& out, const PipelineOptions& opts) {
  cfg.validate();
  const auto manifest_path = out / "manifest.txt";
  const std::string hash = config_hash(cfg);
  if (!opts.force && std::filesystem::exists(manifest_path)) {
    auto old = read_manifest(manifest_path);
    if (old.get("status") == "complete" && old.get("config_hash") == hash) {
      if (opts.log) opts.log("outputs up to date, nothing to do (use --force to rerun)");
      return old;
    }
  }
  std::filesystem::create_directories(out);
  {
    std::ofstream c(out / "config.cfg");
    c << serialize_config(cfg);
  }
  RunManifest m;
  m.set("version", kVersion);
  m.set("config_hash", hash);
  m.set("seed", std::to_string(cfg.dataset_seed));
  m.set("surrogate_seed", std::to_string(cfg.surrogate.seed));
  m.set("case", dataset::to_string(cfg.hf.kind));
  m.set("status", "running");
  std::string stage;
  const auto total = std::chrono::steady_clock::now();
  try {
    stage = "gen-dataset";
    auto t0 = std::chrono::steady_clock::now();
    if (opts.log) opts.log("stage gen-dataset");
    const auto ds = stage_gen_dataset(cfg, out / "dataset", opts.jobs, opts.log);
    m.set("dataset", "dataset");
    m.set("dataset_hash", file_hash(out / "dataset" / "data.bin"));
    m.set("time.gen_dataset", seconds_since(t0));

    stage = "train";
    t0 = std::chrono::steady_clock::now();
    if (opts.log) opts.log("stage train");
    const auto tr = stage_train(cfg, ds, opts.jobs, opts.log);
    surrogate::save_model(out / "model.bin", tr.model);
    surrogate::write_history_csv(out / "history.csv", tr.history);
    m.set("model", "model.bin");
    m.set("model_hash", file_hash(out / "model.bin"));
    m.set("history", "history.csv");
    m.set("train.best_epoch", std::to_string(tr.best_epoch));
    m.set("train.best_val_mse", tr.best_val_mse);
    m.set("train.lbfgs_line_search_failed", tr.lbfgs_line_search_failed ? "true" : "false");
    m.set("time.train", seconds_since(t0));

    stage = "invert";
    t0 = std::chrono::steady_clock::now();
    if (opts.log) opts.log("stage invert");
    auto bo = cfg.inverse;
    bo.jobs = opts.jobs;
    const auto st = inverse::invert_batch(tr.model, ds.split("test"), bo, cfg.hf.bounds);
    std::filesystem::create_directories(out / "inverse");
    write_inverse_csv(out / "inverse" / "results.csv", st);
    record_stats(m, "inverse", st);
    m.set("inverse_results", "inverse/results.csv");
    m.set("time.invert", seconds_since(t0));

    if (!cfg.radial_sweep.empty() || !cfg.angular_sweep.empty()) {
      std::ofstream sw(out / "inverse" / "sweep.csv");
      sw << "family,subdivisions,median_localization_error,localization_mse\n";
      // Both families share the base grid; it is inverted only once.
      std::map<std::string, inverse::InverseBatchStats> done;
      auto run = [&](const char* family, std::vector<int> sub) {
        std::string name;
        for (std::size_t i = 0; i < sub.size(); ++i) name += (i ? "x" : "") + std::to_string(sub[i]);
        auto it = done.find(name);
        if (it == done.end()) {
          auto o = bo;
          o.subdivisions = sub;
          it = done.emplace(name, inverse::invert_batch(tr.model, ds.split("test"), o, cfg.hf.bounds)).first;
          record_stats(m, "sweep." + name, it->second);
        }
        sw << family << "," << name << "," << g17(it->second.median_localization_error) << ","
           << g17(it->second.localization_mse) << "\n";
      };
      for (int a : cfg.angular_sweep) run("angular", {a, cfg.inverse.subdivisions[1], a});
      for (int r : cfg.radial_sweep) run("radial", {cfg.inverse.subdivisions[0], r, cfg.inverse.subdivisions[2]});
      m.set("inverse_sweep", "inverse/sweep.csv");
    }

    stage = "eval";
    t0 = std::chrono::steady_clock::now();
    if (opts.log) opts.log("stage eval");
    record_metrics(m, "eval.val", surrogate::evaluate(tr.model, ds.split("val"), opts.jobs));
    record_metrics(m, "eval.test", surrogate::evaluate(tr.model, ds.split("test"), opts.jobs));
    m.set("time.eval", seconds_since(t0));
  } catch (const std::exception& e) {
    m.set("status", "failed");
    m.set("failed_stage", stage);
    m.set("error", e.what());
    write_manifest(manifest_path, m);
    throw;
  }
  m.set("time.total", seconds_since(total));
  m.set("status", "complete");
  write_manifest(manifest_path, m);
  return m;
}

}  // namespace ecgli::cli
