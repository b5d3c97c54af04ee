#include "ecgli/surrogate/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "ecgli/parallel.hpp"
#include "ecgli/surrogate/loss.hpp"

namespace ecgli::surrogate {

TrainingBatch make_batch(const dataset::DatasetView& view, const dataset::Normalization& norm) {
  TrainingBatch b;
  for (std::size_t i = 0; i < view.size(); ++i) {
    b.p_norm.push_back(norm.normalize_params(view[i].p));
    b.target.push_back(norm.normalize_signal(view[i].signal.values));
  }
  return b;
}

double training_loss(const SurrogateModel& model, std::span<const double> theta, const TrainingBatch& batch,
                     double alpha, double omega, std::span<double> grad, int jobs) {
  const std::size_t n = batch.size();
  if (n == 0) throw InvalidArgument("training_loss: empty batch");
  const std::size_t np = theta.size();
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != np) throw InvalidArgument("training_loss: gradient size");
  const std::size_t n_out = static_cast<std::size_t>(model.n_leads) * model.n_t;
  std::vector<double> losses(n);
  std::vector<Vec> grads(want_grad ? n : 0);
  parallel_for(n, jobs, [&](std::size_t i) {
    Workspace ws;
    forward_record(model, theta, batch.p_norm[i], ws);
    Vec gout(want_grad ? n_out : 0);
    losses[i] = signal_loss(ws.output, batch.target[i], model.n_leads, model.n_t, omega, gout);
    if (want_grad) {
      grads[i].assign(np, 0.0);
      backward_record(model, theta, ws, gout, grads[i], {});
    }
  });
  const double inv = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (double l : losses) loss += l;
  loss *= inv;
  double sq = 0.0;
  for (double t : theta) sq += t * t;
  loss += alpha * sq;
  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const Vec& g : grads) {
      for (std::size_t k = 0; k < np; ++k) grad[k] += g[k];
    }
    for (std::size_t k = 0; k < np; ++k) grad[k] = grad[k] * inv + 2.0 * alpha * theta[k];
    for (double g : grad) {
      if (!std::isfinite(g)) throw NumericFailure("training gradient is not finite");
    }
  }
  return loss;
}

void TrainSchedule::validate() const {
  for (const auto& s : adam) {
    if (s.epochs < 0) throw InvalidArgument("Adam epoch counts must be >= 0");
    if (!(s.lr > 0.0)) throw InvalidArgument("learning rates must be > 0");
  }
  if (lbfgs_epochs < 0) throw InvalidArgument("quasi-Newton epoch count must be >= 0");
  if (!(alpha >= 0.0) || !(omega >= 0.0)) throw InvalidArgument("alpha and omega must be >= 0");
}

TrainResult train(const SurrogateModel& initial, const TrainingBatch& tb, const TrainingBatch& vb,
                  const TrainSchedule& sch, int jobs, const EpochLog& log, std::vector<HistoryRow>* history_out) {
  sch.validate();
  initial.validate();
  if (tb.size() == 0) throw InvalidArgument("train: empty training split");
  if (vb.size() == 0) throw InvalidArgument("train: empty validation split");
  TrainResult r;
  r.model = initial;
  Vec theta = initial.theta;
  Vec best = theta;
  std::vector<HistoryRow>& hist = history_out ? *history_out : r.history;
  hist.clear();

  auto val_mse = [&](std::span<const double> th) { return training_loss(initial, th, vb, 0.0, 0.0, {}, jobs); };
  auto record = [&](int epoch, const std::string& stage, double loss, std::span<const double> th) {
    if (!std::isfinite(loss)) throw NumericFailure("training loss became non-finite at epoch " + std::to_string(epoch));
    HistoryRow row{epoch, stage, loss, val_mse(th)};
    hist.push_back(row);
    if (log) log(row);
    if (row.val_mse < r.best_val_mse || epoch == 0) {
      r.best_val_mse = row.val_mse;
      r.best_epoch = epoch;
      best.assign(th.begin(), th.end());
    }
  };

  Vec grad(theta.size());
  int epoch = 0;
  record(0, "init", training_loss(initial, theta, tb, sch.alpha, sch.omega, {}, jobs), theta);
  AdamMoments moments(theta.size());
  for (std::size_t s = 0; s < sch.adam.size(); ++s) {
    const std::string stage = "adam" + std::to_string(s + 1);
    for (int e = 0; e < sch.adam[s].epochs; ++e) {
      training_loss(initial, theta, tb, sch.alpha, sch.omega, grad, jobs);
      adam_step(theta, grad, moments, sch.adam[s].lr);
      record(++epoch, stage, training_loss(initial, theta, tb, sch.alpha, sch.omega, {}, jobs), theta);
    }
  }
  if (sch.lbfgs_epochs > 0) {
    LbfgsOptions opt;
    opt.max_epochs = sch.lbfgs_epochs;
    const int base = epoch;
    opt.on_epoch = [&](int k, std::span<const double> x, double f) {
      epoch = base + k;
      record(epoch, "lbfgs", f, x);
    };
    Objective obj = [&](std::span<const double> x, std::span<double> g) {
      try {
        return training_loss(initial, x, tb, sch.alpha, sch.omega, g, jobs);
      } catch (const NumericFailure&) {
        // Trial points may overflow the rollout; the line search backs off.
        return std::numeric_limits<double>::infinity();
      }
    };
    const auto res = lbfgs_refine(obj, theta, opt);
    r.lbfgs_line_search_failed = res.line_search_failed;
    theta = res.x;
  }
  r.model.theta = best;
  if (history_out) r.history = hist;
  return r;
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,stage,train_loss,val_mse\n" << std::setprecision(17);
  for (const auto& h : history) out << h.epoch << "," << h.stage << "," << h.train_loss << "," << h.val_mse << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace ecgli::surrogate
