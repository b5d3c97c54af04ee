#include "ecgli/inverse/inverse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ecgli/parallel.hpp"
#include "ecgli/surrogate/loss.hpp"
#include "ecgli/surrogate/optim.hpp"

namespace ecgli::inverse {

using dataset::ParamBox;
using surrogate::AdamMoments;

CandidateGrid partition_candidates(const ParamBox& box, const std::vector<int>& subdivisions) {
  box.validate();
  if (subdivisions.size() != box.dim()) throw InvalidArgument("subdivisions must give one count per parameter");
  for (int s : subdivisions) {
    if (s < 1) throw InvalidArgument("subdivision counts must be >= 1");
  }
  CandidateGrid g;
  g.subdivisions = subdivisions;
  const std::size_t d = box.dim();
  std::vector<int> idx(d, 0);
  while (true) {
    Vec p(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double w = (box.hi[k] - box.lo[k]) / subdivisions[k];
      p[k] = box.lo[k] + (idx[k] + 0.5) * w;
    }
    g.points.push_back(std::move(p));
    std::size_t k = d;
    while (k-- > 0) {
      if (++idx[k] < subdivisions[k]) break;
      idx[k] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) break;
  }
  return g;
}

Vec project(std::span<const double> p, const ParamBox& box) {
  if (p.size() != box.dim()) throw InvalidArgument("project: dimension mismatch");
  Vec q(p.begin(), p.end());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = std::clamp(q[k], box.lo[k], box.hi[k]);
  return q;
}

ScreenResult screen(const Misfit& j, const CandidateGrid& c) {
  if (c.points.empty()) throw InvalidArgument("screen: no candidates");
  ScreenResult best;
  Vec g;
  for (std::size_t i = 0; i < c.size(); ++i) {
    g.assign(c.points[i].size(), 0.0);
    const double m = j(c.points[i], g);
    if (i == 0 || m < best.misfit) best = {i, c.points[i], m};
  }
  return best;
}

namespace {

/// Projected Adam from p; returns the final point and misfit.
std::pair<Vec, double> projected_adam(const Misfit& j, const ParamBox& box, Vec p, int iterations, double lr,
                                      std::vector<TraceRow>* trace, const std::string& stage, int& counter) {
  Vec g(p.size(), 0.0);
  AdamMoments mo(p.size());
  double f = j(p, g);
  for (int k = 0; k < iterations; ++k) {
    surrogate::adam_step(p, g, mo, lr);
    p = project(p, box);
    std::fill(g.begin(), g.end(), 0.0);
    f = j(p, g);
    if (trace) trace->push_back({++counter, stage, p, f});
  }
  return {p, f};
}

}  // namespace

ScreenResult screen_with_warmup(const Misfit& j, const CandidateGrid& c, const ParamBox& box, int n_adam, double lr) {
  if (n_adam < 0) throw InvalidArgument("warm-up iteration count must be >= 0");
  if (n_adam == 0) return screen(j, c);
  if (c.points.empty()) throw InvalidArgument("screen: no candidates");
  ScreenResult best;
  for (std::size_t i = 0; i < c.size(); ++i) {
    int counter = 0;
    auto [p, f] = projected_adam(j, box, c.points[i], n_adam, lr, nullptr, "warmup", counter);
    if (i == 0 || f < best.misfit) best = {i, p, f};
  }
  return best;
}

InverseResult invert(const Misfit& j, const ParamBox& box, std::span<const double> p0, const InverseOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  if (!box.contains(p0, 1e-12)) throw InvalidArgument("invert: starting point outside the domain");
  InverseResult r;
  Vec p = project(p0, box);
  Vec g(p.size(), 0.0);
  const double f0 = j(p, g);
  if (!std::isfinite(f0)) throw NumericFailure("invert: misfit not finite at the starting point");
  r.trace.push_back({0, "start", p, f0});
  int counter = 0;
  for (std::size_t s = 0; s < opts.adam.size(); ++s) {
    p = projected_adam(j, box, p, opts.adam[s].epochs, opts.adam[s].lr, &r.trace, "adam" + std::to_string(s + 1),
                       counter)
            .first;
  }
  if (opts.lbfgs_epochs > 0) {
    surrogate::LbfgsOptions lo;
    lo.max_epochs = opts.lbfgs_epochs;
    lo.box = {box.lo, box.hi};
    lo.on_epoch = [&](int, std::span<const double> x, double f) {
      r.trace.push_back({++counter, "lbfgs", Vec(x.begin(), x.end()), f});
    };
    surrogate::Objective obj = [&](std::span<const double> x, std::span<double> gx) {
      std::fill(gx.begin(), gx.end(), 0.0);
      return j(x, gx);
    };
    lbfgs_refine(obj, p, lo);
  }
  for (const auto& row : r.trace) {
    if (!std::isfinite(row.misfit)) {
      throw NumericFailure("invert: non-finite misfit at iteration " + std::to_string(row.iteration) + " of " +
                           std::to_string(r.trace.size()));
    }
  }
  const auto it = std::min_element(r.trace.begin(), r.trace.end(),
                                   [](const TraceRow& a, const TraceRow& b) { return a.misfit < b.misfit; });
  r.p_hat = it->p;
  r.misfit = it->misfit;
  r.screening = {0, r.trace.front().p, r.trace.front().misfit};
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Misfit surrogate_misfit(const surrogate::SurrogateModel& model, Vec observed_norm) {
  const std::size_t n_out = static_cast<std::size_t>(model.n_leads) * model.n_t;
  if (observed_norm.size() != n_out) throw InvalidArgument("observation shape does not match the surrogate");
  return [&model, obs = std::move(observed_norm), n_out](std::span<const double> q, std::span<double> grad) {
    surrogate::Workspace ws;
    try {
      surrogate::forward_record(model, model.theta, q, ws);
    } catch (const NumericFailure&) {
      return std::numeric_limits<double>::infinity();
    }
    Vec gout(grad.empty() ? 0 : n_out);
    const double f = surrogate::signal_loss(ws.output, obs, model.n_leads, model.n_t, 0.0, gout);
    if (!grad.empty()) surrogate::backward_record(model, model.theta, ws, gout, {}, grad);
    return f;
  };
}

Strategy parse_strategy(const std::string& name) {
  if (name == "screen") return Strategy::Screen;
  if (name == "warmup") return Strategy::Warmup;
  throw InvalidArgument("unknown strategy '" + name + "' (expected screen or warmup)");
}

std::string to_string(Strategy s) { return s == Strategy::Screen ? "screen" : "warmup"; }

std::function<Point3(std::span<const double>)> center_map(dataset::CaseKind kind, const fem::EllipsoidBounds& bounds) {
  if (kind == dataset::CaseKind::Stimulus3d) {
    return [bounds](std::span<const double> p) {
      return fem::ellipsoid_map(std::clamp(p[1], 0.0, 1.0), p[0], p[2], bounds);
    };
  }
  return [](std::span<const double> p) { return Point3{p[0], p[1], 0.0}; };
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

InverseBatchStats summarize(std::vector<SampleOutcome> samples) {
  InverseBatchStats st;
  std::vector<double> misfits, loc, rad;
  double secs = 0.0;
  for (const auto& s : samples) {
    if (s.failed) {
      ++st.failures;
      continue;
    }
    misfits.push_back(s.misfit);
    loc.push_back(s.localization_error);
    if (s.radius_relative_error) rad.push_back(*s.radius_relative_error);
    secs += s.wall_seconds;
  }
  st.samples = std::move(samples);
  if (misfits.empty()) return st;
  const double n = static_cast<double>(misfits.size());
  st.min_misfit = *std::min_element(misfits.begin(), misfits.end());
  for (double m : misfits) st.mean_misfit += m / n;
  for (double m : misfits) st.std_misfit += (m - st.mean_misfit) * (m - st.mean_misfit) / n;
  st.std_misfit = std::sqrt(st.std_misfit);
  st.mean_seconds = secs / n;
  for (double e : loc) {
    st.mean_localization_error += e / n;
    st.localization_mse += e * e / n;
  }
  st.median_localization_error = median(loc);
  if (!rad.empty()) st.median_radius_relative_error = median(rad);
  return st;
}

InverseBatchStats invert_batch(const surrogate::SurrogateModel& model, const dataset::DatasetView& split,
                               const BatchOptions& opts, const fem::EllipsoidBounds& bounds) {
  if (split.empty()) throw InvalidArgument("invert_batch: empty split");
  const auto& ds = split.dataset();
  const auto& norm = model.norm;
  // Search box: the admissible domain in normalized coordinates.
  ParamBox qbox{norm.normalize_params(ds.domain.lo), norm.normalize_params(ds.domain.hi)};
  const auto candidates = partition_candidates(qbox, opts.subdivisions);
  const auto to_cart = center_map(ds.kind, bounds);
  std::vector<SampleOutcome> out(split.size());
  parallel_for(split.size(), opts.jobs, [&](std::size_t i) {
    SampleOutcome& o = out[i];
    o.index = split.offset() + i;
    o.p_true = split[i].p;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Misfit j = surrogate_misfit(model, norm.normalize_signal(split[i].signal.values));
      const ScreenResult sr = opts.strategy == Strategy::Warmup
                                  ? screen_with_warmup(j, candidates, qbox, opts.warmup_iterations, opts.warmup_lr)
                                  : screen(j, candidates);
      InverseResult r = invert(j, qbox, sr.p, opts.inverse);
      o.p_hat = norm.denormalize_params(r.p_hat);
      o.misfit = r.misfit;
      o.screening_misfit = sr.misfit;
      for (auto& row : r.trace) row.p = norm.denormalize_params(row.p);
      o.trace = std::move(r.trace);
      o.localization_error = distance(to_cart(o.p_hat), to_cart(o.p_true));
      if (ds.kind == dataset::CaseKind::IschemiaRadius2d) {
        o.radius_relative_error = std::abs(o.p_hat[2] - o.p_true[2]) / o.p_true[2];
      }
    } catch (const Error& e) {
      o.failed = true;
      o.error = e.what();
    }
    o.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  return summarize(std::move(out));
}

}  // namespace ecgli::inverse
