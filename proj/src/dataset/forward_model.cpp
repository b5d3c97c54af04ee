#include "ecgli/dataset/forward_model.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include "ecgli/fem/assembly.hpp"
#include "ecgli/ionic/param_field.hpp"
#include "ecgli/parallel.hpp"

namespace ecgli::dataset {

namespace {

bool is_3d(CaseKind k) { return k == CaseKind::Stimulus3d; }
bool is_ischemia(CaseKind k) { return k == CaseKind::Ischemia2d || k == CaseKind::IschemiaRadius2d; }

std::string describe(std::span<const double> p) {
  std::ostringstream s;
  s.precision(17);
  s << "p = (";
  for (std::size_t i = 0; i < p.size(); ++i) s << (i ? ", " : "") << p[i];
  s << ")";
  return s.str();
}

}  // namespace

void HfConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0)) throw InvalidArgument(std::string(key) + " must be > 0");
  };
  if (is_3d(kind)) {
    if (ni < 1 || nj < 1 || nk < 1) throw InvalidArgument("shell element counts must be >= 1");
    bounds.validate();
  } else {
    if (nx < 1 || ny < 1) throw InvalidArgument("grid element counts must be >= 1");
    positive(lx, "lx");
    positive(ly, "ly");
  }
  positive(sigma_il, "sigma_il");
  positive(sigma_it, "sigma_it");
  positive(sigma_el, "sigma_el");
  positive(sigma_et, "sigma_et");
  positive(conductivity_scale, "conductivity_scale");
  positive(membrane.chi, "chi");
  positive(membrane.cm, "cm");
  positive(stim_radius, "stim_radius");
  positive(stim_duration, "stim_duration");
  positive(dt, "dt");
  positive(t_end, "t_end");
  positive(sigma_b, "sigma_b");
  positive(ischemia_radius, "ischemia_radius");
  if (!(ischemia_radius_max >= ischemia_radius_min && ischemia_radius_min > 0.0)) {
    throw InvalidArgument("ischemia radius range is empty");
  }
  if (n_leads < 0) throw InvalidArgument("n_leads must be >= 0");
  if (n_t < 2) throw InvalidArgument("n_t must be >= 2");
}

int HfConfig::lead_count() const {
  if (n_leads > 0) return n_leads;
  return is_3d(kind) ? 23 : 24;
}

ParamBox admissible_domain(const HfConfig& cfg) {
  ParamBox box;
  if (is_3d(cfg.kind)) {
    box.lo = {cfg.bounds.theta_min, 0.0, cfg.bounds.phi_min};
    box.hi = {cfg.bounds.theta_max, 1.0, cfg.bounds.phi_max};
  } else {
    const double m = cfg.stim_radius;
    box.lo = {m, m};
    box.hi = {cfg.lx - m, cfg.ly - m};
    if (cfg.kind == CaseKind::IschemiaRadius2d) {
      box.lo.push_back(cfg.ischemia_radius_min);
      box.hi.push_back(cfg.ischemia_radius_max);
    }
  }
  box.validate();
  return box;
}

ForwardModel::ForwardModel(HfConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  model_ = ionic::make_model(cfg_.ionic_model);
  domain_ = admissible_domain(cfg_);
  std::vector<Point3> fibers;
  if (is_3d(cfg_.kind)) {
    grid_ = fem::build_ellipsoid_grid(cfg_.ni, cfg_.nj, cfg_.nk, cfg_.bounds);
    fibers = fem::circumferential_fibers(grid_);
  } else {
    grid_ = fem::build_rect_grid(cfg_.nx, cfg_.ny, cfg_.lx, cfg_.ly);
    fibers = fem::uniform_fibers(grid_, {1.0, 0.0, 0.0});
  }
  const double s = cfg_.conductivity_scale;
  const auto di = fem::transverse_iso_field(grid_, s * cfg_.sigma_il, s * cfg_.sigma_it, fibers);
  const auto de = fem::transverse_iso_field(grid_, s * cfg_.sigma_el, s * cfg_.sigma_et, fibers);
  mass_ = fem::assemble_mass(grid_, cfg_.lumped_mass);
  stiffness_ = fem::assemble_stiffness(grid_, fem::monodomain_field(di, de));
  if (is_3d(cfg_.kind)) {
    const auto [lo, hi] = grid_.bounding_box();
    const Point3 c{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])};
    leads_ = pecg::sphere_leads(cfg_.lead_count(), c, cfg_.lead_sphere_radius);
  } else {
    leads_ = pecg::line_leads(cfg_.lead_count(), cfg_.lx, cfg_.lead_height, cfg_.lead_y);
  }
  leads_.sigma_b = cfg_.sigma_b;
  leads_.validate(grid_);
  transfer_ = pecg::lead_transfer_vectors(grid_, di, leads_);
}

Point3 ForwardModel::center_of(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != parameter_count(cfg_.kind)) {
    throw InvalidArgument("parameter vector has the wrong dimension for " + to_string(cfg_.kind));
  }
  if (is_3d(cfg_.kind)) return fem::ellipsoid_map(p[1], p[0], p[2], cfg_.bounds);
  return {p[0], p[1], 0.0};
}

monodomain::ImexSolver ForwardModel::make_solver(std::span<const double> p) const {
  if (!domain_.contains(p, 1e-12)) throw InvalidArgument("parameters outside the admissible domain: " + describe(p));
  ionic::IonicParamField field(*model_, grid_.num_nodes());
  for (const auto& [name, value] : cfg_.ionic_overrides) {
    const int k = field.index_of(name);
    for (std::size_t i = 0; i < grid_.num_nodes(); ++i) field.node(i)[k] = value;
  }
  monodomain::StimulusProtocol stim;
  stim.radius = cfg_.stim_radius;
  stim.amplitude = cfg_.stim_amplitude;
  stim.duration = cfg_.stim_duration;
  stim.edge_width = cfg_.stim_edge;
  if (is_ischemia(cfg_.kind)) {
    ionic::IschemiaRegion region;
    region.center = center_of(p);
    region.radius = cfg_.kind == CaseKind::IschemiaRadius2d ? p[2] : cfg_.ischemia_radius;
    region.overrides = cfg_.ischemia_overrides.empty() ? ionic::default_ischemia_overrides() : cfg_.ischemia_overrides;
    region.smoothing_width = cfg_.ischemia_smoothing;
    field = ionic::apply_ischemia(field, region, grid_);
    stim.center = cfg_.stimulus_center;
  } else {
    stim.center = center_of(p);
  }
  field.validate(*model_);
  monodomain::ImexSolver solver(mass_, stiffness_, *model_, std::move(field), cfg_.membrane, cfg_.dt, cfg_.cg_tol);
  solver.add_stimulus(monodomain::make_stimulus(grid_, stim));
  return solver;
}

ForwardModel::FullRun ForwardModel::simulate_full(std::span<const double> p, int save_every) const {
  auto solver = make_solver(p);
  pecg::PecgRecorder rec(transfer_);
  FullRun out;
  long step = 0;
  try {
    monodomain::run_simulation(solver, solver.resting_state(), cfg_.t_end, 1,
                               [&](double t, std::span<const double> v) {
                                 rec.record(t, v);
                                 if (save_every > 0 && step % save_every == 0) {
                                   out.trajectory.times.push_back(t);
                                   out.trajectory.snapshots.emplace_back(v.begin(), v.end());
                                 }
                                 ++step;
                               });
  } catch (const NumericFailure& e) {
    throw NumericFailure(std::string(e.what()) + " [" + describe(p) + "]");
  }
  out.signal = rec.finish();
  out.signal.validate();
  return out;
}

pecg::PecgSignal ForwardModel::simulate(std::span<const double> p) const {
  return resample_signal(simulate_full(p, 0).signal, cfg_.n_t, cfg_.t_end);
}

pecg::PecgSignal resample_signal(const pecg::PecgSignal& s, std::size_t n_t, double t_end) {
  if (n_t < 2) throw InvalidArgument("resample: n_t must be >= 2");
  if (s.n_t < 2 || !(s.dt > 0.0)) throw InvalidArgument("resample: source signal needs >= 2 samples");
  pecg::PecgSignal out;
  out.n_leads = s.n_leads;
  out.n_t = n_t;
  out.t0 = s.t0;
  out.dt = (t_end - s.t0) / static_cast<double>(n_t - 1);
  out.values.resize(s.n_leads * n_t);
  const double last = static_cast<double>(s.n_t - 1);
  for (std::size_t j = 0; j < n_t; ++j) {
    const double u = std::clamp((out.time(j) - s.t0) / s.dt, 0.0, last);
    const std::size_t k = std::min(static_cast<std::size_t>(u), s.n_t - 2);
    const double w = u - static_cast<double>(k);
    for (std::size_t l = 0; l < s.n_leads; ++l) {
      out.at(l, j) = (1.0 - w) * s.at(l, k) + w * s.at(l, k + 1);
    }
  }
  return out;
}

Dataset generate_dataset(const HfConfig& cfg, const SplitSizes& sizes, std::uint64_t seed, int jobs,
                         const std::string& config_hash, const ProgressFn& progress) {
  if (sizes.n_train < 1) throw InvalidArgument("dataset needs at least one training sample");
  const ForwardModel fm(cfg);
  const auto params = sample_parameters(cfg.kind, fm.domain(), sizes.total(), seed);
  Dataset ds;
  ds.kind = cfg.kind;
  ds.domain = fm.domain();
  ds.n_train = sizes.n_train;
  ds.n_val = sizes.n_val;
  ds.n_test = sizes.n_test;
  ds.seed = seed;
  ds.config_hash = config_hash;
  ds.samples.resize(sizes.total());
  std::mutex mutex;
  std::size_t done = 0;
  parallel_for(sizes.total(), jobs, [&](std::size_t i) {
    Sample s{params[i].p, fm.simulate(params[i].p)};
    ds.samples[i] = std::move(s);
    if (progress) {
      std::lock_guard<std::mutex> lock(mutex);
      progress(++done, sizes.total());
    }
  });
  std::vector<Vec> train_p;
  std::vector<const Vec*> train_s;
  for (std::size_t i = 0; i < ds.n_train; ++i) {
    train_p.push_back(ds.samples[i].p);
    train_s.push_back(&ds.samples[i].signal.values);
  }
  ds.norm = fit_normalization(train_p, train_s);
  ds.validate();
  return ds;
}

}  // namespace ecgli::dataset
