// Acceptance checks. Each criterion prints one PASS/FAIL line; with no
// arguments every criterion runs, otherwise only the named ones.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "ecgli/cli/config.hpp"
#include "ecgli/cli/pipeline.hpp"
#include "ecgli/dataset/forward_model.hpp"
#include "ecgli/fem/assembly.hpp"
#include "ecgli/fem/quadrature.hpp"
#include "ecgli/inverse/inverse.hpp"
#include "ecgli/parallel.hpp"
#include "ecgli/pecg/pecg.hpp"
#include "ecgli/surrogate/loss.hpp"
#include "ecgli/surrogate/metrics.hpp"
#include "ecgli/surrogate/optim.hpp"
#include "ecgli/surrogate/train.hpp"

using namespace ecgli;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = ECGLI_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records one sub-check; the criterion passes only if all of them do.
  void expect(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [violated]");
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path run_dir(const std::string& name) { return fs::current_path() / "acceptance_runs" / name; }

double num(const cli::RunManifest& m, const std::string& key) {
  const auto v = m.get(key);
  if (v.empty()) throw Error("manifest lacks " + key);
  return std::stod(v);
}

// ---------------------------------------------------------------- fem

void fem_correctness(Outcome& o) {
  const double lx = 5.12, ly = 0.96;
  const auto g = fem::build_rect_grid(64, 12, lx, ly);
  const auto fibers = fem::uniform_fibers(g, {1, 0, 0});
  const auto di = fem::transverse_iso_field(g, 3.0e-3, 3.1525e-4, fibers);
  const auto de = fem::transverse_iso_field(g, 2.0e-3, 1.3514e-3, fibers);
  const auto mono = fem::monodomain_field(di, de);
  const auto a = fem::assemble_stiffness(g, mono);
  const double kernel = max_abs(a.multiply(Vec(g.num_nodes(), 1.0)));
  o.expect(kernel < 1e-10, "|A 1|_inf = " + fmt(kernel));

  double worst_mass = 0.0;
  for (bool lumped : {false, true}) {
    const auto m = fem::assemble_mass(g, lumped);
    double sum = 0.0;
    for (double v : m.values()) sum += v;
    worst_mass = std::max(worst_mass, std::abs(sum - lx * ly) / (lx * ly));
  }
  o.expect(worst_mass < 1e-9, "mass sum rel err = " + fmt(worst_mass));

  const double sl = 1.2e-3;
  const auto a_iso = fem::assemble_stiffness(g, fem::transverse_iso_field(g, sl, 0.25 * sl, fibers));
  Vec x(g.num_nodes());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.node(i)[0];
  const double patch = dot(x, a_iso.multiply(x));
  const double patch_err = std::abs(patch - sl * lx * ly) / (sl * lx * ly);
  o.expect(patch_err < 1e-9, "patch test rel err = " + fmt(patch_err));

  const auto t = fem::monodomain_tensor(di.tensors[0], de.tensors[0]);
  const double d0 = std::abs(t(0, 0) - 1.2e-3), d1 = std::abs(t(1, 1) - 2.5562e-4);
  const double off = std::abs(t(0, 1)) + std::abs(t(1, 0));
  o.expect(std::max({d0, d1, off}) < 1e-7, "harmonic mean diag(" + fmt(t(0, 0)) + ", " + fmt(t(1, 1)) + ")");
}

// ---------------------------------------------------------------- imex

Vec final_potential(double dt) {
  dataset::HfConfig c;
  c.nx = 32;
  c.ny = 8;
  c.lx = 2.56;
  c.ly = 0.64;
  c.dt = dt;
  c.t_end = 50.0;
  c.cg_tol = 1e-12;
  c.n_leads = 2;
  c.stim_radius = 0.2;
  c.stim_amplitude = 200.0;
  const dataset::ForwardModel fm(c);
  const int steps = static_cast<int>(std::lround(c.t_end / dt));
  const auto run = fm.simulate_full(Vec{0.3, 0.32}, steps);
  if (std::abs(run.trajectory.times.back() - c.t_end) > 1e-9) throw Error("final snapshot not at the horizon");
  return run.trajectory.snapshots.back();
}

void imex_convergence(Outcome& o) {
  const double dt = 0.2;
  const Vec ref = final_potential(dt / 8.0);
  const Vec coarse = final_potential(dt);
  const Vec fine = final_potential(dt / 2.0);
  Vec e1(ref.size()), e2(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    e1[i] = coarse[i] - ref[i];
    e2[i] = fine[i] - ref[i];
  }
  const double r = norm2(e1) / norm2(e2);
  // Errors are measured against a reference with its own O(dt/8) error, so
  // e(h) ~ C (h^q - (dt/8)^q); solve for q by bisection.
  auto ratio = [](double q) { return (1.0 - std::pow(8.0, -q)) / (std::pow(2.0, -q) - std::pow(8.0, -q)); };
  double lo = 0.05, hi = 4.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) < r ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  const double naive = std::log2(r);
  o.expect(q >= 0.8 && q <= 1.2, "order = " + fmt(q) + " (raw log2 ratio " + fmt(naive) + ")");
  double vmax = -1e9;
  for (double v : ref) vmax = std::max(vmax, v);
  o.expect(vmax > -30.0, "wave present at T (max v " + fmt(vmax) + " mV)");
}

// ---------------------------------------------------------------- cv

double far_edge_activation(double scale_l) {
  const int nx = 200;
  const double lx = 4.0, ly = 0.04;
  const auto g = fem::build_rect_grid(nx, 1, lx, ly);
  const auto f = fem::uniform_fibers(g, {1, 0, 0});
  const auto di = fem::transverse_iso_field(g, scale_l * 3.0e-3, 3.1525e-4, f);
  const auto de = fem::transverse_iso_field(g, scale_l * 2.0e-3, 1.3514e-3, f);
  const auto a = fem::assemble_stiffness(g, fem::monodomain_field(di, de));
  const auto m = fem::assemble_mass(g, true);
  const ionic::AlievPanfilov ap;
  monodomain::ImexSolver solver(m, a, ap, ionic::IonicParamField(ap, g.num_nodes()), {}, 0.05);
  monodomain::StimulusProtocol stim;
  stim.center = {0.0, 0.5 * ly, 0.0};
  stim.radius = 0.1;
  stim.amplitude = 200.0;
  solver.add_stimulus(monodomain::make_stimulus(g, stim));
  const std::size_t far = g.node_index(nx, 0);
  double t_act = -1.0;
  // The lengthy horizon only matters for the slow case; stop once activated.
  monodomain::SimState st = solver.resting_state();
  while (st.t < 400.0 && t_act < 0.0) {
    solver.step(st);
    if (st.v[far] > -30.0) t_act = st.t;
  }
  if (t_act < 0.0) throw Error("far edge never activated");
  return t_act;
}

void cv_scaling(Outcome& o) {
  const double t1 = far_edge_activation(1.0), t4 = far_edge_activation(4.0);
  const double ratio = t4 / t1;
  o.expect(std::abs(ratio - 0.5) <= 0.15 * 0.5,
           "far-edge activation " + fmt(t1) + " ms -> " + fmt(t4) + " ms, ratio " + fmt(ratio));
}

// ---------------------------------------------------------------- pecg

Vec oracle_transfer(const fem::StructuredGrid& g, const fem::ConductivityTensorField& di, const Point3& x,
                    double sigma_b, int sub) {
  Vec z(g.num_nodes(), 0.0);
  for (std::size_t e = 0; e < g.num_elements(); ++e) {
    const auto nodes = g.element(e);
    for (const auto& q : fem::element_quadrature_composite(g, e, sub, 2)) {
      const Point3 r{x[0] - q.x[0], x[1] - q.x[1], x[2] - q.x[2]};
      const double n3 = std::pow(dot3(r, r), 1.5);
      const Point3 k{r[0] / n3, r[1] / n3, r[2] / n3};
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        z[nodes[a]] -= q.jxw * dot3(di.tensors[e].apply(q.grad[a]), k) / (4.0 * std::numbers::pi * sigma_b);
      }
    }
  }
  return z;
}

void pecg_checks(Outcome& o) {
  const auto g = fem::build_rect_grid(16, 8, 1.6, 0.8);
  const auto di = fem::transverse_iso_field(g, 3e-3, 3.1525e-4, fem::uniform_fibers(g, {1, 0, 0}));
  const auto leads = pecg::line_leads(6, 1.6, 2.0);
  const auto transfer = pecg::lead_transfer_vectors(g, di, leads, 1.0);
  SplitMix64 rng(5);
  monodomain::Trajectory a, b, mix;
  const double alpha = 2.5, beta = -0.75;
  for (int k = 0; k < 10; ++k) {
    Vec va(g.num_nodes()), vb(g.num_nodes()), vm(g.num_nodes());
    for (std::size_t i = 0; i < va.size(); ++i) {
      va[i] = rng.uniform(-85, 25);
      vb[i] = rng.uniform(-85, 25);
      vm[i] = alpha * va[i] + beta * vb[i];
    }
    for (auto* t : {&a, &b, &mix}) t->times.push_back(k);
    a.snapshots.push_back(va);
    b.snapshots.push_back(vb);
    mix.snapshots.push_back(vm);
  }
  const auto sa = pecg::compute_pecg(a, transfer), sb = pecg::compute_pecg(b, transfer),
             sm = pecg::compute_pecg(mix, transfer);
  double lin = 0.0;
  for (std::size_t i = 0; i < sm.values.size(); ++i) {
    const double scale = std::abs(alpha * sa.values[i]) + std::abs(beta * sb.values[i]);
    lin = std::max(lin, std::abs(sm.values[i] - alpha * sa.values[i] - beta * sb.values[i]) / scale);
  }
  o.expect(lin < 1e-13, "linearity rel dev = " + fmt(lin));

  Vec sym(g.num_nodes());
  for (std::size_t i = 0; i < sym.size(); ++i) {
    const auto p = g.node(i);
    sym[i] = -80.0 + 100.0 * std::exp(-4.0 * ((p[0] - 0.8) * (p[0] - 0.8) + (p[1] - 0.4) * (p[1] - 0.4)));
  }
  const double za = dot(pecg::lead_transfer_vector(g, di, {0.3, 0.4, 1.5}, 1.0), sym);
  const double zb = dot(pecg::lead_transfer_vector(g, di, {1.3, 0.4, 1.5}, 1.0), sym);
  o.expect(std::abs(za - zb) < 1e-8, "mirror leads |diff| = " + fmt(std::abs(za - zb)));

  const auto one = fem::build_rect_grid(1, 1, 1.0, 1.0);
  const auto d1 = fem::transverse_iso_field(one, 1.0, 1.0, fem::uniform_fibers(one, {1, 0, 0}));
  double worst = 0.0;
  for (const Point3& lead : {Point3{4.0, 3.0, 5.0}, Point3{0.8, 0.3, 1.5}, Point3{-1.0, 2.0, 0.5}}) {
    const auto z = pecg::lead_transfer_vector(one, d1, lead, 1.0);
    const auto zr = oracle_transfer(one, d1, lead, 1.0, 10);
    for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(z[i] - zr[i]) / max_abs(zr));
  }
  o.expect(worst < 0.01, "single element vs 10x oracle rel err = " + fmt(worst));
}

// ---------------------------------------------------------------- gradients

double rel_vec_err(std::span<const double> a, std::span<const double> b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm2(d) / std::max({norm2(a), norm2(b), 1e-7});
}

void gradient_exactness(Outcome& o) {
  SplitMix64 rng(2024);
  double worst_theta = 0.0, worst_p = 0.0;
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    surrogate::SurrogateShape sh;
    sh.n_p = 1 + static_cast<int>(rng.next() % 3);
    sh.n_leads = 1 + static_cast<int>(rng.next() % 3);
    sh.n_s = 1 + static_cast<int>(rng.next() % 4);
    sh.n_t = 3 + static_cast<int>(rng.next() % 8);
    sh.dyn_hidden.assign(rng.next() % 3, 2 + static_cast<int>(rng.next() % 5));
    sh.rec_hidden.assign(rng.next() % 3, 2 + static_cast<int>(rng.next() % 5));
    const dataset::Normalization norm{Vec(sh.n_p, -1.0), Vec(sh.n_p, 1.0), 0.0, 1.0};
    const auto m = surrogate::make_surrogate(sh, norm, 0.0, 1.0, rng.next());
    surrogate::TrainingBatch batch;
    const std::size_t n_out = static_cast<std::size_t>(sh.n_leads) * sh.n_t;
    for (int s = 0; s < 3; ++s) {
      Vec p(sh.n_p), y(n_out);
      for (double& v : p) v = rng.uniform(-1, 1);
      for (double& v : y) v = rng.uniform(-1, 1);
      batch.p_norm.push_back(p);
      batch.target.push_back(y);
    }
    const double alpha = trial % 2 ? 1e-3 : 0.0, omega = trial % 3 ? 1e-3 : 0.0;
    Vec g(m.theta.size()), fd(m.theta.size());
    surrogate::training_loss(m, m.theta, batch, alpha, omega, g);
    for (std::size_t k = 0; k < m.theta.size(); ++k) {
      Vec tp = m.theta, tm = m.theta;
      tp[k] += h;
      tm[k] -= h;
      fd[k] = (surrogate::training_loss(m, tp, batch, alpha, omega, {}) -
               surrogate::training_loss(m, tm, batch, alpha, omega, {})) /
              (2 * h);
    }
    worst_theta = std::max(worst_theta, rel_vec_err(g, fd));

    const auto j = inverse::surrogate_misfit(m, batch.target[0]);
    const Vec q = batch.p_norm[1];
    Vec gp(sh.n_p), fp(sh.n_p), dummy(sh.n_p);
    j(q, gp);
    for (int k = 0; k < sh.n_p; ++k) {
      Vec a = q, b = q;
      a[k] += h;
      b[k] -= h;
      fp[k] = (j(a, dummy) - j(b, dummy)) / (2 * h);
    }
    worst_p = std::max(worst_p, rel_vec_err(gp, fp));
  }
  o.expect(worst_theta < 1e-5, "worst theta rel err = " + fmt(worst_theta));
  o.expect(worst_p < 1e-5, "worst p rel err = " + fmt(worst_p));
}

// ---------------------------------------------------------------- loss

void loss_identities(Outcome& o) {
  SplitMix64 rng(9);
  bool exact = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nl = 1 + rng.next() % 4, nt = 2 + rng.next() % 50;
    pecg::PecgSignal a{nl, nt, 0.0, 1.0, Vec(nl * nt)}, b = a;
    for (double& v : a.values) v = rng.uniform(-2, 2);
    for (double& v : b.values) v = rng.uniform(-2, 2);
    if (surrogate::loss_fft(a, b, 0.0) != surrogate::loss_mse(a, b)) exact = false;
  }
  o.expect(exact, "fft(omega=0) == mse bitwise over 50 random pairs");

  const pecg::PecgSignal zero{1, 4, 0.0, 1.0, {0, 0, 0, 0}};
  const pecg::PecgSignal spike{1, 4, 0.0, 1.0, {1, 0, 0, 0}};
  const pecg::PecgSignal alt{1, 4, 0.0, 1.0, {1, -1, 1, -1}};
  // |DFT|^2 sums to N sum x^2: 4 for the spike, 16 for the alternating signal.
  const double e1 = std::abs(surrogate::loss_fft(spike, zero, 1.0) - (0.25 + 1.0 * 4.0 / 4.0));
  const double e2 = std::abs(surrogate::loss_fft(alt, zero, 0.5) - (1.0 + 0.5 * 16.0 / 4.0));
  o.expect(std::max(e1, e2) < 1e-12, "N_t = 4 hand cases err = " + fmt(std::max(e1, e2)));
}

// ---------------------------------------------------------------- optimizers

void optimizer_sanity(Outcome& o) {
  SplitMix64 rng(77);
  double r[5][5], q[5][5];
  for (auto& row : r) {
    for (double& v : row) v = rng.uniform(-1, 1);
  }
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      q[i][j] = (i == j ? 1.0 : 0.0);
      for (int k = 0; k < 5; ++k) q[i][j] += r[k][i] * r[k][j];
    }
  }
  const Vec c{1.0, -2.0, 0.5, 3.0, -1.0};
  surrogate::Objective quad = [&](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (int i = 0; i < 5; ++i) {
      g[i] = 0.0;
      for (int j = 0; j < 5; ++j) g[i] += q[i][j] * (x[j] - c[j]);
      f += 0.5 * (x[i] - c[i]) * g[i];
    }
    return f;
  };
  surrogate::LbfgsOptions lo;
  lo.max_epochs = 25;
  lo.grad_tol = 0.0;
  const auto rq = surrogate::lbfgs_refine(quad, Vec(5, 0.0), lo);
  o.expect(rq.f < 1e-8 && rq.epochs <= 25,
           "quadratic f = " + fmt(rq.f) + " after " + std::to_string(rq.epochs) + " epochs");

  surrogate::Objective rosen = [](std::span<const double> x, std::span<double> g) {
    const double u = 1.0 - x[0], v = x[1] - x[0] * x[0];
    g[0] = -2.0 * u - 400.0 * x[0] * v;
    g[1] = 200.0 * v;
    return u * u + 100.0 * v * v;
  };
  surrogate::LbfgsOptions ro;
  ro.max_epochs = 500;
  ro.grad_tol = 1e-12;
  const auto rr = surrogate::lbfgs_refine(rosen, Vec{-1.2, 1.0}, ro);
  o.expect(rr.f < 1e-10, "Rosenbrock f = " + fmt(rr.f) + " after " + std::to_string(rr.epochs) + " epochs");

  const double lr = 1e-3;
  double lo_ratio = 1e9, hi_ratio = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Vec x(8, 0.0), g(8);
    for (double& v : g) v = rng.uniform(0.01, 10.0) * (rng.uniform(-1, 1) < 0 ? -1 : 1);
    surrogate::AdamMoments m(8);
    surrogate::adam_step(x, g, m, lr);
    for (double v : x) {
      lo_ratio = std::min(lo_ratio, std::abs(v) / lr);
      hi_ratio = std::max(hi_ratio, std::abs(v) / lr);
    }
  }
  o.expect(lo_ratio >= 0.999 && hi_ratio <= 1.0,
           "first Adam step / lr in [" + fmt(lo_ratio) + ", " + fmt(hi_ratio) + "]");
}

// ---------------------------------------------------------------- desk runs

cli::RunManifest desk_run(const std::string& cfg_name, const std::string& dir, Outcome& o, cli::RunConfig& cfg) {
  cfg = cli::parse_config(kSource / "configs" / cfg_name);
  cli::PipelineOptions opts;
  opts.force = true;
  opts.jobs = default_jobs();
  const auto m = cli::run_pipeline(cfg, run_dir(dir), opts);
  o.expect(m.get("status") == "complete", "status " + m.get("status"));
  o.expect(m.get("inverse.failures") == "0", "inverse failures " + m.get("inverse.failures"));
  return m;
}

void stability(const fs::path& dir, Outcome& o) {
  const auto model = surrogate::load_model(dir / "model.bin");
  const auto ds = dataset::load_dataset(dir / "dataset");
  const auto test = ds.split("test");
  double sup = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) sup = std::max(sup, surrogate::latent_sup_norm(model, test[i].p));
  o.expect(sup < 1e3, "latent sup norm " + fmt(sup));
}

void desk_2d(Outcome& o) {
  cli::RunConfig cfg;
  const auto m = desk_run("desk-2d-stimulus.cfg", "desk-2d", o, cfg);
  o.expect(cfg.hf.nx == 64 && cfg.hf.ny == 12 && cfg.sizes.n_train == 32 && cfg.sizes.n_val == 8 &&
               cfg.sizes.n_test == 16 && cfg.surrogate.n_s == 8 && cfg.schedule.lbfgs_epochs == 200 &&
               cfg.inverse.subdivisions == std::vector<int>{8, 4},
           "setup 64x12, 32/8/16, n_s 8, 8x4 candidates");
  int adam = 0;
  for (const auto& s : cfg.schedule.adam) adam += s.epochs;
  o.expect(adam == 400, "Adam epochs " + std::to_string(adam));
  const double nrmse = num(m, "eval.val.normalized_rmse");
  o.expect(nrmse < 5e-2, "val NRMSE " + fmt(nrmse));
  const double med = num(m, "inverse.median_localization_error");
  o.expect(med < 0.16, "median localization " + fmt(med) + " cm");
  const double misfit = num(m, "inverse.mean_misfit"), val = num(m, "eval.val.mse");
  o.expect(misfit < 10.0 * val, "mean misfit " + fmt(misfit) + " vs val MSE " + fmt(val));
  stability(run_dir("desk-2d"), o);
}

void desk_ischemia(Outcome& o) {
  cli::RunConfig cfg;
  const auto m = desk_run("desk-ischemia-radius.cfg", "desk-ischemia", o, cfg);
  o.expect(cfg.hf.kind == dataset::CaseKind::IschemiaRadius2d && cfg.hf.nx == 64 && cfg.hf.ny == 12 &&
               cfg.schedule.omega == 1e-3 && cfg.sizes.n_test == 16,
           "setup 64x12, p = (x, y, r), omega 1e-3, 16 test signals");
  const double rad = num(m, "inverse.median_radius_relative_error");
  o.expect(rad < 0.15, "median radius rel err " + fmt(rad));
  stability(run_dir("desk-ischemia"), o);
}

void shell_3d(Outcome& o) {
  cli::RunConfig cfg;
  desk_run("desk-3d-shell.cfg", "desk-3d", o, cfg);
  o.expect(cfg.hf.kind == dataset::CaseKind::Stimulus3d && cfg.hf.ni == 12 && cfg.hf.nj == 8 && cfg.hf.nk == 3 &&
               cfg.inverse.strategy == inverse::Strategy::Warmup,
           "setup 12x8x3 shell, warm-up strategy");
  std::map<std::string, double> angular, radial;
  std::ifstream in(run_dir("desk-3d") / "inverse" / "sweep.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string family, sub, med;
    std::getline(ss, family, ',');
    std::getline(ss, sub, ',');
    std::getline(ss, med, ',');
    (family == "angular" ? angular : radial)[sub] = std::stod(med);
  }
  if (!angular.count("1x1x1") || !angular.count("2x1x2") || !angular.count("4x1x4") || !radial.count("4x4x4")) {
    throw Error("sweep.csv lacks the expected grids");
  }
  const double a1 = angular["1x1x1"], a2 = angular["2x1x2"], a4 = angular["4x1x4"];
  // Ties up to round-off count as non-increasing.
  auto le = [](double x, double y) { return x <= y * (1.0 + 1e-6); };
  o.expect(le(a2, a1) && le(a4, a2), "angular 1x1 / 2x2 / 4x4 medians " + fmt(a1) + " / " + fmt(a2) + " / " + fmt(a4));
  const double r1 = radial["4x1x4"], r4 = radial["4x4x4"];
  const double gain = (r1 - r4) / r1;
  o.expect(gain <= 0.10, "radial 1 -> 4 median " + fmt(r1) + " -> " + fmt(r4) + " (reduction " + fmt(100 * gain) + "%)");
}

// ---------------------------------------------------------------- determinism

std::string results_without_timing(const fs::path& p) {
  std::ifstream in(p);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() > 7) cols.erase(cols.begin() + 7);  // seconds
    for (const auto& x : cols) out += x + ",";
    out += "\n";
  }
  return out;
}

void determinism(Outcome& o) {
  const auto cfg = cli::parse_config(kSource / "configs" / "smoke.cfg");
  cli::PipelineOptions a, b;
  a.force = b.force = true;
  a.jobs = 1;
  b.jobs = 4;
  const auto ma = cli::run_pipeline(cfg, run_dir("det-a"), a);
  const auto mb = cli::run_pipeline(cfg, run_dir("det-b"), b);
  for (const char* f : {"dataset/data.bin", "model.bin", "history.csv", "config.cfg"}) {
    o.expect(slurp(run_dir("det-a") / f) == slurp(run_dir("det-b") / f), std::string(f) + " identical");
  }
  o.expect(results_without_timing(run_dir("det-a") / "inverse" / "results.csv") ==
               results_without_timing(run_dir("det-b") / "inverse" / "results.csv"),
           "inverse results identical");
  o.expect(ma.get("eval.test.mse") == mb.get("eval.test.mse"), "eval metrics identical");

  const auto ds = dataset::load_dataset(run_dir("det-a") / "dataset");
  dataset::save_dataset(run_dir("det-a") / "dataset-copy", ds);
  o.expect(slurp(run_dir("det-a") / "dataset" / "data.bin") == slurp(run_dir("det-a") / "dataset-copy" / "data.bin") &&
               dataset::load_dataset(run_dir("det-a") / "dataset-copy") == ds,
           "dataset save/load bitwise");

  dataset::ForwardModel fm(cli::parse_config(kSource / "configs" / "smoke.cfg").hf);
  o.expect(fm.simulate(Vec{1.0, 0.3}) == fm.simulate(Vec{1.0, 0.3}), "simulate repeatable");
}

struct Criterion {
  std::string name;
  std::string title;
  double limit_seconds;
  std::function<void(Outcome&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"fem", "FEM correctness", 10, fem_correctness},
      {"imex", "IMEX temporal convergence", 60, imex_convergence},
      {"cv", "Conduction-velocity scaling", 120, cv_scaling},
      {"pecg", "Pseudo-ECG", 10, pecg_checks},
      {"gradients", "Gradient exactness", 60, gradient_exactness},
      {"loss", "Loss identities", 10, loss_identities},
      {"optim", "Optimizer sanity", 10, optimizer_sanity},
      {"desk-2d", "Desk-scale 2D stimulus end-to-end", 45 * 60, desk_2d},
      {"desk-ischemia", "Desk-scale variable-radius ischemia", 45 * 60, desk_ischemia},
      {"shell-3d", "3D multi-start study", 60 * 60, shell_3d},
      {"determinism", "Determinism", 600, determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (!wanted.empty() && wanted[0] == "--list") {
    for (const auto& c : criteria()) std::cout << c.name << "\n";
    return 0;
  }
  int failures = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    ++ran;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.expect(false, std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.expect(secs < c.limit_seconds, "runtime " + fmt(secs) + " s (limit " + fmt(c.limit_seconds) + " s)");
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.title << ": " << o.detail.str() << std::endl;
    if (!o.pass) ++failures;
  }
  if (ran == 0) {
    std::cerr << "no criterion matched; use --list\n";
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
