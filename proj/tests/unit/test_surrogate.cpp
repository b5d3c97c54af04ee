#include <fstream>
#include <iterator>

#include "ecgli/surrogate/ldnet.hpp"
#include "ecgli/surrogate/loss.hpp"
#include "ecgli/surrogate/metrics.hpp"
#include "ecgli/surrogate/optim.hpp"
#include "ecgli/surrogate/train.hpp"
#include "support.hpp"

using namespace ecgli;
using namespace ecgli::surrogate;

namespace {

dataset::Normalization unit_norm(std::size_t n_p) {
  return {Vec(n_p, -1.0), Vec(n_p, 1.0), 0.0, 1.0};
}

SurrogateModel small_model(int n_p, int n_leads, int n_t, std::uint64_t seed) {
  SurrogateShape sh;
  sh.n_p = n_p;
  sh.n_leads = n_leads;
  sh.n_s = 3;
  sh.n_t = n_t;
  sh.dyn_hidden = {5};
  sh.rec_hidden = {4, 4};
  return make_surrogate(sh, unit_norm(n_p), 0.0, 1.0, seed);
}

/// ds/dt = -s + p, y = s with a single latent state.
SurrogateModel linear_relaxation(int n_t) {
  SurrogateShape sh;
  sh.n_p = 1;
  sh.n_leads = 1;
  sh.n_s = 1;
  sh.n_t = n_t;
  sh.dyn_hidden = {};
  sh.rec_hidden = {};
  auto m = make_surrogate(sh, unit_norm(1), 0.0, 1.0, 1);
  m.theta = {-1.0, 1.0, 0.0, 1.0, 0.0};
  return m;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

TrainingBatch random_batch(const SurrogateModel& m, std::size_t n, SplitMix64& rng) {
  TrainingBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.p_norm.push_back(test::random_vec(rng, m.n_p));
    b.target.push_back(test::random_vec(rng, static_cast<std::size_t>(m.n_leads) * m.n_t));
  }
  return b;
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("mlp on hand examples") {
  const Mlp affine({2, 1});
  REQUIRE(affine.num_params() == 3);
  CHECK(mlp_forward(affine, Vec{2.0, 3.0, 1.0}, Vec{1.0, -1.0}) == Vec{0.0});
  const Mlp hidden({1, 1, 1});
  const Vec th{1.0, 0.0, 2.0, 0.5};
  CHECK(mlp_forward(hidden, th, Vec{0.3})[0] == doctest::Approx(2.0 * std::tanh(0.3) + 0.5).epsilon(1e-15));
  CHECK_THROWS_AS(Mlp({3}), InvalidArgument);
  CHECK_THROWS_AS(Mlp({3, 0}), InvalidArgument);

  const Mlp net({3, 7, 2});
  Vec a(net.num_params()), b(net.num_params());
  net.initialize(a, 5);
  net.initialize(b, 5);
  CHECK(a == b);
  const double bound = std::sqrt(6.0 / 10.0);
  for (int k = 0; k < 21; ++k) CHECK(std::abs(a[k]) <= bound);
  for (int k = 21; k < 28; ++k) CHECK(a[k] == 0.0);
}

TEST_CASE("mlp backward matches finite differences") {
  const Mlp net({3, 6, 4, 2});
  SplitMix64 rng(12);
  const Vec th = test::random_vec(rng, net.num_params());
  const Vec x = test::random_vec(rng, 3), w = test::random_vec(rng, 2);
  Mlp::Tape tape;
  net.forward(th, x, tape);
  Vec gt(net.num_params(), 0.0), gx(3);
  net.backward(th, tape, w, gt, gx);
  const double h = 1e-6;
  auto f = [&](const Vec& t, const Vec& xx) { return dot(mlp_forward(net, t, xx), w); };
  for (std::size_t k = 0; k < th.size(); ++k) {
    Vec p = th, m = th;
    p[k] += h;
    m[k] -= h;
    CHECK(test::rel_err(gt[k], (f(p, x) - f(m, x)) / (2 * h)) < 1e-6);
  }
  for (std::size_t k = 0; k < 3; ++k) {
    Vec p = x, m = x;
    p[k] += h;
    m[k] -= h;
    CHECK(test::rel_err(gx[k], (f(th, p) - f(th, m)) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("rollout of a linear relaxation follows the Euler recursion") {
  const int n_t = 11;
  const auto m = linear_relaxation(n_t);
  const double p = 0.7, dt = 0.1;
  const Vec s = latent_rollout(m, Vec{p});
  REQUIRE(s.size() == static_cast<std::size_t>(n_t));
  for (int n = 0; n < n_t; ++n) {
    CHECK(std::abs(s[n] - p * (1.0 - std::pow(1.0 - dt, n))) < 1e-12);
  }
  CHECK(forward_normalized(m, m.theta, Vec{p}) == s);
}

TEST_CASE("zero weights give zero output; forward is deterministic") {
  auto m = small_model(2, 3, 9, 4);
  const Vec zero(m.theta.size(), 0.0);
  for (double y : forward_normalized(m, zero, Vec{0.3, -0.2})) CHECK(y == 0.0);
  for (double s : latent_rollout(m, zero, Vec{0.3, -0.2})) CHECK(s == 0.0);
  CHECK(forward_normalized(m, m.theta, Vec{0.3, -0.2}) == forward_normalized(m, m.theta, Vec{0.3, -0.2}));
  CHECK(small_model(2, 3, 9, 4) == m);
  CHECK(small_model(2, 3, 9, 5).theta != m.theta);
  CHECK_THROWS_AS(forward_normalized(m, m.theta, Vec{0.3}), InvalidArgument);

  auto big = m;
  for (double& t : big.theta) t *= 1e200;
  CHECK_THROWS_AS(forward_normalized(big, big.theta, Vec{0.9, 0.9}), NumericFailure);
}

TEST_CASE("surrogate_forward applies both normalizations") {
  auto m = linear_relaxation(5);
  m.norm = {{0.0}, {4.0}, 10.0, 2.0};
  m.signal_t0 = 3.0;
  m.signal_dt = 0.5;
  const auto sig = surrogate_forward(m, Vec{3.0});  // normalized p = 0.5
  const Vec s = latent_rollout(m, Vec{0.5});
  CHECK(sig.t0 == 3.0);
  CHECK(sig.dt == 0.5);
  for (std::size_t j = 0; j < 5; ++j) CHECK(sig.values[j] == doctest::Approx(10.0 + 2.0 * s[j]).epsilon(1e-15));
}

TEST_CASE("model validation") {
  auto m = small_model(2, 1, 5, 1);
  CHECK_NOTHROW(m.validate());
  auto bad = m;
  bad.dt = 0.2;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = m;
  bad.theta.pop_back();
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = m;
  bad.theta[0] = std::nan("");
  CHECK_THROWS_AS(bad.validate(), NumericFailure);
}

TEST_CASE("loss values on hand cases") {
  pecg::PecgSignal zero{1, 4, 0.0, 1.0, {0, 0, 0, 0}};
  pecg::PecgSignal spike{1, 4, 0.0, 1.0, {1, 0, 0, 0}};
  pecg::PecgSignal alt{1, 4, 0.0, 1.0, {1, -1, 1, -1}};
  CHECK(std::abs(loss_mse(spike, zero) - 0.25) < 1e-12);
  CHECK(std::abs(loss_fft(spike, zero, 0.5) - (0.25 + 0.5)) < 1e-12);
  CHECK(std::abs(loss_fft(alt, zero, 0.5) - (1.0 + 0.5 * 16.0 / 4.0)) < 1e-12);
  CHECK(loss_fft(alt, spike, 0.0) == loss_mse(alt, spike));
  CHECK(loss_fft(alt, alt, 3.0) == 0.0);
  CHECK_THROWS_AS(loss_fft(alt, zero, -1.0), InvalidArgument);
  pecg::PecgSignal other{2, 2, 0.0, 1.0, {0, 0, 0, 0}};
  CHECK_THROWS_AS(loss_mse(alt, other), InvalidArgument);

  // Spectral energy is N times the time-domain energy.
  SplitMix64 rng(2);
  for (std::size_t n : {1u, 2u, 7u, 64u, 200u}) {
    const Vec x = test::random_vec(rng, n);
    CHECK(test::rel_err(dft_energy(x, {}), static_cast<double>(n) * dot(x, x)) < 1e-12);
  }
}

TEST_CASE("loss gradient") {
  SplitMix64 rng(7);
  const std::size_t nl = 3, nt = 10;
  const Vec pred = test::random_vec(rng, nl * nt), target = test::random_vec(rng, nl * nt);
  for (double omega : {0.0, 1e-3, 0.5}) {
    Vec g(nl * nt);
    signal_loss(pred, target, nl, nt, omega, g);
    const double h = 1e-6;
    for (std::size_t k = 0; k < g.size(); ++k) {
      Vec p = pred, m = pred;
      p[k] += h;
      m[k] -= h;
      const double fd =
          (signal_loss(p, target, nl, nt, omega, {}) - signal_loss(m, target, nl, nt, omega, {})) / (2 * h);
      CHECK(test::rel_err(g[k], fd) < 1e-6);
    }
    Vec g0(nl * nt);
    CHECK(signal_loss(target, target, nl, nt, omega, g0) == 0.0);
    for (double x : g0) CHECK(x == 0.0);
  }
}

TEST_CASE("training loss gradient: FD in theta and p, regularization") {
  SplitMix64 rng(31);
  const auto m = small_model(2, 2, 7, 9);
  const auto batch = random_batch(m, 3, rng);
  for (double alpha : {0.0, 1e-2}) {
    Vec g(m.theta.size());
    training_loss(m, m.theta, batch, alpha, 1e-3, g);
    const Vec d = test::random_vec(rng, m.theta.size());
    const double h = 1e-6;
    Vec tp = m.theta, tm = m.theta;
    for (std::size_t k = 0; k < d.size(); ++k) {
      tp[k] += h * d[k];
      tm[k] -= h * d[k];
    }
    const double fd =
        (training_loss(m, tp, batch, alpha, 1e-3, {}) - training_loss(m, tm, batch, alpha, 1e-3, {})) / (2 * h);
    CHECK(test::rel_err(dot(g, d), fd) < 1e-6);
  }

  // Zero residual: only the regularization gradient remains.
  TrainingBatch exact;
  exact.p_norm = batch.p_norm;
  for (const auto& p : batch.p_norm) exact.target.push_back(forward_normalized(m, m.theta, p));
  Vec g(m.theta.size());
  CHECK(training_loss(m, m.theta, exact, 0.0, 0.1, g) == 0.0);
  for (double x : g) CHECK(x == 0.0);
  training_loss(m, m.theta, exact, 0.25, 0.1, g);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == doctest::Approx(0.5 * m.theta[k]).epsilon(1e-14));

  // d/dp through the backward pass.
  Workspace ws;
  const Vec p = batch.p_norm[0];
  forward_record(m, m.theta, p, ws);
  Vec gout(ws.output.size());
  signal_loss(ws.output, batch.target[0], 2, 7, 0.0, gout);
  Vec gp(2);
  backward_record(m, m.theta, ws, gout, {}, gp);
  for (std::size_t k = 0; k < 2; ++k) {
    Vec a = p, b = p;
    a[k] += 1e-6;
    b[k] -= 1e-6;
    const double fd = (signal_loss(forward_normalized(m, m.theta, a), batch.target[0], 2, 7, 0.0, {}) -
                       signal_loss(forward_normalized(m, m.theta, b), batch.target[0], 2, 7, 0.0, {})) /
                      2e-6;
    CHECK(test::rel_err(gp[k], fd) < 1e-6);
  }

  Vec g1(m.theta.size()), g3(m.theta.size());
  const double l1 = training_loss(m, m.theta, batch, 0.0, 0.0, g1, 1);
  const double l3 = training_loss(m, m.theta, batch, 0.0, 0.0, g3, 3);
  CHECK(l1 == l3);
  CHECK(g1 == g3);
}

TEST_CASE("adam step") {
  Vec x{1.0, -2.0, 0.0};
  AdamMoments mo(3);
  adam_step(x, Vec{3.0, -0.5, 0.0}, mo, 0.01);
  CHECK(mo.step == 1);
  CHECK(x[0] == doctest::Approx(0.99).epsilon(1e-8));
  CHECK(x[1] == doctest::Approx(-1.99).epsilon(1e-8));
  CHECK(x[2] == 0.0);
  CHECK_THROWS_AS(adam_step(x, Vec{1.0}, mo, 0.01), InvalidArgument);

  // Minimizes a quadratic.
  Vec y{5.0, -3.0};
  AdamMoments m2(2);
  for (int k = 0; k < 3000; ++k) adam_step(y, Vec{2.0 * y[0], 8.0 * y[1]}, m2, 0.05);
  CHECK(std::abs(y[0]) < 1e-3);
  CHECK(std::abs(y[1]) < 1e-3);
}

TEST_CASE("box projection") {
  const Box box{{0.0, -1.0}, {1.0, 1.0}};
  Vec x{-0.5, 0.3};
  box.project(x);
  CHECK(x == Vec{0.0, 0.3});
  Vec again = x;
  box.project(again);
  CHECK(again == x);
  CHECK(projected_gradient_norm(Vec{0.0, 0.3}, Vec{1.0, 0.0}, box) == 0.0);
  CHECK(projected_gradient_norm(Vec{0.0, 0.3}, Vec{-1.0, 0.0}, box) == 1.0);
}

TEST_CASE("lbfgs on a quadratic, a stationary start and Rosenbrock") {
  const Vec a{1.0, 10.0, 0.1}, c{1.0, -2.0, 3.0};
  Objective quad = [&](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      f += a[i] * (x[i] - c[i]) * (x[i] - c[i]);
      g[i] = 2.0 * a[i] * (x[i] - c[i]);
    }
    return f;
  };
  LbfgsOptions o;
  o.max_epochs = 25;
  const auto r = lbfgs_refine(quad, Vec{0.0, 0.0, 0.0}, o);
  CHECK(r.f < 1e-8);
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] <= r.history[k - 1]);

  const auto s = lbfgs_refine(quad, c, o);
  CHECK(s.epochs == 0);
  CHECK(s.converged);
  CHECK(s.x == c);
  CHECK(s.history == std::vector<double>{0.0});

  Objective rosen = [](std::span<const double> x, std::span<double> g) {
    const double u = 1.0 - x[0], v = x[1] - x[0] * x[0];
    g[0] = -2.0 * u - 400.0 * x[0] * v;
    g[1] = 200.0 * v;
    return u * u + 100.0 * v * v;
  };
  LbfgsOptions ro;
  ro.max_epochs = 200;
  ro.grad_tol = 1e-12;
  const auto rr = lbfgs_refine(rosen, Vec{-1.2, 1.0}, ro);
  CHECK(rr.f < 1e-10);

  // Box-constrained: the minimizer sits on the bound.
  LbfgsOptions bo;
  bo.box = {{-5.0, -5.0, -5.0}, {0.5, 5.0, 5.0}};
  bo.max_epochs = 50;
  const auto rb = lbfgs_refine(quad, Vec{0.0, 0.0, 0.0}, bo);
  CHECK(rb.x[0] == 0.5);
  CHECK(std::abs(rb.x[1] + 2.0) < 1e-5);
}

TEST_CASE("training") {
  // Target: lead l is (l + 1) p0 t + 0.5 p1 t^2 over t in [0, 1].
  auto model = small_model(2, 2, 11, 3);
  SplitMix64 rng(17);
  auto make = [&](std::size_t n) {
    TrainingBatch b;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec p = test::random_vec(rng, 2);
      Vec y(2 * 11);
      for (int l = 0; l < 2; ++l) {
        for (int j = 0; j < 11; ++j) {
          const double t = j / 10.0;
          y[l * 11 + j] = 0.5 * ((l + 1) * p[0] * t + 0.5 * p[1] * t * t);
        }
      }
      b.p_norm.push_back(p);
      b.target.push_back(y);
    }
    return b;
  };
  const auto tb = make(16), vb = make(4);

  const auto none = train(model, tb, vb, {});
  CHECK(none.model.theta == model.theta);
  REQUIRE(none.history.size() == 1);
  CHECK(none.history[0].stage == "init");
  CHECK(none.best_epoch == 0);

  TrainSchedule sch;
  sch.adam = {{500, 1e-2}};
  sch.lbfgs_epochs = 200;
  const auto r = train(model, tb, vb, sch);
  CHECK(r.best_val_mse < 1e-4);
  CHECK(r.best_val_mse == training_loss(r.model, r.model.theta, vb, 0.0, 0.0, {}));
  bool lbfgs_monotone = true;
  for (std::size_t k = 1; k < r.history.size(); ++k) {
    if (r.history[k].stage == "lbfgs" && r.history[k - 1].stage == "lbfgs" &&
        r.history[k].train_loss > r.history[k - 1].train_loss) {
      lbfgs_monotone = false;
    }
  }
  CHECK(lbfgs_monotone);
  for (const auto& h : r.history) CHECK(h.val_mse >= r.best_val_mse);

  TrainSchedule short_sch;
  short_sch.adam = {{20, 1e-2}, {10, 1e-3}};
  short_sch.lbfgs_epochs = 5;
  const auto a = train(model, tb, vb, short_sch, 1);
  const auto b = train(model, tb, vb, short_sch, 3);
  CHECK(a.model == b.model);
  CHECK(a.history == b.history);
  CHECK(a.history[30].stage == "adam2");

  TrainSchedule bad;
  bad.adam = {{5, -1.0}};
  CHECK_THROWS_AS(train(model, tb, vb, bad), InvalidArgument);
  CHECK_THROWS_AS(train(model, tb, TrainingBatch{}, short_sch), InvalidArgument);

  const auto dir = test::scratch_dir("history");
  write_history_csv(dir / "h.csv", a.history);
  std::ifstream in(dir / "h.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,stage,train_loss,val_mse");
}

TEST_CASE("metrics") {
  const Vec t{0.0, 1.0, 2.0, 3.0};
  Vec neg = t;
  for (double& x : neg) x = -x;
  const auto perfect = compute_metrics({t}, {t}, 1, 4, 2.0);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.normalized_rmse == 0.0);
  CHECK(perfect.pearson_dissimilarity == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(compute_metrics({neg}, {t}, 1, 4, 2.0).pearson_dissimilarity == doctest::Approx(2.0).epsilon(1e-15));

  const auto hand = compute_metrics({Vec{0.0, 1.0, 2.0, 4.0}}, {t}, 1, 4, 2.0);
  CHECK(hand.mse == 0.25);
  CHECK(hand.normalized_rmse == 0.25);
  CHECK(hand.pearson_dissimilarity == doctest::Approx(1.0 - 6.5 / std::sqrt(5.0 * 8.75)).epsilon(1e-14));

  CHECK(pearson(Vec{1.0, 1.0}, Vec{2.0, 2.0}) == 1.0);
  CHECK(pearson(Vec{1.0, 1.0}, Vec{2.0, 3.0}) == 0.0);
  CHECK_THROWS_AS(compute_metrics({t}, {}, 1, 4, 2.0), InvalidArgument);
}

TEST_CASE("model file round trip and corruption") {
  const auto m = small_model(3, 2, 6, 8);
  const auto dir = test::scratch_dir("model");
  save_model(dir / "m.bin", m);
  CHECK(load_model(dir / "m.bin") == m);
  CHECK_THROWS_AS(load_model(dir / "nothing.bin"), IoError);

  std::string bytes;
  {
    std::ifstream in(dir / "m.bin", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& b) {
    std::ofstream out(dir / "bad.bin", std::ios::binary | std::ios::trunc);
    out << b;
  };
  std::string flipped = bytes;
  flipped[flipped.size() - 1] ^= 1;
  write(flipped);
  CHECK_THROWS_AS(load_model(dir / "bad.bin"), CorruptData);
  write(bytes.substr(0, 40));
  CHECK_THROWS_AS(load_model(dir / "bad.bin"), CorruptData);
  write("ECGLDSET" + bytes.substr(8));
  CHECK_THROWS_AS(load_model(dir / "bad.bin"), CorruptData);
}

}  // TEST_SUITE
