#include <numbers>
#include <sstream>

#include "ecgli/fem/assembly.hpp"
#include "ecgli/fem/quadrature.hpp"
#include "ecgli/pecg/pecg.hpp"
#include "support.hpp"

using namespace ecgli;
using namespace ecgli::pecg;

namespace {

/// Transfer vector by composite quadrature (sub x sub cells, 2 points each).
Vec oracle_transfer(const fem::StructuredGrid& g, const fem::ConductivityTensorField& di, const Point3& x,
                    double sigma_b, int sub) {
  Vec z(g.num_nodes(), 0.0);
  for (std::size_t e = 0; e < g.num_elements(); ++e) {
    const auto& d = di.tensors[e];
    const auto nodes = g.element(e);
    for (const auto& q : fem::element_quadrature_composite(g, e, sub, 2)) {
      const Point3 r{x[0] - q.x[0], x[1] - q.x[1], x[2] - q.x[2]};
      const double n = std::sqrt(dot3(r, r));
      const Point3 k{r[0] / (n * n * n), r[1] / (n * n * n), r[2] / (n * n * n)};
      for (std::size_t a = 0; a < nodes.size(); ++a) {
        z[nodes[a]] -= q.jxw * dot3(d.apply(q.grad[a]), k) / (4.0 * std::numbers::pi * sigma_b);
      }
    }
  }
  return z;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

fem::ConductivityTensorField field(const fem::StructuredGrid& g) {
  return fem::transverse_iso_field(g, 3e-3, 3.1525e-4, fem::uniform_fibers(g, {1, 0, 0}));
}

}  // namespace

TEST_SUITE("pecg") {

TEST_CASE("constant potential is invisible") {
  const auto g = fem::build_rect_grid(10, 4, 2.0, 0.8);
  const auto z = lead_transfer_vector(g, field(g), {1.0, 0.0, 2.0}, 1.0);
  double l1 = 0.0;
  for (double x : z) l1 += std::abs(x);
  CHECK(std::abs(dot(z, Vec(z.size(), -80.0))) < 1e-9 * l1 * 80.0);
}

TEST_CASE("mirror leads read a symmetric field equally") {
  const auto g = fem::build_rect_grid(12, 6, 2.4, 1.2);
  Vec v(g.num_nodes());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = g.node(i);
    v[i] = std::exp(-((p[0] - 1.2) * (p[0] - 1.2) + (p[1] - 0.6) * (p[1] - 0.6)));
  }
  const auto f = field(g);
  const auto za = lead_transfer_vector(g, f, {0.3, 0.6, 1.5}, 1.0);
  const auto zb = lead_transfer_vector(g, f, {2.1, 0.6, 1.5}, 1.0);
  CHECK(std::abs(dot(za, v) - dot(zb, v)) < 1e-8);
  CHECK(std::abs(dot(za, v)) > 1e-6);
}

TEST_CASE("single element against a refined quadrature") {
  const auto g = fem::build_rect_grid(1, 1, 1.0, 1.0);
  const auto f = fem::transverse_iso_field(g, 1.0, 1.0, fem::uniform_fibers(g, {1, 0, 0}));
  const Point3 lead{4.0, 3.0, 5.0};
  const Vec v{0.3, -1.0, 2.0, 0.7};
  const double got = dot(lead_transfer_vector(g, f, lead, 1.0), v);
  const double ref = dot(oracle_transfer(g, f, lead, 1.0, 20), v);
  CHECK(test::rel_err(got, ref) < 0.01);
}

TEST_CASE("quadrature order refinement changes little") {
  const auto g = fem::build_rect_grid(8, 4, 1.6, 0.8);
  Vec v(g.num_nodes());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(g.node(i)[0]) * std::cos(g.node(i)[1]);
  const auto f = field(g);
  const Point3 lead{0.8, -0.5, 1.0};
  const double z2 = dot(lead_transfer_vector(g, f, lead, 1.0, 2), v);
  const double z3 = dot(lead_transfer_vector(g, f, lead, 1.0, 3), v);
  CHECK(test::rel_err(z2, z3) < 0.01);
}

TEST_CASE("transfer vectors are deterministic and leads must be outside") {
  const auto g = fem::build_rect_grid(6, 3, 1.2, 0.6);
  const auto f = field(g);
  CHECK(lead_transfer_vector(g, f, {0.5, 0.0, 2.0}, 1.0) == lead_transfer_vector(g, f, {0.5, 0.0, 2.0}, 1.0));
  CHECK_THROWS_AS(lead_transfer_vector(g, f, {0.5, 0.3, 0.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(lead_transfer_vector(g, f, {0.5, 0.3, 2.0}, 0.0), InvalidArgument);
  LeadSet inside{{{0.5, 0.3, 0.0}}, 1.0};
  CHECK_THROWS_AS(inside.validate(g), InvalidArgument);
}

TEST_CASE("compute_pecg: baseline and linearity") {
  const auto g = fem::build_rect_grid(6, 3, 1.2, 0.6);
  const auto transfer = lead_transfer_vectors(g, field(g), line_leads(3, 1.2, 2.0), 1.0);
  SplitMix64 rng(4);
  monodomain::Trajectory rest, a, b, mix;
  for (int k = 0; k < 5; ++k) {
    const double t = 0.5 * k;
    const Vec va = test::random_vec(rng, g.num_nodes(), -80, 20), vb = test::random_vec(rng, g.num_nodes(), -80, 20);
    Vec vm(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) vm[i] = 3.0 * va[i] - 0.5 * vb[i];
    for (auto* tr : {&rest, &a, &b, &mix}) tr->times.push_back(t);
    rest.snapshots.push_back(Vec(g.num_nodes(), -80.0));
    a.snapshots.push_back(va);
    b.snapshots.push_back(vb);
    mix.snapshots.push_back(vm);
  }
  const auto s0 = compute_pecg(rest, transfer);
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(s0.at(l, j) == s0.at(l, 0));
  }
  const auto sa = compute_pecg(a, transfer), sb = compute_pecg(b, transfer), sm = compute_pecg(mix, transfer);
  for (std::size_t i = 0; i < sm.values.size(); ++i) {
    const double lin = 3.0 * sa.values[i] - 0.5 * sb.values[i];
    CHECK(std::abs(sm.values[i] - lin) <= 1e-13 * (std::abs(3.0 * sa.values[i]) + std::abs(0.5 * sb.values[i])));
  }
  // Power-of-two scaling is exact.
  monodomain::Trajectory twice = a;
  for (auto& v : twice.snapshots) {
    for (double& x : v) x *= 2.0;
  }
  const auto s2 = compute_pecg(twice, transfer);
  for (std::size_t i = 0; i < s2.values.size(); ++i) CHECK(s2.values[i] == 2.0 * sa.values[i]);

  monodomain::Trajectory bad = a;
  bad.snapshots[0].pop_back();
  CHECK_THROWS_AS(compute_pecg(bad, transfer), InvalidArgument);
}

TEST_CASE("wave approaching a lead gives a positive deflection") {
  const int nx = 40;
  const double lx = 2.0, ly = 0.2;
  const auto g = fem::build_rect_grid(nx, 2, lx, ly);
  const auto di = field(g);
  const auto de = fem::transverse_iso_field(g, 2e-3, 1.3514e-3, fem::uniform_fibers(g, {1, 0, 0}));
  const auto a = fem::assemble_stiffness(g, fem::monodomain_field(di, de));
  const auto m = fem::assemble_mass(g, true);
  const ionic::AlievPanfilov ap;
  monodomain::ImexSolver solver(m, a, ap, ionic::IonicParamField(ap, g.num_nodes()), {}, 0.1);
  monodomain::StimulusProtocol stim;
  stim.center = {0.0, 0.1, 0.0};
  stim.radius = 0.25;
  stim.amplitude = 100.0;
  solver.add_stimulus(monodomain::make_stimulus(g, stim));
  const Point3 lead{lx + 1.0, 0.1, 0.0};
  const auto z = lead_transfer_vector(g, di, lead, 1.0);
  const auto z_ref = oracle_transfer(g, di, lead, 1.0, 10);

  PecgRecorder rec({z});
  double peak_ref = 0.0, peak = 0.0;
  monodomain::run_simulation(solver, solver.resting_state(), 200.0, 10, [&](double t, std::span<const double> v) {
    rec.record(t, v);
    double r = 0.0, s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      r += z_ref[i] * v[i];
      s += z[i] * v[i];
    }
    if (std::abs(r) > std::abs(peak_ref)) {
      peak_ref = r;
      peak = s;
    }
  });
  const auto sig = rec.finish();
  const auto lead0 = sig.lead(0);
  const double baseline = lead0[0];
  double hi = -1e300, lo = 1e300;
  for (double x : lead0) {
    hi = std::max(hi, x - baseline);
    lo = std::min(lo, x - baseline);
  }
  CHECK(peak_ref > 0.0);
  CHECK(test::rel_err(peak, peak_ref) < 0.05);
  CHECK(hi > 0.0);
  CHECK(hi > 5.0 * std::abs(lo));
  // Fully depolarized strip: back near the baseline.
  CHECK(std::abs(lead0.back() - baseline) < 0.1 * hi);
}

TEST_CASE("lead layouts") {
  const auto line = line_leads(4, 2.0, 1.5, -0.1);
  REQUIRE(line.size() == 4);
  CHECK(line.positions[0] == Point3{0.25, -0.1, 1.5});
  CHECK(line.positions[3] == Point3{1.75, -0.1, 1.5});
  const auto sphere = sphere_leads(23, {1, 2, 3}, 10.0);
  REQUIRE(sphere.size() == 23);
  for (const auto& p : sphere.positions) CHECK(distance(p, {1, 2, 3}) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("signal csv round trip and validation") {
  PecgSignal s{2, 3, 0.0, 0.5, {0.1, 1.0 / 3.0, -2.5, 1e-300, 7.0, std::numbers::pi}};
  std::stringstream out;
  write_signal_csv(out, s);
  CHECK(out.str().rfind("t,lead_0,lead_1\n", 0) == 0);
  CHECK(read_signal_csv(out) == s);

  std::stringstream empty("");
  CHECK_THROWS_AS(read_signal_csv(empty), InvalidArgument);
  std::stringstream ragged("t,lead_0,lead_1\n0,1,2\n0.5,1\n");
  CHECK_THROWS_AS(read_signal_csv(ragged), InvalidArgument);

  PecgSignal nan = s;
  nan.values[2] = std::nan("");
  CHECK_THROWS_AS(nan.validate(), NumericFailure);
  PecgSignal shortsig{1, 1, 0.0, 1.0, {0.0}};
  CHECK_THROWS_AS(shortsig.validate(), InvalidArgument);

  PecgRecorder rec({Vec{1.0}});
  rec.record(0.0, Vec{1.0});
  rec.record(1.0, Vec{2.0});
  rec.record(3.0, Vec{3.0});
  CHECK_THROWS_AS(rec.finish(), InvalidArgument);
}

}  // TEST_SUITE
