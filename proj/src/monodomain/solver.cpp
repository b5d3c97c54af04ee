#include "ecgli/monodomain/solver.hpp"

#include <algorithm>
#include <cmath>

#include "ecgli/fem/quadrature.hpp"

namespace ecgli::monodomain {

void StimulusProtocol::validate() const {
  if (!(amplitude >= 0.0)) throw InvalidArgument("stimulus amplitude must be >= 0");
  if (!(duration > 0.0)) throw InvalidArgument("stimulus duration must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("stimulus radius must be positive");
  if (!(edge_width >= 0.0)) throw InvalidArgument("stimulus edge width must be >= 0");
}

double stimulus_profile(const StimulusProtocol& s, double d) {
  if (s.edge_width == 0.0) return d <= s.radius ? 1.0 : 0.0;
  return std::clamp((s.radius - d) / s.edge_width + 0.5, 0.0, 1.0);
}

bool Stimulus::active(double t, double dt) const {
  const double eps = 1e-9 * dt;
  return t >= onset - eps && t < onset + duration - eps;
}

Stimulus make_stimulus(const fem::StructuredGrid& grid, const StimulusProtocol& protocol, int subdivisions) {
  protocol.validate();
  Stimulus s;
  s.amplitude = protocol.amplitude;
  s.onset = protocol.onset;
  s.duration = protocol.duration;
  s.load.assign(grid.num_nodes(), 0.0);
  const double reach = protocol.radius + 0.5 * protocol.edge_width;
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    // Skip elements whose node bounding box misses the ball (Q1 elements
    // with straight edges stay inside the convex hull of their nodes; curved
    // shell elements get a generous margin).
    const auto nodes = grid.element(e);
    Point3 lo = grid.node(nodes[0]), hi = lo;
    for (auto id : nodes) {
      const auto x = grid.node(id);
      for (int d = 0; d < 3; ++d) {
        lo[d] = std::min(lo[d], x[d]);
        hi[d] = std::max(hi[d], x[d]);
      }
    }
    double gap2 = 0.0, diam2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double g = std::max({lo[d] - protocol.center[d], 0.0, protocol.center[d] - hi[d]});
      gap2 += g * g;
      diam2 += (hi[d] - lo[d]) * (hi[d] - lo[d]);
    }
    const double margin = grid.dim() == 3 ? 0.25 * std::sqrt(diam2) : 0.0;
    if (std::sqrt(gap2) > reach + margin) continue;
    for (const auto& q : fem::element_quadrature_composite(grid, e, subdivisions, 2)) {
      const double f = stimulus_profile(protocol, distance(q.x, protocol.center));
      if (f == 0.0) continue;
      for (std::size_t l = 0; l < nodes.size(); ++l) s.load[nodes[l]] += q.jxw * f * q.phi[l];
    }
  }
  return s;
}

fem::CsrMatrix imex_system_matrix(const fem::CsrMatrix& mass, const fem::CsrMatrix& stiffness,
                                  double capacitance_density, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  return mass.linear_combination(capacitance_density / dt, stiffness, 1.0);
}

ImexSolver::ImexSolver(fem::CsrMatrix mass, fem::CsrMatrix stiffness, const ionic::IonicModel& model,
                       ionic::IonicParamField params, MembraneProperties membrane, double dt, double cg_tol)
    : mass_(std::move(mass)),
      stiffness_(std::move(stiffness)),
      model_(&model),
      params_(std::move(params)),
      membrane_(membrane),
      dt_(dt),
      cg_tol_(cg_tol) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (!(membrane.capacitance_density() > 0.0)) throw InvalidArgument("chi * C_m must be positive");
  if (params_.num_nodes() != mass_.size()) throw InvalidArgument("parameter field does not match the mesh");
  if (params_.names() != model.parameter_names()) throw InvalidArgument("parameter field does not match the model");
  system_ = imex_system_matrix(mass_, stiffness_, membrane_.capacitance_density(), dt_);
  precond_ = std::make_unique<JacobiPreconditioner>(system_);
}

void ImexSolver::add_stimulus(Stimulus s) {
  if (s.load.size() != mass_.size()) throw InvalidArgument("stimulus load does not match the mesh");
  stimuli_.push_back(std::move(s));
}

SimState ImexSolver::resting_state() const {
  const std::size_t n = mass_.size();
  const auto sw = static_cast<std::size_t>(model_->gating_size());
  const auto sc = static_cast<std::size_t>(model_->concentration_size());
  SimState s;
  s.v.resize(n);
  s.w.resize(n * sw);
  s.c.resize(n * sc);
  for (std::size_t i = 0; i < n; ++i) {
    const auto rest = model_->resting_state(params_.node(i));
    s.v[i] = rest.v;
    std::copy(rest.w.begin(), rest.w.end(), s.w.begin() + i * sw);
    std::copy(rest.c.begin(), rest.c.end(), s.c.begin() + i * sc);
  }
  return s;
}

void ImexSolver::step(SimState& state) const {
  const std::size_t n = mass_.size();
  const auto sw = static_cast<std::size_t>(model_->gating_size());
  const auto sc = static_cast<std::size_t>(model_->concentration_size());
  if (state.v.size() != n || state.w.size() != n * sw || state.c.size() != n * sc) {
    throw InvalidArgument("state dimensions do not match the solver");
  }
  const double cap = membrane_.capacitance_density();
  Vec w_next(state.w.size()), c_next(state.c.size()), scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = params_.node(i);
    const std::span<const double> w_i(state.w.data() + i * sw, sw), c_i(state.c.data() + i * sc, sc);
    const std::span<double> w_o(w_next.data() + i * sw, sw), c_o(c_next.data() + i * sc, sc);
    ionic::implicit_reaction_step(*model_, state.v[i], w_i, c_i, dt_, p, w_o, c_o, i);
    const double i_ion = model_->ion_current(state.v[i], w_o, c_o, p);
    if (!std::isfinite(i_ion)) throw NumericFailure("non-finite ionic current at node " + std::to_string(i));
    scaled[i] = cap / dt_ * state.v[i] - cap * i_ion;
  }
  Vec rhs = mass_.multiply(scaled);
  for (const auto& s : stimuli_) {
    if (!s.active(state.t, dt_)) continue;
    for (std::size_t i = 0; i < n; ++i) rhs[i] += s.amplitude * s.load[i];
  }
  auto res = cg_solve(system_, rhs, cg_tol_, 10000, precond_.get(), state.v);
  last_iterations_ = res.iterations;
  state.v = std::move(res.x);
  state.w = std::move(w_next);
  state.c = std::move(c_next);
  state.t += dt_;
}

SimState imex_step(const SimState& state, double dt, const fem::CsrMatrix& mass, const fem::CsrMatrix& stiffness,
                   const ionic::IonicModel& model, const ionic::IonicParamField& params,
                   const std::vector<Stimulus>& stimuli, MembraneProperties membrane) {
  ImexSolver solver(mass, stiffness, model, params, membrane, dt);
  for (const auto& s : stimuli) solver.add_stimulus(s);
  SimState next = state;
  solver.step(next);
  return next;
}

void run_simulation(const ImexSolver& solver, SimState state, double t_end, int save_every,
                    const SnapshotObserver& observer) {
  if (save_every < 1) throw InvalidArgument("save_every must be >= 1");
  if (!(t_end >= 0.0)) throw InvalidArgument("final time must be >= 0");
  const auto n_steps = static_cast<long>(std::llround(t_end / solver.dt()));
  const double t0 = state.t;
  observer(state.t, state.v);
  for (long k = 1; k <= n_steps; ++k) {
    try {
      solver.step(state);
    } catch (const NumericFailure& e) {
      throw NumericFailure("step " + std::to_string(k) + ": " + e.what());
    }
    state.t = t0 + static_cast<double>(k) * solver.dt();
    if (k % save_every == 0) observer(state.t, state.v);
  }
}

Trajectory run_simulation(const ImexSolver& solver, SimState initial, double t_end, int save_every) {
  Trajectory traj;
  run_simulation(solver, std::move(initial), t_end, save_every, [&](double t, std::span<const double> v) {
    traj.times.push_back(t);
    traj.snapshots.emplace_back(v.begin(), v.end());
  });
  return traj;
}

}  // namespace ecgli::monodomain
