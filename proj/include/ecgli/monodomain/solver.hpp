#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ecgli/fem/grid.hpp"
#include "ecgli/fem/sparse.hpp"
#include "ecgli/ionic/ionic_model.hpp"
#include "ecgli/ionic/param_field.hpp"
#include "ecgli/monodomain/cg.hpp"

namespace ecgli::monodomain {

/// Transmembrane potential plus node-major gating/concentration blocks.
struct SimState {
  double t = 0.0;
  Vec v;
  Vec w;
  Vec c;

  bool operator==(const SimState&) const = default;
};

/// chi in 1/cm, C_m in uF/cm^2.
struct MembraneProperties {
  double chi = 1.0e3;
  double cm = 1.0;
  /// chi * C_m in mF/cm^3, the factor in front of dv/dt.
  double capacitance_density() const { return chi * cm * 1e-3; }
};

/// Applied current on a ball around `center`, amplitude per unit volume,
/// active for onset <= t < onset + duration. The ball edge is a linear ramp
/// of width edge_width centered on the radius (0 gives a sharp edge).
struct StimulusProtocol {
  Point3 center{};
  double radius = 0.05;
  double amplitude = 100.0;
  double onset = 0.0;
  double duration = 1.0;
  double edge_width = 0.0;

  void validate() const;
};

/// Profile value of the stimulus ball at distance d from its center.
double stimulus_profile(const StimulusProtocol& s, double d);

/// Assembled right-hand side of one stimulus: load = int profile * phi_j.
struct Stimulus {
  Vec load;
  double amplitude = 0.0;
  double onset = 0.0;
  double duration = 0.0;

  bool active(double t, double dt) const;
};

/// Sub-element quadrature (`subdivisions` per axis, 2 Gauss points each) of
/// the ball profile against the Q1 basis.
Stimulus make_stimulus(const fem::StructuredGrid& grid, const StimulusProtocol& protocol, int subdivisions = 4);

/// chi C_m / dt M + A, sharing M's sparsity pattern.
fem::CsrMatrix imex_system_matrix(const fem::CsrMatrix& mass, const fem::CsrMatrix& stiffness,
                                  double capacitance_density, double dt);

/// First-order IMEX stepper with a cached system matrix for a fixed dt.
class ImexSolver {
 public:
  ImexSolver(fem::CsrMatrix mass, fem::CsrMatrix stiffness, const ionic::IonicModel& model,
             ionic::IonicParamField params, MembraneProperties membrane, double dt, double cg_tol = 1e-8);

  void add_stimulus(Stimulus s);

  /// Every node at its own resting state.
  SimState resting_state() const;

  /// Reaction solved implicitly at frozen v, then
  ///   (chi C_m/dt M + A) v' = chi C_m/dt M v - M chi C_m I_ion(v, w', c') + sum load_k I_k.
  void step(SimState& state) const;

  double dt() const { return dt_; }
  const fem::CsrMatrix& system_matrix() const { return system_; }
  const fem::CsrMatrix& mass() const { return mass_; }
  const ionic::IonicModel& model() const { return *model_; }
  int last_cg_iterations() const { return last_iterations_; }

 private:
  fem::CsrMatrix mass_, stiffness_, system_;
  const ionic::IonicModel* model_;
  ionic::IonicParamField params_;
  MembraneProperties membrane_;
  double dt_;
  double cg_tol_;
  std::unique_ptr<JacobiPreconditioner> precond_;
  std::vector<Stimulus> stimuli_;
  mutable int last_iterations_ = 0;
};

/// One IMEX step from free-standing operators (builds the system matrix).
SimState imex_step(const SimState& state, double dt, const fem::CsrMatrix& mass, const fem::CsrMatrix& stiffness,
                   const ionic::IonicModel& model, const ionic::IonicParamField& params,
                   const std::vector<Stimulus>& stimuli, MembraneProperties membrane = {});

/// Snapshots of v at t = 0, save_every dt, ...
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> snapshots;
};

using SnapshotObserver = std::function<void(double t, std::span<const double> v)>;

/// Advances from `initial` to T with steps of solver.dt(); calls `observer` at
/// every saved time (including t = 0). T is rounded to a whole number of
/// steps. Step failures are rethrown with the step index.
void run_simulation(const ImexSolver& solver, SimState initial, double t_end, int save_every,
                    const SnapshotObserver& observer);

Trajectory run_simulation(const ImexSolver& solver, SimState initial, double t_end, int save_every);

}  // namespace ecgli::monodomain
