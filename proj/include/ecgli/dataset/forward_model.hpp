#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ecgli/dataset/dataset.hpp"
#include "ecgli/fem/grid.hpp"
#include "ecgli/fem/sparse.hpp"
#include "ecgli/fem/tensor.hpp"
#include "ecgli/ionic/ionic_model.hpp"
#include "ecgli/monodomain/solver.hpp"
#include "ecgli/pecg/pecg.hpp"

namespace ecgli::dataset {

/// Everything the high-fidelity pipeline needs for one case family.
struct HfConfig {
  CaseKind kind = CaseKind::Stimulus2d;

  // 2D rectangle
  int nx = 64, ny = 12;
  double lx = 5.12, ly = 0.96;
  // 3D shell, elements along (phi, theta, r)
  int ni = 12, nj = 8, nk = 3;
  fem::EllipsoidBounds bounds;

  // S/cm; the scale multiplies all four (coarse shells need a longer wave)
  double sigma_il = 3.0e-3, sigma_it = 3.1525e-4;
  double sigma_el = 2.0e-3, sigma_et = 1.3514e-3;
  double conductivity_scale = 1.0;
  monodomain::MembraneProperties membrane;
  bool lumped_mass = true;

  std::string ionic_model = "aliev-panfilov";
  std::vector<std::pair<std::string, double>> ionic_overrides;

  // Stimulus shape; the center is p for stimulus cases and
  // `stimulus_center` for ischemia cases.
  double stim_radius = 0.1;
  double stim_amplitude = 100.0;
  double stim_duration = 1.0;
  double stim_edge = 0.02;
  Point3 stimulus_center{0.16, 0.48, 0.0};

  // Ischemia
  double ischemia_radius = 0.5;
  double ischemia_radius_min = 1.80, ischemia_radius_max = 3.33;
  double ischemia_smoothing = 0.0;
  std::vector<std::pair<std::string, double>> ischemia_overrides;  // empty: model defaults

  double dt = 0.1;
  double t_end = 400.0;
  double cg_tol = 1e-8;

  // Leads: a line at y = lead_y, z = lead_height (2D) or a sphere around the
  // shell's bounding-box center (3D).
  int n_leads = 0;  // 0: 24 on the rectangle, 23 on the shell
  double lead_height = 2.0;
  double lead_y = 0.0;
  double lead_sphere_radius = 10.0;
  double sigma_b = 1.0;

  int n_t = 200;

  int lead_count() const;
  void validate() const;
};

/// Admissible parameter box: centers at least one stimulus radius inside the
/// rectangle; the full (theta, r, phi) box for the shell.
ParamBox admissible_domain(const HfConfig& cfg);

/// Immutable HF pipeline: mesh, matrices and lead transfer vectors are built
/// once; simulate() is const and safe to call from several threads.
class ForwardModel {
 public:
  explicit ForwardModel(HfConfig cfg);

  const HfConfig& config() const { return cfg_; }
  const fem::StructuredGrid& grid() const { return grid_; }
  const fem::CsrMatrix& mass() const { return mass_; }
  const fem::CsrMatrix& stiffness() const { return stiffness_; }
  const pecg::LeadSet& leads() const { return leads_; }
  const ParamBox& domain() const { return domain_; }

  /// Signal on N_t uniform times over [0, T], linearly interpolated from
  /// the per-step lead potentials.
  pecg::PecgSignal simulate(std::span<const double> p) const;

  /// Full-resolution run: lead potentials at every step plus v snapshots
  /// every `save_every` steps (0 skips snapshots).
  struct FullRun {
    pecg::PecgSignal signal;
    monodomain::Trajectory trajectory;
  };
  FullRun simulate_full(std::span<const double> p, int save_every) const;

  /// Cartesian position of a parameter's center (stimulus or ischemia).
  Point3 center_of(std::span<const double> p) const;

 private:
  monodomain::ImexSolver make_solver(std::span<const double> p) const;

  HfConfig cfg_;
  fem::StructuredGrid grid_;
  fem::CsrMatrix mass_, stiffness_;
  std::unique_ptr<ionic::IonicModel> model_;
  pecg::LeadSet leads_;
  std::vector<Vec> transfer_;
  ParamBox domain_;
};

/// Resamples a uniformly sampled signal onto n_t points over [t0, t_end].
pecg::PecgSignal resample_signal(const pecg::PecgSignal& s, std::size_t n_t, double t_end);

struct SplitSizes {
  std::size_t n_train = 32;
  std::size_t n_val = 8;
  std::size_t n_test = 16;

  std::size_t total() const { return n_train + n_val + n_test; }
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Samples parameters, runs one HF simulation per sample on `jobs` workers,
/// fits the normalization on the training split. A failing sample aborts
/// with its parameters in the message.
Dataset generate_dataset(const HfConfig& cfg, const SplitSizes& sizes, std::uint64_t seed, int jobs,
                         const std::string& config_hash = "", const ProgressFn& progress = {});

}  // namespace ecgli::dataset
