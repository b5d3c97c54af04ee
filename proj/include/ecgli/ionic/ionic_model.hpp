#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ecgli/common.hpp"

namespace ecgli::ionic {

/// Resting (v0, w0, c0) of a single node.
struct NodeState {
  double v = 0.0;
  Vec w;
  Vec c;
};

/// Local reaction dynamics of the monodomain system.
///
/// Currents are returned per unit membrane capacitance (mV/ms); the tissue
/// solver multiplies them by chi * C_m. Gating rates are in 1/ms. Every call
/// receives the node's parameter vector, laid out as parameter_names().
class IonicModel {
 public:
  virtual ~IonicModel() = default;

  virtual std::string name() const = 0;
  virtual int gating_size() const = 0;
  virtual int concentration_size() const { return 0; }

  virtual const std::vector<std::string>& parameter_names() const = 0;
  virtual const Vec& baseline_parameters() const = 0;
  virtual const Vec& parameter_lower_bounds() const = 0;
  virtual const Vec& parameter_upper_bounds() const = 0;

  virtual double ion_current(double v, std::span<const double> w, std::span<const double> c,
                             std::span<const double> params) const = 0;
  virtual void gating_rates(double v, std::span<const double> w, std::span<const double> params,
                            std::span<double> dw) const = 0;
  /// d(gating_rates)/dw, row-major s_w x s_w.
  virtual void gating_jacobian(double v, std::span<const double> w, std::span<const double> params,
                               std::span<double> jac) const = 0;
  virtual void concentration_rates(double v, std::span<const double> w, std::span<const double> c,
                                   std::span<const double> params, std::span<double> dc) const;
  /// Defaults to central differences of concentration_rates.
  virtual void concentration_jacobian(double v, std::span<const double> w, std::span<const double> c,
                                      std::span<const double> params, std::span<double> jac) const;

  virtual NodeState resting_state(std::span<const double> params) const = 0;

  /// Index of a named parameter, or -1.
  int parameter_index(const std::string& name) const;
};

struct IonicRhs {
  double i_ion = 0.0;
  Vec dw;
  Vec dc;
};

/// Evaluates (I_ion, dw/dt, dc/dt). NaN input raises NumericFailure.
IonicRhs ionic_rhs(const IonicModel& model, double v, std::span<const double> w, std::span<const double> c,
                   std::span<const double> params);

/// Backward-Euler update of the gating and concentration variables at frozen v:
///   w' - dt R(v, w') = w,   c' - dt C(v, w', c') = c.
/// Damped Newton (halving on residual increase, at most 5 halvings), residual
/// below 1e-10 within 50 iterations; otherwise NumericFailure naming `node`.
void implicit_reaction_step(const IonicModel& model, double v, std::span<const double> w_n,
                            std::span<const double> c_n, double dt, std::span<const double> params,
                            std::span<double> w_next, std::span<double> c_next, std::size_t node = 0);

/// Two-variable Aliev-Panfilov model on a normalized potential u in [0, 1],
/// mapped to mV by v = v_rest + v_amp u.
///
///   du/dtau = k s u~(1 - u~)(u~ - a) - u~ w
///   dw/dtau = (eps0 + mu1 w / (u~ + mu2)) (-w - k u~ (u~ - a - 1))
///
/// with u~ = u - rest_shift, t = time_scale * tau (ms) and s the
/// excitability_scale. Ischemic tissue is modelled by lowering s and raising
/// rest_shift.
class AlievPanfilov final : public IonicModel {
 public:
  AlievPanfilov();

  std::string name() const override { return "aliev-panfilov"; }
  int gating_size() const override { return 1; }

  const std::vector<std::string>& parameter_names() const override { return names_; }
  const Vec& baseline_parameters() const override { return baseline_; }
  const Vec& parameter_lower_bounds() const override { return lower_; }
  const Vec& parameter_upper_bounds() const override { return upper_; }

  double ion_current(double v, std::span<const double> w, std::span<const double> c,
                     std::span<const double> params) const override;
  void gating_rates(double v, std::span<const double> w, std::span<const double> params,
                    std::span<double> dw) const override;
  void gating_jacobian(double v, std::span<const double> w, std::span<const double> params,
                       std::span<double> jac) const override;
  NodeState resting_state(std::span<const double> params) const override;

  /// Parameter slots.
  enum Slot : int { kK = 0, kA, kEps0, kMu1, kMu2, kTimeScale, kVRest, kVAmp, kExcitability, kRestShift, kCount };

  /// Normalized potential u for a potential in mV.
  static double normalized(double v, std::span<const double> params);

 private:
  std::vector<std::string> names_;
  Vec baseline_, lower_, upper_;
};

/// Creates a model by name ("aliev-panfilov").
std::unique_ptr<IonicModel> make_model(const std::string& name);

}  // namespace ecgli::ionic
