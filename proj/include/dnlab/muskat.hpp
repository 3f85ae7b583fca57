#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dnlab/dno.hpp"

namespace dnlab {

struct MuskatConfig {
  double depth = 8.0;  // truncation depth; doubled automatically when the
                       // first right-hand side still moves under L -> 2L
  int nz = 128;
  double dt_max = 5e-3;
  double cfl = 0.5;        // dt <= cfl / ||f||_{C^1}
  double cadence = 0.05;   // diagnostic sampling interval
  std::vector<double> alphas = {0.25, 0.5, 0.75};
  double tol_max_rel = 1e-6;      // allowed sup-norm growth per step
  double depth_check_tol = 1e-8;  // rhs movement threshold for the L doubling check
  double max_depth = 64.0;
  double solve_tol = 1e-12;
  bool rk4 = false;  // explicit fourth-order mode (cross check)
};

/// Interface state with cached diagnostics.
struct MuskatState {
  double t = 0.0;
  SpectralField f;
  double linf = 0.0;
  double lipschitz = 0.0;
  double l2 = 0.0;
  double mean0 = 0.0;  // conserved mean (t = 0 value)
};

struct DecaySample {
  double t = 0.0;
  double l2 = 0.0;
  double hhalf = 0.0;
  double linf = 0.0;
  double lipschitz = 0.0;
  double dtf_hneghalf = 0.0;
  std::vector<double> c_alpha;
};

struct DecayRecord {
  std::vector<double> alphas;
  std::vector<DecaySample> samples;
  double depth_used = 0.0;
  double mean_initial = 0.0;
  double mean_drift_max = 0.0;  // pre-projection drift, max over steps
  double linf_initial = 0.0;
  double lip_initial = 0.0;
  double linf_excess = 0.0;  // relative overshoot of ||f||_inf past its start
  double lip_excess = 0.0;   // relative overshoot of ||f'||_inf past its start
  double l2_step_increase_max = 0.0;  // worst per-step growth of ||f||_2
  int steps = 0;
  // Slope maximum principle status: 0 within tolerance, 1 flagged (scheme
  // ringing), 2 violated.
  int lip_status = 0;
};

/// Time stepper for the interface equation: the flat linearization is treated
/// implicitly, the remainder explicitly, and the mean is re-projected to its
/// initial value every step.
class MuskatFlow {
 public:
  MuskatFlow(SpectralField f0, MuskatConfig config);

  const MuskatState& state() const { return state_; }
  const MuskatConfig& config() const { return config_; }
  double depth() const;
  int steps() const { return steps_; }
  double mean_drift_max() const { return mean_drift_max_; }

  /// -G_f(f), rebuilding the geometry around f.
  SpectralField rhs(const SpectralField& f);

  /// -G_f(f) at the current state, computed at most once per step.
  const SpectralField& current_rhs();

  /// One step of size dt. Throws StabilityViolation when the sup norm grows
  /// past the per-step slack.
  void step(double dt);

  /// Step size policy: min(dt_max, cfl / ||f||_{C^1}).
  double suggest_dt() const;

 private:
  void refresh_diagnostics();
  SpectralField imex_update(const SpectralField& f, const SpectralField& r, double dt);

  MuskatConfig config_;
  MuskatState state_;
  DnOperator op_;
  std::optional<SpectralField> rhs_cache_;
  double mean_drift_max_ = 0.0;
  double linf0_ = 0.0;
  int steps_ = 0;
  friend DecayRecord simulate(const SpectralField&, double, const MuskatConfig&);
};

/// Trajectory with diagnostics sampled at the configured cadence. T = 0
/// returns an empty record.
DecayRecord simulate(const SpectralField& f0, double T, const MuskatConfig& config = {});

struct DecayFit {
  double lambda = 0.0;
  double r2 = 0.0;
  int count = 0;
};

/// Least-squares line on (t, log v) inside [t0, t1]; lambda = -slope.
/// Requires >= 10 samples; throws NonPositiveValues on non-positive data.
DecayFit fit_decay(const DecayRecord& record, const std::string& norm_key,
                   double t0, double t1);

/// Names accepted by fit_decay for a given record.
std::vector<std::string> decay_norm_keys(const DecayRecord& record);

struct IntegrabilityReport {
  double hhalf_sq_integral = 0.0;  // int ||f||^2_{H^{1/2}} dt over [0, T]
  double dtf_sq_integral = 0.0;    // int ||df/dt||^2_{H^{-1/2}} dt
  double hhalf_tail_ratio = 0.0;   // contribution of (T/2, T]
  double dtf_tail_ratio = 0.0;
};

IntegrabilityReport integrability_check(const DecayRecord& record);

}  // namespace dnlab
