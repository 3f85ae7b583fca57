#include "dnlab/muskat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "dnlab/errors.hpp"

namespace dnlab {
namespace {

DnParams dn_params(const MuskatConfig& cfg) {
  DnParams p;
  p.nz = cfg.nz;
  p.solve_tol = cfg.solve_tol;
  return p;
}

std::string format_alpha(double alpha) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), alpha);
  return std::string(buf, ptr);
}

}  // namespace

namespace {

// Movement of the right-hand side under L -> 2L, isolated from mesh effects
// via the flat truncation multiplier: mode xi moves by at most
// xi (tanh(2 L xi) - tanh(L xi)) |f_xi|.
double truncation_move(const SpectralField& f, double depth) {
  SpectralField move = apply_multiplier(
      f, MultiplierSymbol{[depth](double xi) {
        return xi * (std::tanh(2.0 * depth * xi) - std::tanh(depth * xi));
      }});
  return move.max_abs();
}

}  // namespace

MuskatFlow::MuskatFlow(SpectralField f0, MuskatConfig config)
    : config_(std::move(config)),
      state_{0.0, std::move(f0)},
      op_(HalfSpaceGeometry(BoundaryFn(state_.f), config_.depth), dn_params(config_)) {
  state_.mean0 = mean(state_.f);
  refresh_diagnostics();

  // Truncation-depth adequacy on the first step: the right-hand side must not
  // move when L doubles. Measured with the flat truncation formula, which is
  // the part of the rhs that actually depends on L; a two-solve comparison
  // would be swamped by the mesh difference of the two domains.
  double depth_now = depth();
  while (truncation_move(state_.f, depth_now) > config_.depth_check_tol &&
         2.0 * depth_now <= config_.max_depth) {
    depth_now *= 2.0;
    op_ = DnOperator(HalfSpaceGeometry(BoundaryFn(state_.f), depth_now),
                     dn_params(config_));
  }
}

double MuskatFlow::depth() const {
  return std::get<HalfSpaceGeometry>(op_.geometry()).depth();
}

SpectralField MuskatFlow::rhs(const SpectralField& f) {
  op_.update_top(f);
  return -1.0 * op_.apply(f);
}

const SpectralField& MuskatFlow::current_rhs() {
  if (!rhs_cache_) rhs_cache_ = rhs(state_.f);
  return *rhs_cache_;
}

double MuskatFlow::suggest_dt() const {
  const double c1 = state_.linf + state_.lipschitz;
  if (c1 <= 0.0) return config_.dt_max;
  return std::min(config_.dt_max, config_.cfl / c1);
}

SpectralField MuskatFlow::imex_update(const SpectralField& f, const SpectralField& r,
                                      double dt) {
  // f_{n+1} = (I + dt |D|)^{-1} (f_n + dt (|D| f_n + r)): the flat
  // linearization -|D| is implicit, the remainder explicit.
  std::vector<std::complex<double>> bins(f.bins());
  for (int k = 0; k < f.grid().num_bins(); ++k) {
    const double xi = f.grid().freq(k);
    bins[static_cast<size_t>(k)] =
        (bins[static_cast<size_t>(k)] * (1.0 + dt * xi) +
         dt * r.bins()[static_cast<size_t>(k)]) /
        (1.0 + dt * xi);
  }
  const double drift = std::abs(bins.front().real() - state_.mean0);
  mean_drift_max_ = std::max(mean_drift_max_, drift);
  bins.front() = state_.mean0;
  return SpectralField::from_bins(f.grid(), std::move(bins));
}

void MuskatFlow::step(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  SpectralField f_new = [&] {
    if (!config_.rk4) return imex_update(state_.f, current_rhs(), dt);
    // Classical explicit RK4 on df/dt = -G_f(f) (cross-check mode).
    const SpectralField& k1 = current_rhs();
    SpectralField k2 = rhs(state_.f + (0.5 * dt) * k1);
    SpectralField k3 = rhs(state_.f + (0.5 * dt) * k2);
    SpectralField k4 = rhs(state_.f + dt * k3);
    SpectralField f1 =
        state_.f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    std::vector<std::complex<double>> bins(f1.bins());
    const double drift = std::abs(bins.front().real() - state_.mean0);
    mean_drift_max_ = std::max(mean_drift_max_, drift);
    bins.front() = state_.mean0;
    return SpectralField::from_bins(f1.grid(), std::move(bins));
  }();

  const double slack = config_.tol_max_rel * std::max(linf0_, 1e-300);
  if (f_new.max_abs() > state_.linf + slack) {
    throw StabilityViolation(
        "step " + std::to_string(steps_ + 1) + " at t = " + std::to_string(state_.t) +
            ": sup norm grew from " + std::to_string(state_.linf) + " to " +
            std::to_string(f_new.max_abs()) + " (dt too large?)",
        steps_ + 1, state_.t);
  }
  state_.f = std::move(f_new);
  state_.t += dt;
  ++steps_;
  rhs_cache_.reset();
  refresh_diagnostics();
}

void MuskatFlow::refresh_diagnostics() {
  state_.linf = state_.f.max_abs();
  state_.lipschitz = derivative(state_.f).max_abs();
  state_.l2 = lp_norm(state_.f, 2.0);
  if (steps_ == 0) linf0_ = state_.linf;
}

namespace {

DecaySample make_sample(const MuskatState& st, const SpectralField& dtf,
                        const std::vector<double>& alphas) {
  DecaySample s;
  s.t = st.t;
  s.l2 = st.l2;
  s.hhalf = seminorm_hs(st.f, 0.5);
  s.linf = st.linf;
  s.lipschitz = st.lipschitz;
  s.dtf_hneghalf = norm_h_neg_half(dtf);
  s.c_alpha.reserve(alphas.size());
  for (double a : alphas) s.c_alpha.push_back(holder_norm(st.f, a));
  return s;
}

}  // namespace

DecayRecord simulate(const SpectralField& f0, double T, const MuskatConfig& config) {
  DecayRecord rec;
  rec.alphas = config.alphas;
  rec.depth_used = config.depth;
  rec.mean_initial = mean(f0);
  rec.linf_initial = f0.max_abs();
  rec.lip_initial = derivative(f0).max_abs();
  if (T <= 0.0) return rec;

  MuskatFlow flow(f0, config);
  rec.depth_used = flow.depth();
  rec.samples.push_back(make_sample(flow.state(), flow.current_rhs(), config.alphas));

  double t_next = config.cadence;
  const double eps = 1e-12;
  double linf_excess = 0.0, lip_excess = 0.0;
  while (flow.state().t < T - eps) {
    double dt = std::min(flow.suggest_dt(), T - flow.state().t);
    if (t_next - flow.state().t > eps) dt = std::min(dt, t_next - flow.state().t);
    const double l2_before = flow.state().l2;
    flow.step(dt);
    rec.l2_step_increase_max =
        std::max(rec.l2_step_increase_max, flow.state().l2 - l2_before);
    const double linf_ref = std::max(rec.linf_initial, 1e-300);
    const double lip_ref = std::max(rec.lip_initial, 1e-300);
    linf_excess = std::max(linf_excess, (flow.state().linf - rec.linf_initial) / linf_ref);
    lip_excess = std::max(lip_excess, (flow.state().lipschitz - rec.lip_initial) / lip_ref);
    if (flow.state().t >= t_next - eps || flow.state().t >= T - eps) {
      rec.samples.push_back(make_sample(flow.state(), flow.current_rhs(), config.alphas));
      while (t_next <= flow.state().t + eps) t_next += config.cadence;
    }
  }
  rec.mean_drift_max = flow.mean_drift_max_;
  rec.linf_excess = std::max(linf_excess, 0.0);
  rec.lip_excess = std::max(lip_excess, 0.0);
  rec.steps = flow.steps_;
  if (rec.lip_excess <= 1e-3) {
    rec.lip_status = 0;
  } else if (rec.lip_excess <= 1e-2) {
    rec.lip_status = 1;  // dispersive ringing of the scheme, flagged not failed
  } else {
    rec.lip_status = 2;
  }
  return rec;
}

std::vector<std::string> decay_norm_keys(const DecayRecord& record) {
  std::vector<std::string> keys = {"l2", "hhalf", "linf", "lipschitz", "dtf_hneghalf"};
  for (double a : record.alphas) keys.push_back("c_alpha_" + format_alpha(a));
  return keys;
}

DecayFit fit_decay(const DecayRecord& record, const std::string& norm_key,
                   double t0, double t1) {
  std::function<double(const DecaySample&)> get;
  if (norm_key == "l2") {
    get = [](const DecaySample& s) { return s.l2; };
  } else if (norm_key == "hhalf") {
    get = [](const DecaySample& s) { return s.hhalf; };
  } else if (norm_key == "linf") {
    get = [](const DecaySample& s) { return s.linf; };
  } else if (norm_key == "lipschitz") {
    get = [](const DecaySample& s) { return s.lipschitz; };
  } else if (norm_key == "dtf_hneghalf") {
    get = [](const DecaySample& s) { return s.dtf_hneghalf; };
  } else {
    for (size_t a = 0; a < record.alphas.size(); ++a) {
      if (norm_key == "c_alpha_" + format_alpha(record.alphas[a])) {
        get = [a](const DecaySample& s) { return s.c_alpha[a]; };
        break;
      }
    }
    if (!get) throw std::invalid_argument("fit_decay: unknown norm key " + norm_key);
  }

  std::vector<double> ts, logs;
  for (const DecaySample& s : record.samples) {
    if (s.t < t0 || s.t > t1) continue;
    const double v = get(s);
    if (!(v > 0.0)) {
      throw NonPositiveValues("fit_decay: non-positive " + norm_key + " at t = " +
                              std::to_string(s.t));
    }
    ts.push_back(s.t);
    logs.push_back(std::log(v));
  }
  if (ts.size() < 10) {
    throw std::invalid_argument("fit_decay: need >= 10 samples in window, have " +
                                std::to_string(ts.size()));
  }
  const size_t n = ts.size();
  double mt = 0.0, mv = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mt += ts[i];
    mv += logs[i];
  }
  mt /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  double stt = 0.0, stv = 0.0, svv = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dt = ts[i] - mt;
    const double dv = logs[i] - mv;
    stt += dt * dt;
    stv += dt * dv;
    svv += dv * dv;
  }
  DecayFit fit;
  fit.count = static_cast<int>(n);
  fit.lambda = -stv / stt;
  fit.r2 = svv > 0.0 ? (stv * stv) / (stt * svv) : 1.0;
  return fit;
}

IntegrabilityReport integrability_check(const DecayRecord& record) {
  IntegrabilityReport rep;
  if (record.samples.size() < 2) return rep;
  const double T = record.samples.back().t;
  double h_full = 0.0, d_full = 0.0, h_half = 0.0, d_half = 0.0;
  for (size_t i = 1; i < record.samples.size(); ++i) {
    const auto& a = record.samples[i - 1];
    const auto& b = record.samples[i];
    const double w = 0.5 * (b.t - a.t);
    const double hh = w * (a.hhalf * a.hhalf + b.hhalf * b.hhalf);
    const double dd = w * (a.dtf_hneghalf * a.dtf_hneghalf + b.dtf_hneghalf * b.dtf_hneghalf);
    h_full += hh;
    d_full += dd;
    if (b.t <= 0.5 * T + 1e-12) {
      h_half += hh;
      d_half += dd;
    }
  }
  rep.hhalf_sq_integral = h_full;
  rep.dtf_sq_integral = d_full;
  rep.hhalf_tail_ratio = h_full > 0.0 ? 1.0 - h_half / h_full : 0.0;
  rep.dtf_tail_ratio = d_full > 0.0 ? 1.0 - d_half / d_full : 0.0;
  return rep;
}

}  // namespace dnlab
