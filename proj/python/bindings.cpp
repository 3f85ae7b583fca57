// Python bindings for the main operations: spectral norms, DN operators,
// coercivity certificates and the interface flow. Fields cross the boundary
// as 1-D numpy arrays of grid samples.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dnlab/coercivity.hpp"
#include "dnlab/muskat.hpp"
#include "dnlab/version.hpp"

namespace py = pybind11;
using namespace dnlab;

namespace {

SpectralField to_field(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                       double period) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D sample array");
  const int n = static_cast<int>(a.shape(0));
  std::vector<double> v(a.data(), a.data() + n);
  return SpectralField(PeriodicGrid(n, period), std::move(v));
}

py::array_t<double> to_array(const SpectralField& f) {
  py::array_t<double> out(static_cast<size_t>(f.grid().size()));
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

DnParams make_params(int nz, double solve_tol) {
  DnParams p;
  p.nz = nz;
  p.solve_tol = solve_tol;
  return p;
}

py::dict report_to_dict(const CoercivityReport& r) {
  py::dict d;
  d["geometry"] = r.geometry;
  d["pairing"] = r.pairing;
  d["pairing_volume"] = r.pairing_volume;
  d["seminorm2"] = r.seminorm2;
  d["ratio"] = r.ratio;
  d["structural_factor"] = r.structural_factor;
  d["c_cal"] = r.c_cal;
  d["pass"] = r.pass;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dirichlet-to-Neumann operators on periodic Lipschitz domains";
  m.attr("__version__") = kVersion;

  // ---- norms ----
  m.def(
      "seminorm_hs",
      [](py::array_t<double> g, double s, double period) {
        return seminorm_hs(to_field(g, period), s);
      },
      py::arg("g"), py::arg("s"), py::arg("period") = kTwoPi,
      "Homogeneous Sobolev seminorm of order s in [-1, 1].");
  m.def(
      "norm_wt_half",
      [](py::array_t<double> g, double period) { return norm_wt_half(to_field(g, period)); },
      py::arg("g"), py::arg("period") = kTwoPi,
      "Tempered half norm with weight min(|xi|, xi^2).");
  m.def(
      "norm_h_neg_half",
      [](py::array_t<double> g, double period) { return norm_h_neg_half(to_field(g, period)); },
      py::arg("g"), py::arg("period") = kTwoPi);
  m.def(
      "holder_norm",
      [](py::array_t<double> g, double alpha, double period) {
        return holder_norm(to_field(g, period), alpha);
      },
      py::arg("g"), py::arg("alpha"), py::arg("period") = kTwoPi);
  m.def(
      "lp_norm",
      [](py::array_t<double> g, double p, double period) {
        return lp_norm(to_field(g, period), p);
      },
      py::arg("g"), py::arg("p"), py::arg("period") = kTwoPi);
  m.def(
      "mean",
      [](py::array_t<double> g, double period) { return mean(to_field(g, period)); },
      py::arg("g"), py::arg("period") = kTwoPi);

  // ---- multipliers ----
  m.def(
      "apply_multiplier",
      [](py::array_t<double> g, const std::function<double(double)>& sym, double period) {
        return to_array(apply_multiplier(to_field(g, period), MultiplierSymbol{sym}));
      },
      py::arg("g"), py::arg("symbol"), py::arg("period") = kTwoPi,
      "Apply a radial Fourier multiplier given as a callable of |xi|.");
  m.def(
      "flat_dn",
      [](py::array_t<double> g, double depth, double period) {
        return to_array(apply_multiplier(to_field(g, period), flat_symbol(depth)));
      },
      py::arg("g"), py::arg("depth") = std::numeric_limits<double>::infinity(),
      py::arg("period") = kTwoPi,
      "Closed-form flat DN: |D| tanh(depth |D|), or |D| at infinite depth.");

  // ---- boundary generators ----
  m.def(
      "random_lipschitz",
      [](int n, unsigned long long seed, double slope, double period) {
        return to_array(preset_random_lipschitz(PeriodicGrid(n, period), seed, slope).field);
      },
      py::arg("n"), py::arg("seed"), py::arg("slope"), py::arg("period") = kTwoPi);
  m.def(
      "random_field",
      [](int n, unsigned long long seed, double period) {
        return to_array(random_field(PeriodicGrid(n, period), seed));
      },
      py::arg("n"), py::arg("seed"), py::arg("period") = kTwoPi);

  // ---- DN operator ----
  py::class_<DnOperator>(m, "DnOperator")
      .def("apply",
           [](const DnOperator& op, py::array_t<double> g) {
             return to_array(op.apply(to_field(g, op.grid().period())));
           })
      .def("apply_full",
           [](const DnOperator& op, py::array_t<double> g) {
             auto app = op.apply_full(to_field(g, op.grid().period()));
             py::dict d;
             d["trace"] = to_array(app.trace);
             d["pairing"] = app.pairing_trace;
             d["energy"] = app.energy;
             d["iterations"] = app.iterations;
             d["rel_residual"] = app.rel_residual;
             return d;
           })
      .def("update_top",
           [](DnOperator& op, py::array_t<double> f) {
             op.update_top(to_field(f, op.grid().period()));
           })
      .def_property_readonly("structural_factor", &DnOperator::structural_factor)
      .def_property_readonly("finite_depth", &DnOperator::finite_depth);

  m.def(
      "strip_operator",
      [](py::array_t<double> top, py::array_t<double> bottom, int nz, double period,
         double solve_tol) {
        return DnOperator(StripGeometry(BoundaryFn(to_field(top, period)),
                                        BoundaryFn(to_field(bottom, period))),
                          make_params(nz, solve_tol));
      },
      py::arg("top"), py::arg("bottom"), py::arg("nz") = 128, py::arg("period") = kTwoPi,
      py::arg("solve_tol") = 1e-12);
  m.def(
      "half_space_operator",
      [](py::array_t<double> top, double depth, int nz, double period, double solve_tol) {
        return DnOperator(HalfSpaceGeometry(BoundaryFn(to_field(top, period)), depth),
                          make_params(nz, solve_tol));
      },
      py::arg("top"), py::arg("depth") = 8.0, py::arg("nz") = 128,
      py::arg("period") = kTwoPi, py::arg("solve_tol") = 1e-12);

  // ---- certificates ----
  m.def(
      "certify",
      [](const DnOperator& op, py::array_t<double> g, double c_cal) {
        return report_to_dict(certify(op, to_field(g, op.grid().period()), c_cal));
      },
      py::arg("op"), py::arg("g"), py::arg("c_cal") = 1.0);
  m.def(
      "sharp_constant",
      [](const DnOperator& op, bool zero_mean, double tol, int max_iterations,
         unsigned long long seed) {
        SharpConstantOptions opts;
        opts.zero_mean = zero_mean;
        opts.tol = tol;
        opts.max_iterations = max_iterations;
        opts.seed = seed;
        return sharp_constant(op, opts);
      },
      py::arg("op"), py::arg("zero_mean") = true, py::arg("tol") = 1e-8,
      py::arg("max_iterations") = 200, py::arg("seed") = 1);
  m.def(
      "convex_certify",
      [](const DnOperator& op, py::array_t<double> g,
         const std::function<double(double)>& phi, const std::function<double(double)>& dphi,
         const std::function<double(double)>& ddphi, double range, double c_cal) {
        ConvexPair pair(phi, dphi, ddphi, range);
        return report_to_dict(convex_certify(op, to_field(g, op.grid().period()), pair, c_cal));
      },
      py::arg("op"), py::arg("g"), py::arg("phi"), py::arg("dphi"), py::arg("ddphi"),
      py::arg("range"), py::arg("c_cal") = 1.0);
  m.def(
      "psi_from_phi",
      [](const std::function<double(double)>& phi, const std::function<double(double)>& dphi,
         const std::function<double(double)>& ddphi, double range, double z) {
        return psi_from_phi(ConvexPair(phi, dphi, ddphi, range), z);
      },
      py::arg("phi"), py::arg("dphi"), py::arg("ddphi"), py::arg("range"), py::arg("z"));
  m.def(
      "lp_certify",
      [](const DnOperator& op, py::array_t<double> g, double p, double c_cal) {
        LpReport r = lp_certify(op, to_field(g, op.grid().period()), p, c_cal);
        py::dict d;
        d["p"] = r.p;
        d["pairing"] = r.pairing;
        d["seminorm2_q"] = r.seminorm2_q;
        d["psi_seminorm2"] = r.psi_seminorm2;
        d["lp_norm_g"] = r.lp_norm_g;
        d["poincare_ratio"] = r.poincare_ratio;
        d["structural_factor"] = r.structural_factor;
        d["c_cal"] = r.c_cal;
        d["pass"] = r.pass;
        return d;
      },
      py::arg("op"), py::arg("g"), py::arg("p"), py::arg("c_cal") = 1.0);
  m.def(
      "calibrate_flat_family",
      [](double depth_min, double depth_max, int samples, int nx, int nz) {
        CalibrationOptions opts;
        opts.depth_min = depth_min;
        opts.depth_max = depth_max;
        opts.samples = samples;
        opts.nx = nx;
        opts.nz = nz;
        Calibration cal = calibrate_flat_family(opts);
        py::dict d;
        d["c_cal"] = cal.c_cal;
        d["at_depth"] = cal.at_depth;
        d["family"] = cal.family;
        return d;
      },
      py::arg("depth_min") = 1e-3, py::arg("depth_max") = 10.0, py::arg("samples") = 24,
      py::arg("nx") = 64, py::arg("nz") = 96);

  // ---- interface flow ----
  m.def(
      "simulate_muskat",
      [](py::array_t<double> f0, double T, double period, double depth, int nz,
         double dt_max, double cadence, std::vector<double> alphas, bool rk4) {
        MuskatConfig cfg;
        cfg.depth = depth;
        cfg.nz = nz;
        cfg.dt_max = dt_max;
        cfg.cadence = cadence;
        cfg.alphas = std::move(alphas);
        cfg.rk4 = rk4;
        DecayRecord rec = simulate(to_field(f0, period), T, cfg);
        const size_t n = rec.samples.size();
        py::array_t<double> t(n), l2(n), hhalf(n), linf(n), lip(n), dtf(n);
        py::array_t<double> calpha({n, rec.alphas.size()});
        for (size_t i = 0; i < n; ++i) {
          const DecaySample& s = rec.samples[i];
          t.mutable_at(i) = s.t;
          l2.mutable_at(i) = s.l2;
          hhalf.mutable_at(i) = s.hhalf;
          linf.mutable_at(i) = s.linf;
          lip.mutable_at(i) = s.lipschitz;
          dtf.mutable_at(i) = s.dtf_hneghalf;
          for (size_t a = 0; a < rec.alphas.size(); ++a) calpha.mutable_at(i, a) = s.c_alpha[a];
        }
        py::dict d;
        d["t"] = t;
        d["l2"] = l2;
        d["hhalf"] = hhalf;
        d["linf"] = linf;
        d["lipschitz"] = lip;
        d["dtf_hneghalf"] = dtf;
        d["c_alpha"] = calpha;
        d["alphas"] = rec.alphas;
        d["depth_used"] = rec.depth_used;
        d["mean_drift_max"] = rec.mean_drift_max;
        d["linf_excess"] = rec.linf_excess;
        d["lip_excess"] = rec.lip_excess;
        d["lip_status"] = rec.lip_status;
        d["steps"] = rec.steps;
        return d;
      },
      py::arg("f0"), py::arg("T"), py::arg("period") = kTwoPi, py::arg("depth") = 8.0,
      py::arg("nz") = 128, py::arg("dt_max") = 5e-3, py::arg("cadence") = 0.05,
      py::arg("alphas") = std::vector<double>{0.25, 0.5, 0.75}, py::arg("rk4") = false);
  m.def(
      "fit_decay",
      [](py::array_t<double> t, py::array_t<double> v, double t0, double t1) {
        DecayRecord rec;
        for (py::ssize_t i = 0; i < t.shape(0); ++i) {
          DecaySample s;
          s.t = t.at(i);
          s.l2 = v.at(i);
          rec.samples.push_back(s);
        }
        const DecayFit fit = fit_decay(rec, "l2", t0, t1);
        return py::make_tuple(fit.lambda, fit.r2);
      },
      py::arg("t"), py::arg("values"), py::arg("t0"), py::arg("t1"),
      "Least-squares exponential rate on (t, values); returns (lambda, r2).");
}
