#include "dnlab/dno.hpp"

#include <cmath>

#include "dnlab/errors.hpp"

namespace dnlab {

MultiplierSymbol flat_symbol(double depth) {
  if (std::isinf(depth)) {
    return MultiplierSymbol{[](double xi) { return std::abs(xi); }};
  }
  if (!(depth > 0.0)) throw std::invalid_argument("flat_symbol: depth must be positive");
  return MultiplierSymbol{
      [depth](double xi) { return std::abs(xi) * std::tanh(depth * std::abs(xi)); }};
}

namespace {

FlattenedSystem build_system(const DnOperator::Geometry& geom, const DnParams& p) {
  if (const auto* strip = std::get_if<StripGeometry>(&geom)) {
    return build_flatten_finite(*strip, p.nz, p.mesh_beta);
  }
  return build_flatten_infinite(std::get<HalfSpaceGeometry>(geom), p.nz, p.mesh_beta);
}

const SpectralField& top_field(const DnOperator::Geometry& geom) {
  if (const auto* strip = std::get_if<StripGeometry>(&geom)) return strip->top().field;
  return std::get<HalfSpaceGeometry>(geom).top().field;
}

}  // namespace

DnOperator::DnOperator(StripGeometry geom, DnParams params)
    : geom_(std::move(geom)),
      params_(params),
      sys_(build_system(geom_, params_)),
      prec_(sys_),
      prec_top_(top_field(geom_)) {}

DnOperator::DnOperator(HalfSpaceGeometry geom, DnParams params)
    : geom_(std::move(geom)),
      params_(params),
      sys_(build_system(geom_, params_)),
      prec_(sys_),
      prec_top_(top_field(geom_)) {}

double DnOperator::structural_factor() const {
  return std::visit([](const auto& g) { return dnlab::structural_factor(g); }, geom_);
}

SpectralField DnOperator::apply(const SpectralField& g) const {
  SolveOptions opts;
  opts.tol = params_.solve_tol;
  opts.max_iterations = params_.max_iterations;
  EllipticSolution sol = solve(sys_, prec_, g, opts);
  return dn_trace(sys_, sol);
}

DnOperator::Application DnOperator::apply_full(const SpectralField& g) const {
  SolveOptions opts;
  opts.tol = params_.solve_tol;
  opts.max_iterations = params_.max_iterations;
  EllipticSolution sol = solve(sys_, prec_, g, opts);
  std::vector<double> out;
  double energy = 0.0;
  apply_form(sys_, sol.v, out, &energy);
  const int n = sys_.xgrid.size();
  std::vector<double> top(out.begin() + static_cast<std::ptrdiff_t>(static_cast<size_t>(sys_.nz) * n),
                          out.end());
  SpectralField trace(sys_.xgrid, std::move(top));
  double pairing = 0.0;
  for (int i = 0; i < n; ++i) pairing += trace.value(i) * g.value(i);
  pairing *= sys_.xgrid.spacing();
  return Application{std::move(trace), pairing, energy, sol.iterations, sol.rel_residual};
}

void DnOperator::update_top(const SpectralField& f_new) {
  auto* hs = std::get_if<HalfSpaceGeometry>(&geom_);
  if (!hs) throw std::logic_error("update_top: only half-space geometries evolve");
  geom_ = HalfSpaceGeometry(BoundaryFn(f_new), hs->depth());
  sys_ = build_system(geom_, params_);
  const double moved = (f_new - prec_top_).max_abs();
  const double scale = std::max(f_new.max_abs(), 1e-300);
  if (moved > params_.prec_refresh * scale) {
    prec_ = FlatPreconditioner(sys_);
    prec_top_ = f_new;
  }
}

double boundedness_ratio(const DnOperator& op, const SpectralField& g) {
  const double denom = norm_wt_half(g);
  if (denom <= 0.0) throw ConstantInput("boundedness_ratio: constant Dirichlet datum");
  return norm_h_neg_half(op.apply(g)) / denom;
}

}  // namespace dnlab
