#pragma once

#include "cqm/phase.hpp"

namespace cqm {

/// Coefficients of f = f0 G(v, v) / 2 + fi.v + base at one spacetime point.
struct QuadraticCoefficients {
  double f0 = 0.0;
  Vec fi;
  double base = 0.0;
};

/// A special quadratic phase function, stored by its coefficient fields.
/// The metric G is supplied by the bundle at evaluation time.
class SpecialQuadratic {
 public:
  using Evaluator = std::function<QuadraticCoefficients(double t, const Vec& x)>;

  SpecialQuadratic(int n, Evaluator eval) : n_(n), eval_(std::move(eval)) {}
  static SpecialQuadratic from_fields(int n, ScalarField f0, VectorField fi, ScalarField base);

  int dim() const { return n_; }
  QuadraticCoefficients coefficients(double t, const Vec& x) const { return eval_(t, x); }
  double f0(double t, const Vec& x) const { return eval_(t, x).f0; }
  Vec fi(double t, const Vec& x) const { return eval_(t, x).fi; }
  double base(double t, const Vec& x) const { return eval_(t, x).base; }

  double operator()(const GeometryBundle& bundle, const PhasePoint& p) const;
  PhaseFunction on(const GeometryBundle& bundle) const;
  /// Exact-in-v differential in the (t, x, v) ordering; spacetime
  /// derivatives of the coefficients by central differences.
  Vec differential(const GeometryBundle& bundle, const PhasePoint& p) const;

 private:
  int n_;
  Evaluator eval_;
};

struct Classification {
  bool special_quadratic = true;
  bool quantisable = false;
  bool constant_time = false;
  bool affine = false;
  bool spacetime = false;
};

/// Flags from sampled coefficients: quantisable if f0 does not vary across
/// any sampled time slice, constant-time if f0 is constant, affine if f0 = 0, spacetime if
/// also fi = 0. Samples are interior chart points at t0 + k dt, k = 0..4.
Classification classify(const SpecialQuadratic& f, const FibredChart& chart, double tol = 1e-10,
                        int samples_per_axis = 5);

/// [[f, g]] = {f, g} + f0 gamma.g - g0 gamma.f, with the quadratic
/// coefficients of the result recovered by interpolation in v. Evaluating the
/// result throws ConsistencyError if the bracket is not quadratic in v.
SpecialQuadratic special_bracket(const SpecialQuadratic& f, const SpecialQuadratic& g,
                                 const GeometryBundle& bundle);

/// Pointwise value of the special bracket at a phase point.
double special_bracket_at(const SpecialQuadratic& f, const SpecialQuadratic& g, const GeometryBundle& bundle,
                          const PhasePoint& p);

/// Deviation of the bracket from its quadratic interpolant at spread-out test
/// velocities, plus the deviation of its second fibre derivative from f0 G.
double bracket_extraction_residual(const SpecialQuadratic& f, const SpecialQuadratic& g,
                                   const GeometryBundle& bundle, double t, const Vec& x);

/// X[f] = f0 d_0 - G^ij f_j d_i as (n+1)-component field. Throws
/// ClassificationError if f is not quantisable on the chart.
VectorField tangent_lift(const SpecialQuadratic& f, const GeometryBundle& bundle);

/// [X, Y]^a = X^b d_b Y^a - Y^b d_b X^a by central differences.
VectorField vector_field_commutator(VectorField x, VectorField y, int n, double fd_step = 1e-3);

namespace builtin {
/// Observed Hamiltonian: f0 = 1, fi = 0, base = -A_0.
SpecialQuadratic hamiltonian(const GeometryBundle& bundle);
/// Observed momentum component P_j (0-based j): fi = G_j., base = A_j.
SpecialQuadratic momentum(const GeometryBundle& bundle, int j);
/// Coordinate function x^j (0-based j).
SpecialQuadratic coordinate(int n, int j);
SpecialQuadratic constant(int n, double c);
}  // namespace builtin

}  // namespace cqm
