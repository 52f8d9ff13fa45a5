#include "cqm/falg.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "cqm/errors.hpp"
#include "cqm/stencil.hpp"

namespace cqm {

namespace {

Vec pack(const QuadraticCoefficients& c) {
  Vec out(c.fi.size() + 2);
  out << c.f0, c.fi, c.base;
  return out;
}

QuadraticCoefficients unpack(const Vec& p) {
  const auto n = p.size() - 2;
  return {p[0], p.segment(1, n), p[n + 1]};
}

// Coefficients, metric and their first spacetime derivatives at one point.
struct Jet {
  QuadraticCoefficients c;
  std::vector<QuadraticCoefficients> d;
  Mat g;
  std::vector<Mat> dg;
};

// `metric_from` supplies the metric part when another jet at the same point has it.
Jet jet_at(const SpecialQuadratic& f, const GeometryBundle& bundle, double t, const Vec& x,
           const Jet* metric_from = nullptr) {
  const int n = bundle.dim();
  const double h = bundle.fd_step;
  Jet j;
  j.c = f.coefficients(t, x);
  if (metric_from) {
    j.g = metric_from->g;
    j.dg = metric_from->dg;
  } else {
    j.g = bundle.metric(t, x);
    for (int a = 0; a <= n; ++a) j.dg.push_back(partial(bundle.metric, t, x, a, h));
  }
  const auto packed = [&](double s, const Vec& y) { return pack(f.coefficients(s, y)); };
  for (int a = 0; a <= n; ++a) j.d.push_back(unpack(partial(packed, t, x, a, h)));
  return j;
}

Vec differential_from_jet(const Jet& j, const Vec& v) {
  const auto n = v.size();
  Vec out(2 * n + 1);
  const double vgv = v.dot(j.g * v);
  for (Eigen::Index a = 0; a <= n; ++a) {
    const auto& d = j.d[static_cast<std::size_t>(a)];
    out[a] = 0.5 * d.f0 * vgv + 0.5 * j.c.f0 * v.dot(j.dg[static_cast<std::size_t>(a)] * v) + d.fi.dot(v) + d.base;
  }
  out.tail(n) = j.c.f0 * (j.g * v) + j.c.fi;
  return out;
}

// Everything needed to evaluate [[f, g]] at fixed (t, x) for many velocities;
// G and K are evaluated once.
struct BracketPoint {
  Jet jf, jg;
  Mat g;
  Connection k;

  BracketPoint(const SpecialQuadratic& f, const SpecialQuadratic& h, const GeometryBundle& b, double t, const Vec& x)
      : jf(jet_at(f, b, t, x)), jg(jet_at(h, b, t, x, &jf)), g(jf.g), k(b.total(t, x)) {
    if (!(std::abs(g.determinant()) > 1e-300))
      throw DegeneracyError("singular spacelike metric at t=" + std::to_string(t));
  }

  Eigen::Index dim() const { return g.rows(); }

  double operator()(const Vec& v) const {
    const Vec df = differential_from_jet(jf, v);
    const Vec dg = differential_from_jet(jg, v);
    Vec gv(1 + 2 * v.size());
    gv << 1.0, v, second_order_acceleration(k, v);
    return poisson_from_differentials(df, dg, omega_components(g, k, v)) + jf.c.f0 * dg.dot(gv) -
           jg.c.f0 * df.dot(gv);
  }
};

struct Extraction {
  Mat a;  // second fibre derivative
  QuadraticCoefficients c;
  double residual = 0.0;
};

Extraction extract(const BracketPoint& h) {
  const Mat& g = h.g;
  const auto n = h.dim();
  const auto e = [n](Eigen::Index i) { return Vec(Vec::Unit(n, i)); };
  Extraction out;
  const double c = h(Vec::Zero(n));
  Vec b(n), plus(n);
  Mat a(n, n);
  double scale = std::abs(c);
  for (Eigen::Index i = 0; i < n; ++i) {
    plus[i] = h(e(i));
    const double minus = h(-e(i));
    b[i] = 0.5 * (plus[i] - minus);
    a(i, i) = plus[i] + minus - 2.0 * c;
    scale = std::max({scale, std::abs(plus[i]), std::abs(minus)});
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k < n; ++k) a(i, k) = a(k, i) = h(e(i) + e(k)) - plus[i] - plus[k] + c;
  const double f0 = (g.ldlt().solve(a)).trace() / static_cast<double>(n);
  out.a = a;
  out.c = {f0, b, c};

  // Off-lattice velocities see any cubic remainder.
  double resid = (a - f0 * g).cwiseAbs().maxCoeff();
  const double probes[2][3] = {{0.7, -1.1, 0.4}, {-1.3, 0.5, 0.9}};
  for (const auto& pr : probes) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 2.0 * pr[i];
    const double model = 0.5 * v.dot(a * v) + b.dot(v) + c;
    resid = std::max(resid, std::abs(h(v) - model));
    scale = std::max(scale, std::abs(model));
  }
  out.residual = resid / (1.0 + scale);
  return out;
}

}  // namespace

SpecialQuadratic SpecialQuadratic::from_fields(int n, ScalarField f0, VectorField fi, ScalarField base) {
  return SpecialQuadratic(n, [n, f0 = std::move(f0), fi = std::move(fi), base = std::move(base)](double t,
                                                                                                   const Vec& x) {
    QuadraticCoefficients c;
    c.f0 = f0 ? f0(t, x) : 0.0;
    c.fi = fi ? fi(t, x) : Vec::Zero(n);
    c.base = base ? base(t, x) : 0.0;
    if (c.fi.size() != n) throw DimensionError("special quadratic: fi has wrong length");
    return c;
  });
}

double SpecialQuadratic::operator()(const GeometryBundle& bundle, const PhasePoint& p) const {
  const auto c = coefficients(p.t, p.x);
  return 0.5 * c.f0 * p.v.dot(bundle.metric(p.t, p.x) * p.v) + c.fi.dot(p.v) + c.base;
}

PhaseFunction SpecialQuadratic::on(const GeometryBundle& bundle) const {
  return [f = *this, bundle](const PhasePoint& p) { return f(bundle, p); };
}

Vec SpecialQuadratic::differential(const GeometryBundle& bundle, const PhasePoint& p) const {
  return differential_from_jet(jet_at(*this, bundle, p.t, p.x), p.v);
}

Classification classify(const SpecialQuadratic& f, const FibredChart& chart, double tol, int samples_per_axis) {
  const auto points = interior_samples(chart, samples_per_axis);
  // Quantisable means f0 is constant across each time slice; the spread over
  // the slice's samples stands in for the spatial gradient.
  double spatial = 0.0, spread0 = 0.0, max0 = 0.0, maxi = 0.0;
  double ref = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double t = chart.t0 + k * chart.time_step;
    double lo = 0.0, hi = 0.0;
    for (std::size_t s = 0; s < points.size(); ++s) {
      const auto c = f.coefficients(t, points[s]);
      if (k == 0 && s == 0) ref = c.f0;
      if (s == 0) lo = hi = c.f0;
      lo = std::min(lo, c.f0);
      hi = std::max(hi, c.f0);
      spread0 = std::max(spread0, std::abs(c.f0 - ref));
      max0 = std::max(max0, std::abs(c.f0));
      if (c.fi.size() > 0) maxi = std::max(maxi, c.fi.cwiseAbs().maxCoeff());
    }
    spatial = std::max(spatial, hi - lo);
  }
  Classification out;
  out.quantisable = spatial <= tol;
  out.constant_time = out.quantisable && spread0 <= tol;
  out.affine = out.constant_time && max0 <= tol;
  out.spacetime = out.affine && maxi <= tol;
  return out;
}

double special_bracket_at(const SpecialQuadratic& f, const SpecialQuadratic& g, const GeometryBundle& bundle,
                          const PhasePoint& p) {
  return BracketPoint(f, g, bundle, p.t, p.x)(p.v);
}

double bracket_extraction_residual(const SpecialQuadratic& f, const SpecialQuadratic& g,
                                   const GeometryBundle& bundle, double t, const Vec& x) {
  return extract(BracketPoint(f, g, bundle, t, x)).residual;
}

SpecialQuadratic special_bracket(const SpecialQuadratic& f, const SpecialQuadratic& g,
                                 const GeometryBundle& bundle) {
  if (f.dim() != g.dim() || f.dim() != bundle.dim())
    throw DimensionError("special_bracket: functions and bundle differ in dimension");
  return SpecialQuadratic(f.dim(), [f, g, bundle](double t, const Vec& x) {
    const auto ex = extract(BracketPoint(f, g, bundle, t, x));
    if (ex.residual > 1e-6)
      throw ConsistencyError("special bracket is not quadratic in the velocities (residual " +
                             std::to_string(ex.residual) + ")");
    return ex.c;
  });
}

VectorField tangent_lift(const SpecialQuadratic& f, const GeometryBundle& bundle) {
  if (!classify(f, bundle.chart, 1e-8).quantisable)
    throw ClassificationError("tangent lift: f0 depends on position, f is not quantisable");
  return [f, bundle](double t, const Vec& x) {
    const auto c = f.coefficients(t, x);
    Vec out(x.size() + 1);
    out[0] = c.f0;
    out.tail(x.size()) = -bundle.metric(t, x).ldlt().solve(c.fi);
    return out;
  };
}

VectorField vector_field_commutator(VectorField x, VectorField y, int n, double fd_step) {
  return [x = std::move(x), y = std::move(y), n, fd_step](double t, const Vec& p) {
    const Vec xv = x(t, p), yv = y(t, p);
    Vec out = Vec::Zero(n + 1);
    for (int b = 0; b <= n; ++b)
      out += xv[b] * partial(y, t, p, b, fd_step) - yv[b] * partial(x, t, p, b, fd_step);
    return out;
  };
}

namespace builtin {

SpecialQuadratic hamiltonian(const GeometryBundle& bundle) {
  const int n = bundle.dim();
  return SpecialQuadratic(n, [n, a = bundle.potential](double t, const Vec& x) {
    return QuadraticCoefficients{1.0, Vec::Zero(n), -a(t, x)[0]};
  });
}

SpecialQuadratic momentum(const GeometryBundle& bundle, int j) {
  const int n = bundle.dim();
  if (j < 0 || j >= n) throw DomainError("momentum component out of range");
  return SpecialQuadratic(n, [j, g = bundle.metric, a = bundle.potential](double t, const Vec& x) {
    return QuadraticCoefficients{0.0, g(t, x).row(j).transpose(), a(t, x)[j + 1]};
  });
}

SpecialQuadratic coordinate(int n, int j) {
  if (j < 0 || j >= n) throw DomainError("coordinate index out of range");
  return SpecialQuadratic(n, [n, j](double, const Vec& x) { return QuadraticCoefficients{0.0, Vec::Zero(n), x[j]}; });
}

SpecialQuadratic constant(int n, double c) {
  return SpecialQuadratic(n, [n, c](double, const Vec&) { return QuadraticCoefficients{0.0, Vec::Zero(n), c}; });
}

}  // namespace builtin

}  // namespace cqm
