#include <cmath>

#include "cqm/errors.hpp"
#include "cqm/quantum.hpp"
#include "cqm/stencil.hpp"

namespace cqm {

namespace {

constexpr Complex I{0.0, 1.0};

using Op = std::function<SpacetimeWave(SpacetimeWave)>;

void require_quantisable(const SpecialQuadratic& f, const GeometryBundle& bundle) {
  if (!classify(f, bundle.chart, 1e-8).quantisable)
    throw ClassificationError("f0 depends on position, f is not quantisable");
}

Complex d_partial(const SpacetimeWave& psi, double t, const Vec& x, int axis, const FdOptions& fd) {
  return partial(psi, t, x, axis, fd.step, CentralStencil::of_order(fd.order));
}

// f^j = G^jk f_k
Vec raised(const SpecialQuadratic& f, const GeometryBundle& b, double t, const Vec& x) {
  return b.metric(t, x).ldlt().solve(f.fi(t, x));
}

// d_j (f^j sqrt g) / sqrt g
double spatial_divergence(const SpecialQuadratic& f, const GeometryBundle& b, double t, const Vec& x) {
  double acc = 0.0;
  for (int j = 0; j < b.dim(); ++j) {
    const auto comp = [&](double s, const Vec& y) { return raised(f, b, s, y)[j] * b.density(s, y); };
    acc += partial(comp, t, x, j + 1, b.fd_step);
  }
  return acc / b.density(t, x);
}

Op fibre_operator(const SpecialQuadratic& f, const GeometryBundle& bundle, double k, FdOptions fd) {
  return [f, bundle, k, fd](SpacetimeWave psi) -> SpacetimeWave {
    auto lap = curved_laplacian(psi, bundle, fd);
    std::vector<SpacetimeWave> d;
    for (int j = 1; j <= bundle.dim(); ++j) d.push_back(covariant_derivative(psi, bundle, j, fd));
    return [=](double t, const Vec& x) {
      const auto c = f.coefficients(t, x);
      const Vec up = bundle.metric(t, x).ldlt().solve(c.fi);
      Complex out = c.base * psi(t, x) - I * 0.5 * spatial_divergence(f, bundle, t, x) * psi(t, x);
      if (c.f0 != 0.0) {
        out += -0.5 * c.f0 * lap(t, x);
        if (k != 0.0) out += 0.5 * k * c.f0 * scalar_curvature_at(bundle.metric, t, x, bundle.fd_step) * psi(t, x);
      }
      for (int j = 0; j < bundle.dim(); ++j)
        if (up[j] != 0.0) out += -I * up[j] * d[static_cast<std::size_t>(j)](t, x);
      return out;
    };
  };
}

QuantumVectorField vector_field_unchecked(const SpecialQuadratic& f, const GeometryBundle& bundle) {
  QuantumVectorField y;
  y.y0 = [f](double t, const Vec& x) { return f.f0(t, x); };
  y.yj = [f, bundle](double t, const Vec& x) { return Vec(-raised(f, bundle, t, x)); };
  const auto div = tangent_divergence(f, bundle);
  y.yz = [f, bundle, div](double t, const Vec& x) {
    const auto c = f.coefficients(t, x);
    const Vec a = bundle.potential(t, x);
    const Vec up = bundle.metric(t, x).ldlt().solve(c.fi);
    return I * (c.f0 * a[0] - up.dot(a.tail(up.size())) + c.base) - 0.5 * div(t, x);
  };
  return y;
}

SpacetimeWave combine(SpacetimeWave a, SpacetimeWave b, Complex ca, Complex cb) {
  return [a = std::move(a), b = std::move(b), ca, cb](double t, const Vec& x) { return ca * a(t, x) + cb * b(t, x); };
}

}  // namespace

SpacetimeWave covariant_derivative(SpacetimeWave psi, const GeometryBundle& bundle, int lambda, FdOptions fd) {
  if (lambda < 0 || lambda > bundle.dim()) throw DomainError("covariant_derivative: axis out of range");
  return [psi = std::move(psi), a = bundle.potential, lambda, fd](double t, const Vec& x) {
    return d_partial(psi, t, x, lambda, fd) - I * a(t, x)[lambda] * psi(t, x);
  };
}

SpacetimeWave curved_laplacian(SpacetimeWave psi, const GeometryBundle& bundle, FdOptions fd) {
  const int n = bundle.dim();
  std::vector<SpacetimeWave> d;
  for (int k = 1; k <= n; ++k) d.push_back(covariant_derivative(psi, bundle, k, fd));
  std::vector<std::vector<SpacetimeWave>> dd(static_cast<std::size_t>(n));
  for (int h = 0; h < n; ++h)
    for (int k = 0; k < n; ++k) dd[static_cast<std::size_t>(h)].push_back(covariant_derivative(d[static_cast<std::size_t>(k)], bundle, h + 1, fd));
  return [bundle, d, dd, n](double t, const Vec& x) {
    const Mat ginv = bundle.metric_inverse(t, x);
    const Connection kc = bundle.total(t, x);
    Complex out = 0.0;
    for (int h = 0; h < n; ++h)
      for (int k = 0; k < n; ++k) {
        if (ginv(h, k) == 0.0) continue;
        out += ginv(h, k) * dd[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)](t, x);
      }
    for (int l = 0; l < n; ++l) {
      double trace = 0.0;
      for (int h = 0; h < n; ++h)
        for (int k = 0; k < n; ++k) trace += ginv(h, k) * kc(h + 1, l, k + 1);
      if (trace != 0.0) out += trace * d[static_cast<std::size_t>(l)](t, x);
    }
    return out;
  };
}

SpacetimeWave schrodinger_apply(SpacetimeWave psi, const GeometryBundle& bundle, double k, FdOptions fd) {
  auto d0 = covariant_derivative(psi, bundle, 0, fd);
  auto lap = curved_laplacian(psi, bundle, fd);
  return [psi = std::move(psi), d0, lap, bundle, k](double t, const Vec& x) {
    const Complex p = psi(t, x);
    Complex out = d0(t, x) + 0.5 * bundle.log_density_derivative(t, x, 0) * p;
    Complex inner = lap(t, x);
    if (k != 0.0) inner -= k * scalar_curvature_at(bundle.metric, t, x, bundle.fd_step) * p;
    return out - 0.5 * I * inner;
  };
}

ScalarField tangent_divergence(const SpecialQuadratic& f, const GeometryBundle& bundle) {
  return [f, bundle](double t, const Vec& x) {
    return f.f0(t, x) * bundle.log_density_derivative(t, x, 0) - spatial_divergence(f, bundle, t, x);
  };
}

QuantumVectorField quantum_vector_field(const SpecialQuadratic& f, const GeometryBundle& bundle) {
  require_quantisable(f, bundle);
  return vector_field_unchecked(f, bundle);
}

SpacetimeWave vector_field_action(const QuantumVectorField& y, SpacetimeWave psi, FdOptions fd) {
  return [y, psi = std::move(psi), fd](double t, const Vec& x) {
    const double x0 = y.y0(t, x);
    const Vec xj = y.yj(t, x);
    Complex out = -y.yz(t, x) * psi(t, x);
    if (x0 != 0.0) out += x0 * d_partial(psi, t, x, 0, fd);
    for (Eigen::Index j = 0; j < xj.size(); ++j)
      if (xj[j] != 0.0) out += xj[j] * d_partial(psi, t, x, static_cast<int>(j) + 1, fd);
    return out;
  };
}

SpacetimeWave lie_action(const SpecialQuadratic& f, SpacetimeWave psi, const GeometryBundle& bundle, FdOptions fd) {
  auto y = vector_field_action(quantum_vector_field(f, bundle), std::move(psi), fd);
  return [y](double t, const Vec& x) { return I * y(t, x); };
}

SpacetimeWave operator_apply(const SpecialQuadratic& f, SpacetimeWave psi, const GeometryBundle& bundle, double k,
                             FdOptions fd) {
  require_quantisable(f, bundle);
  return fibre_operator(f, bundle, k, fd)(std::move(psi));
}

CommutatorReport commutator_check(const SpecialQuadratic& f, const SpecialQuadratic& g, const SpacetimeWave& psi,
                                  const GeometryBundle& bundle, double k, const CommutatorOptions& opts) {
  require_quantisable(f, bundle);
  require_quantisable(g, bundle);
  const Grid grid(bundle.chart);

  double peak = 0.0, rim = 0.0;
  for (std::ptrdiff_t node = 0; node < grid.size(); ++node) {
    const double a = std::abs(psi(opts.t, grid.point(node)));
    peak = std::max(peak, a);
    if (grid.wall_distance(node) <= opts.margin) rim = std::max(rim, a);
  }
  if (rim > opts.support_tol * peak)
    throw TestStateError("test state does not vanish near the chart walls (" + std::to_string(rim / peak) + ")");

  const auto fo = fibre_operator(f, bundle, k, opts.fd);
  const auto go = fibre_operator(g, bundle, k, opts.fd);
  const auto commutator = [](const Op& a, const Op& b, const SpacetimeWave& p) {
    return combine(a(b(p)), b(a(p)), -I, I);
  };
  const SpacetimeWave lhs = commutator(fo, go, psi);
  const SpacetimeWave quantised = fibre_operator(special_bracket(f, g, bundle), bundle, k, opts.fd)(psi);

  const bool active = !(classify(f, bundle.chart, 1e-8).affine && classify(g, bundle.chart, 1e-8).affine);
  SpacetimeWave obstruction = [](double, const Vec&) { return Complex(0.0); };
  if (active) {
    const auto yf = vector_field_unchecked(f, bundle), yg = vector_field_unchecked(g, bundle);
    const FdOptions fd = opts.fd;
    const auto as_op = [fd](const QuantumVectorField& y) -> Op {
      return [y, fd](SpacetimeWave p) { return vector_field_action(y, std::move(p), fd); };
    };
    const Op s = [bundle, k, fd](SpacetimeWave p) { return schrodinger_apply(std::move(p), bundle, k, fd); };
    // The time scales g0, f0 contract with the T*-valued commutator from outside.
    const auto cf = commutator(as_op(yf), s, psi), cg = commutator(as_op(yg), s, psi);
    obstruction = [f, g, cf, cg](double t, const Vec& x) { return g.f0(t, x) * cf(t, x) - f.f0(t, x) * cg(t, x); };
  }

  CommutatorReport rep;
  rep.obstruction_active = active;
  for (std::ptrdiff_t node = 0; node < grid.size(); ++node) {
    if (grid.wall_distance(node) <= opts.margin) continue;
    const Vec x = grid.point(node);
    const Complex l = lhs(opts.t, x);
    const Complex o = obstruction(opts.t, x);
    rep.residual = std::max(rep.residual, std::abs(l - quantised(opts.t, x) - o));
    rep.lhs_scale = std::max(rep.lhs_scale, std::abs(l));
    rep.obstruction_scale = std::max(rep.obstruction_scale, std::abs(o));
    ++rep.samples;
  }
  return rep;
}

double lagrangian_density(const SpacetimeWave& psi, const GeometryBundle& bundle, double k, double t, const Vec& x,
                          FdOptions fd) {
  const int n = bundle.dim();
  const Complex p = psi(t, x);
  const Complex d0 = covariant_derivative(psi, bundle, 0, fd)(t, x);
  CVec d(n);
  for (int j = 0; j < n; ++j) d[j] = covariant_derivative(psi, bundle, j + 1, fd)(t, x);
  const Mat ginv = bundle.metric_inverse(t, x);
  double out = -2.0 * std::imag(std::conj(p) * d0);
  out -= std::real(d.dot(ginv.cast<Complex>() * d));  // dot conjugates its first argument
  if (k != 0.0) out -= k * scalar_curvature_at(bundle.metric, t, x, bundle.fd_step) * std::norm(p);
  return bundle.density(t, x) * out;
}

namespace {

template <class F>
double lattice_integral(const GeometryBundle& bundle, const ActionLattice& lat, F&& integrand) {
  if (lat.time_samples < 2 || !(lat.t1 > lat.t0)) throw DomainError("action lattice needs t1 > t0 and 2+ samples");
  const Grid grid(bundle.chart);
  const double dt = (lat.t1 - lat.t0) / (lat.time_samples - 1);
  double acc = 0.0;
  for (int s = 0; s < lat.time_samples; ++s) {
    const double t = lat.t0 + s * dt;
    const double wt = (s == 0 || s == lat.time_samples - 1) ? 0.5 : 1.0;
    double slice = 0.0;
    for (std::ptrdiff_t node = 0; node < grid.size(); ++node) slice += integrand(t, grid.point(node));
    acc += wt * slice;
  }
  return acc * dt * grid.cell_volume();
}

}  // namespace

double action(const SpacetimeWave& psi, const GeometryBundle& bundle, double k, const ActionLattice& lat,
              FdOptions fd) {
  return lattice_integral(bundle, lat,
                          [&](double t, const Vec& x) { return lagrangian_density(psi, bundle, k, t, x, fd); });
}

double action_variation(const SpacetimeWave& eta, const SpacetimeWave& psi, const GeometryBundle& bundle, double k,
                        const ActionLattice& lat, FdOptions fd) {
  const auto s = schrodinger_apply(psi, bundle, k, fd);
  return lattice_integral(bundle, lat, [&](double t, const Vec& x) {
    return 4.0 * std::real(I * std::conj(eta(t, x)) * s(t, x)) * bundle.density(t, x);
  });
}

}  // namespace cqm
