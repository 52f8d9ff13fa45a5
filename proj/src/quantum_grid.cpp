#include <cmath>

#include "cqm/errors.hpp"
#include "cqm/quantum.hpp"
#include "cqm/stencil.hpp"

namespace cqm {

namespace {

constexpr Complex I{0.0, 1.0};
using Triplet = Eigen::Triplet<Complex>;

// Gauge links between neighbouring nodes along one axis:
// link[k] transports from node k + stride back to node k, exp(-i A_a(mid) h).
struct Links {
  std::vector<Complex> up;
};

Links axis_links(const GeometryBundle& b, const Grid& grid, double t, int axis) {
  Links l;
  l.up.assign(static_cast<std::size_t>(grid.size()), Complex(1.0));
  const double h = grid.spacing(axis);
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k) {
    const auto idx = grid.unflatten(k);
    if (idx[static_cast<std::size_t>(axis)] + 1 >= grid.points(axis)) continue;
    Vec mid = grid.point(k);
    mid[axis] += 0.5 * h;
    const double a = b.potential(t, mid)[axis + 1];
    if (a != 0.0) l.up[static_cast<std::size_t>(k)] = std::exp(-I * a * h);
  }
  return l;
}

// Neighbour m steps along axis (m may be negative) with its transport factor;
// index -1 beyond the walls.
std::pair<std::ptrdiff_t, Complex> neighbour(const Grid& grid, const Links& links, std::ptrdiff_t k, int axis, int m) {
  const auto idx = grid.unflatten(k);
  const int target = idx[static_cast<std::size_t>(axis)] + m;
  if (target < 0 || target >= grid.points(axis)) return {-1, 0.0};
  const auto s = grid.stride(axis);
  Complex u = 1.0;
  if (m > 0)
    for (int l = 0; l < m; ++l) u *= links.up[static_cast<std::size_t>(k + l * s)];
  else
    for (int l = 1; l <= -m; ++l) u *= std::conj(links.up[static_cast<std::size_t>(k - l * s)]);
  return {k + m * s, u};
}

SparseC from_triplets(std::ptrdiff_t size, const std::vector<Triplet>& trips) {
  SparseC m(size, size);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

SparseC diagonal(const CVec& d) {
  std::vector<Triplet> trips;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (d[k] != Complex(0.0)) trips.emplace_back(k, k, d[k]);
  return from_triplets(d.size(), trips);
}

bool metric_is_constant(const GeometryBundle& b, const Grid& grid, double t) {
  const Mat ref = b.metric(t, grid.point(0));
  for (std::ptrdiff_t k = 1; k < grid.size(); ++k)
    if ((b.metric(t, grid.point(k)) - ref).cwiseAbs().maxCoeff() > 1e-13 * (1.0 + ref.norm())) return false;
  return true;
}

}  // namespace

WaveFunction WaveFunction::sample(const SpacetimeWave& psi, const Grid& grid, double t) {
  WaveFunction w{grid, t, CVec(grid.size())};
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k) w.values[k] = psi(t, grid.point(k));
  return w;
}

void WaveFunction::check_finite() const {
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (!std::isfinite(values[k].real()) || !std::isfinite(values[k].imag()))
      throw NumericalError("wavefunction has non-finite values", static_cast<int>(k));
}

Vec node_density(const GeometryBundle& b, const Grid& grid, double t) {
  Vec w(grid.size());
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k) w[k] = b.density(t, grid.point(k));
  return w;
}

Vec node_scalar_curvature(const GeometryBundle& b, const Grid& grid, double t) {
  Vec r(grid.size());
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k) r[k] = scalar_curvature_at(b.metric, t, grid.point(k), b.fd_step);
  return r;
}

SparseC covariant_difference(const GeometryBundle& b, const Grid& grid, double t, int axis, int order) {
  const auto st = CentralStencil::of_order(order);
  const auto links = axis_links(b, grid, t, axis);
  const double h = grid.spacing(axis);
  std::vector<Triplet> trips;
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k)
    for (int m = 1; m <= st.half_width(); ++m) {
      const double w = st.first[static_cast<std::size_t>(m - 1)] / h;
      const auto [fwd, uf] = neighbour(grid, links, k, axis, m);
      if (fwd >= 0) trips.emplace_back(k, fwd, w * uf);
      const auto [bwd, ub] = neighbour(grid, links, k, axis, -m);
      if (bwd >= 0) trips.emplace_back(k, bwd, -w * ub);
    }
  return from_triplets(grid.size(), trips);
}

SparseC weighted_laplacian(const GeometryBundle& b, const Grid& grid, double t, int order) {
  const int n = grid.dim();
  const bool wide = order != 2;
  if (wide && !metric_is_constant(b, grid, t))
    throw DomainError("stencil order " + std::to_string(order) + " needs a spatially constant metric");
  const auto st = CentralStencil::of_order(order);
  std::vector<Triplet> trips;
  for (int a = 0; a < n; ++a) {
    const auto links = axis_links(b, grid, t, a);
    const double h2 = grid.spacing(a) * grid.spacing(a);
    for (std::ptrdiff_t k = 0; k < grid.size(); ++k) {
      const Vec x = grid.point(k);
      if (!wide) {
        // flux form with W G^aa at the half points
        double diag = 0.0;
        for (int m : {1, -1}) {
          Vec mid = x;
          mid[a] += 0.5 * m * grid.spacing(a);
          const double c = b.density(t, mid) * b.metric_inverse(t, mid)(a, a) / h2;
          diag -= c;
          const auto [nb, u] = neighbour(grid, links, k, a, m);
          if (nb >= 0) trips.emplace_back(k, nb, c * u);
        }
        trips.emplace_back(k, k, diag);
      } else {
        const double c = b.density(t, x) * b.metric_inverse(t, x)(a, a) / h2;
        trips.emplace_back(k, k, c * st.center);
        for (int m = 1; m <= st.half_width(); ++m)
          for (int sgn : {1, -1}) {
            const auto [nb, u] = neighbour(grid, links, k, a, sgn * m);
            if (nb >= 0) trips.emplace_back(k, nb, c * st.second[static_cast<std::size_t>(m - 1)] * u);
          }
      }
    }
  }
  SparseC lap = from_triplets(grid.size(), trips);
  if (n > 1) {
    std::vector<SparseC> d;
    for (int a = 0; a < n; ++a) d.push_back(covariant_difference(b, grid, t, a, order));
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) {
        if (a == c) continue;
        CVec coef(grid.size());
        for (std::ptrdiff_t k = 0; k < grid.size(); ++k) {
          const Vec x = grid.point(k);
          coef[k] = b.density(t, x) * b.metric_inverse(t, x)(a, c);
        }
        if (coef.cwiseAbs().maxCoeff() == 0.0) continue;
        lap += SparseC(d[static_cast<std::size_t>(a)] * diagonal(coef) * d[static_cast<std::size_t>(c)]);
      }
  }
  return lap;
}

QuantumOperator::QuantumOperator(SpecialQuadratic source, double k, Grid grid, Vec weights, SparseC weighted)
    : source_(std::move(source)), k_(k), grid_(std::move(grid)), w_(std::move(weights)), m_(std::move(weighted)) {}

SparseC QuantumOperator::matrix() const {
  return SparseC(diagonal(w_.cwiseInverse().cast<Complex>()) * m_);
}

CVec QuantumOperator::apply(const CVec& psi) const {
  if (psi.size() != grid_.size()) throw DimensionError("operator and wavefunction grids differ");
  return (m_ * psi).cwiseQuotient(w_.cast<Complex>());
}

WaveFunction QuantumOperator::apply(const WaveFunction& psi) const {
  if (!psi.grid.same_as(grid_)) throw DimensionError("operator and wavefunction grids differ");
  return {grid_, psi.t, apply(psi.values)};
}

double QuantumOperator::hermiticity_residual(const CVec& a, const CVec& b) const {
  const auto ip = [&](const CVec& u, const CVec& v) {
    return (u.conjugate().cwiseProduct(v).cwiseProduct(w_.cast<Complex>())).sum();
  };
  const Complex lhs = ip(apply(a), b);
  return std::abs(lhs - ip(a, apply(b))) / (1.0 + std::abs(lhs));
}

QuantumOperator quantum_operator(const SpecialQuadratic& f, const GeometryBundle& b, double k,
                                 const DiscretisationOptions& opts) {
  if (f.dim() != b.dim()) throw DimensionError("quantum_operator: function and bundle differ in dimension");
  if (!classify(f, b.chart, 1e-8).quantisable)
    throw ClassificationError("f0 depends on position, f is not quantisable");
  const Grid grid(b.chart);
  const double t = opts.t;
  const int n = grid.dim();
  const Vec w = node_density(b, grid, t);

  // f0 is constant on the slice
  const double f0 = f.f0(t, grid.point(grid.size() / 2));
  CVec diag(grid.size());
  std::vector<CVec> up(static_cast<std::size_t>(n), CVec(grid.size()));
  bool first_order = false;
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k) {
    const Vec x = grid.point(k);
    const auto c = f.coefficients(t, x);
    diag[k] = w[k] * c.base;
    const Vec raised = b.metric(t, x).ldlt().solve(c.fi);
    for (int j = 0; j < n; ++j) {
      up[static_cast<std::size_t>(j)][k] = w[k] * raised[j];
      first_order = first_order || raised[j] != 0.0;
    }
  }
  if (k != 0.0 && f0 != 0.0) diag += (0.5 * k * f0 * w.cwiseProduct(node_scalar_curvature(b, grid, t))).cast<Complex>();

  SparseC m = diagonal(diag);
  if (f0 != 0.0) m += SparseC(Complex(-0.5 * f0) * weighted_laplacian(b, grid, t, opts.order));
  if (first_order)
    for (int j = 0; j < n; ++j) {
      const SparseC d = covariant_difference(b, grid, t, j, opts.order);
      const SparseC wf = diagonal(up[static_cast<std::size_t>(j)]);
      m += SparseC(Complex(0.0, -0.5) * SparseC(wf * d + d * wf));
    }
  m.makeCompressed();
  return QuantumOperator(f, k, grid, w, m);
}

ProbabilityCurrent probability_current(const WaveFunction& psi, const GeometryBundle& b) {
  const Grid& grid = psi.grid;
  const int n = grid.dim();
  ProbabilityCurrent j;
  const Vec w = node_density(b, grid, psi.t);
  j.j0 = psi.values.cwiseAbs2().cwiseProduct(w);
  std::vector<Vec> im(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const CVec d = covariant_difference(b, grid, psi.t, a) * psi.values;
    im[static_cast<std::size_t>(a)] = psi.values.conjugate().cwiseProduct(d).imag();
  }
  for (int i = 0; i < n; ++i) j.j.push_back(Vec::Zero(grid.size()));
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k) {
    const Mat ginv = b.metric_inverse(psi.t, grid.point(k));
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) j.j[static_cast<std::size_t>(i)][k] += w[k] * ginv(i, a) * im[static_cast<std::size_t>(a)][k];
  }
  return j;
}

double continuity_residual(const WaveFunction& prev, const WaveFunction& mid, const WaveFunction& next,
                           const GeometryBundle& b) {
  const Grid& grid = mid.grid;
  if (!prev.grid.same_as(grid) || !next.grid.same_as(grid)) throw DimensionError("slices on different grids");
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) throw DomainError("continuity_residual: slices must be ordered in time");
  const Vec j0p = prev.values.cwiseAbs2().cwiseProduct(node_density(b, grid, prev.t));
  const Vec j0n = next.values.cwiseAbs2().cwiseProduct(node_density(b, grid, next.t));
  // Discrete divergence of the current: Im(psi* (W Laplacian) psi) is the
  // exact flux balance of the Hermitian scheme, d_i j^i in the continuum.
  const CVec lap = weighted_laplacian(b, grid, mid.t) * mid.values;
  const Vec div = mid.values.conjugate().cwiseProduct(lap).imag();
  return ((j0n - j0p) / dt + div).cwiseAbs().maxCoeff();
}

}  // namespace cqm
