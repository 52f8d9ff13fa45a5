#include "cqm/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "cqm/errors.hpp"
#include "cqm/stencil.hpp"

namespace cqm {

Connection& Connection::operator+=(const Connection& o) {
  if (o.n_ != n_) throw StructuralError("connection dimension mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Connection operator-(Connection a, const Connection& b) {
  if (a.n_ != b.n_) throw StructuralError("connection dimension mismatch");
  for (std::size_t i = 0; i < a.c_.size(); ++i) a.c_[i] -= b.c_[i];
  return a;
}

double Connection::max_abs() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

Connection Connection::from_flat(int n, const Vec& v) {
  Connection k(n);
  if (static_cast<std::size_t>(v.size()) != k.c_.size()) throw StructuralError("connection size mismatch");
  std::copy(v.data(), v.data() + v.size(), k.c_.begin());
  return k;
}

Mat GeometryBundle::metric_inverse(double t, const Vec& x) const {
  return metric(t, x).inverse();
}

double GeometryBundle::density(double t, const Vec& x) const {
  return std::sqrt(std::abs(metric(t, x).determinant()));
}

double GeometryBundle::log_density_derivative(double t, const Vec& x, int lambda) const {
  // d ln sqrt|G| = tr(G^-1 dG) / 2
  const Mat dG = partial(metric, t, x, lambda, fd_step);
  return 0.5 * (metric_inverse(t, x) * dG).trace();
}

Connection compose_total_connection(const Connection& grav, const Mat& em, const Mat& metric) {
  const int n = grav.dim();
  if (em.rows() != n + 1 || em.cols() != n + 1 || metric.rows() != n || metric.cols() != n)
    throw StructuralError("compose_total_connection: shape mismatch between connection, field and metric");
  const Mat ginv = metric.inverse();
  // raised[h](mu) = F^h_mu = G^hk F_{k mu}
  const Mat raised = ginv * em.bottomRows(n);
  Connection k = grav;
  for (int h = 0; h < n; ++h) {
    for (int j = 1; j <= n; ++j) {
      k(0, h, j) += 0.5 * raised(h, j);
      k(j, h, 0) += 0.5 * raised(h, j);
    }
    k(0, h, 0) += raised(h, 0);
  }
  return k;
}

ConnectionField compose_total_connection(ConnectionField grav, MatrixField em, MatrixField metric) {
  return [grav = std::move(grav), em = std::move(em), metric = std::move(metric)](double t, const Vec& x) {
    return compose_total_connection(grav(t, x), em(t, x), metric(t, x));
  };
}

std::vector<Mat> christoffel(const MatrixField& metric, double t, const Vec& x, double fd_step) {
  const Mat g = metric(t, x);
  const int n = static_cast<int>(g.rows());
  const Mat ginv = g.inverse();
  std::vector<Mat> dg(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) dg[static_cast<std::size_t>(a)] = partial(metric, t, x, a + 1, fd_step);
  std::vector<Mat> gamma(static_cast<std::size_t>(n), Mat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // lowered Gamma_{k i j}
      Vec low(n);
      for (int k = 0; k < n; ++k)
        low[k] = 0.5 * (dg[static_cast<std::size_t>(i)](k, j) + dg[static_cast<std::size_t>(j)](k, i) -
                        dg[static_cast<std::size_t>(k)](i, j));
      const Vec up = ginv * low;
      for (int h = 0; h < n; ++h) gamma[static_cast<std::size_t>(h)](i, j) = up[h];
    }
  return gamma;
}

ConnectionField levi_civita_connection(MatrixField metric, double fd_step, ScalarField newton_potential) {
  return [metric = std::move(metric), fd_step, phi = std::move(newton_potential)](double t, const Vec& x) {
    const int n = static_cast<int>(x.size());
    Connection k(n);
    const auto gamma = christoffel(metric, t, x, fd_step);
    for (int h = 0; h < n; ++h)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i + 1, h, j + 1) = -gamma[static_cast<std::size_t>(h)](i, j);
    const Mat ginv = metric(t, x).inverse();
    const Mat dt_g = partial(metric, t, x, 0, fd_step);
    const Mat rot = -0.5 * ginv * dt_g;
    for (int h = 0; h < n; ++h)
      for (int j = 0; j < n; ++j) {
        k(0, h, j + 1) = rot(h, j);
        k(j + 1, h, 0) = rot(h, j);
      }
    if (phi) {
      Vec grad(n);
      for (int a = 0; a < n; ++a) grad[a] = partial(phi, t, x, a + 1, fd_step);
      const Vec force = -(ginv * grad);
      for (int h = 0; h < n; ++h) k(0, h, 0) = force[h];
    }
    return k;
  };
}

MatrixField exterior_derivative(VectorField potential, double fd_step) {
  return [a = std::move(potential), fd_step](double t, const Vec& x) {
    const int d = static_cast<int>(x.size()) + 1;
    Mat da(d, d);  // da(l, m) = d_l A_m
    for (int l = 0; l < d; ++l) da.row(l) = partial(a, t, x, l, fd_step).transpose();
    return Mat(da - da.transpose());
  };
}

GeometryBundle make_bundle(BundleInputs in) {
  in.chart.check();
  const int n = in.chart.n;
  if (!in.metric) throw StructuralError("bundle needs a metric");
  if (!in.potential) in.potential = [n](double, const Vec&) { return Vec::Zero(n + 1).eval(); };
  GeometryBundle b;
  b.chart = in.chart;
  b.fd_step = in.fd_step;
  b.metric = in.metric;
  b.potential = in.potential;
  b.grav = in.grav ? in.grav : levi_civita_connection(in.metric, in.fd_step, in.newton_potential);
  if (in.em) {
    b.em = in.em;
  } else {
    VectorField shifted = in.potential;
    if (in.newton_potential) {
      shifted = [a = in.potential, phi = in.newton_potential](double t, const Vec& x) {
        Vec v = a(t, x);
        v[0] += phi(t, x);
        return v;
      };
    }
    b.em = exterior_derivative(shifted, in.fd_step);
  }
  b.total = compose_total_connection(b.grav, b.em, b.metric);
  return b;
}

GeometryBundle flat_bundle(const FibredChart& chart, VectorField potential) {
  BundleInputs in;
  in.chart = chart;
  const int n = chart.n;
  in.metric = [n](double, const Vec&) { return Mat::Identity(n, n).eval(); };
  in.potential = std::move(potential);
  in.grav = [n](double, const Vec&) { return Connection(n); };
  return make_bundle(std::move(in));
}

std::vector<std::vector<Mat>> riemann(const ConnectionField& connection, int n, double t, const Vec& x,
                                      double fd_step) {
  const int d = n + 1;
  const Connection k = connection(t, x);
  std::vector<Connection> dk;
  for (int m = 0; m < d; ++m) {
    const Vec flat = partial([&](double s, const Vec& y) { return connection(s, y).flat(); }, t, x, m, fd_step);
    dk.push_back(Connection::from_flat(n, flat));
  }
  // Gamma^h_{mu nu} = -K_mu^h_nu
  std::vector<std::vector<Mat>> r(static_cast<std::size_t>(n), std::vector<Mat>(static_cast<std::size_t>(d), Mat::Zero(d, d)));
  for (int h = 0; h < n; ++h)
    for (int s = 0; s < d; ++s)
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu) {
          double v = -dk[static_cast<std::size_t>(mu)](nu, h, s) + dk[static_cast<std::size_t>(nu)](mu, h, s);
          for (int l = 0; l < n; ++l)
            v += k(mu, h, l + 1) * k(nu, l, s) - k(nu, h, l + 1) * k(mu, l, s);
          r[static_cast<std::size_t>(h)][static_cast<std::size_t>(s)](mu, nu) = v;
        }
  return r;
}

double scalar_curvature_at(const MatrixField& metric, double t, const Vec& x, double fd_step) {
  const int n = static_cast<int>(x.size());
  if (n == 1) return 0.0;
  const auto conn = levi_civita_connection(metric, fd_step);
  const auto r = riemann(conn, n, t, x, fd_step);
  const Mat ginv = metric(t, x).inverse();
  double scalar = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double ricci = 0.0;
      for (int h = 0; h < n; ++h) ricci += r[static_cast<std::size_t>(h)][static_cast<std::size_t>(i + 1)](h + 1, j + 1);
      scalar += ginv(i, j) * ricci;
    }
  return scalar;
}

namespace {

// Second-order first-derivative weights along one axis at node k; one-sided at the ends.
template <class F>
double grid_d1(F&& f, const Grid& g, std::ptrdiff_t k, int axis) {
  const int i = g.unflatten(k)[static_cast<std::size_t>(axis)];
  const int m = g.points(axis);
  const std::ptrdiff_t s = g.stride(axis);
  const double h = g.spacing(axis);
  if (i == 0) return (-3.0 * f(k) + 4.0 * f(k + s) - f(k + 2 * s)) / (2.0 * h);
  if (i == m - 1) return (3.0 * f(k) - 4.0 * f(k - s) + f(k - 2 * s)) / (2.0 * h);
  return (f(k + s) - f(k - s)) / (2.0 * h);
}

// Compact second derivative; the mixed case nests first derivatives.
template <class F>
double grid_d2(F&& f, const Grid& g, std::ptrdiff_t k, int a, int b) {
  if (a != b) return grid_d1([&](std::ptrdiff_t q) { return grid_d1(f, g, q, b); }, g, k, a);
  const int i = g.unflatten(k)[static_cast<std::size_t>(a)];
  const int m = g.points(a);
  const std::ptrdiff_t s = g.stride(a);
  const double h2 = g.spacing(a) * g.spacing(a);
  if (i == 0) return (2.0 * f(k) - 5.0 * f(k + s) + 4.0 * f(k + 2 * s) - f(k + 3 * s)) / h2;
  if (i == m - 1) return (2.0 * f(k) - 5.0 * f(k - s) + 4.0 * f(k - 2 * s) - f(k - 3 * s)) / h2;
  return (f(k + s) - 2.0 * f(k) + f(k - s)) / h2;
}

}  // namespace

Vec scalar_curvature(const MatrixField& metric, const Grid& grid, double t) {
  const int n = grid.dim();
  for (int a = 0; a < n; ++a)
    if (grid.points(a) < 4) throw ResolutionError("scalar_curvature needs at least 4 points per axis");
  const auto size = static_cast<std::size_t>(grid.size());
  if (n == 1) return Vec::Zero(grid.size());

  std::vector<Mat> g(size);
  for (std::size_t k = 0; k < size; ++k) g[k] = metric(t, grid.point(static_cast<std::ptrdiff_t>(k)));
  auto comp = [&](int i, int j) {
    return [&g, i, j](std::ptrdiff_t q) { return g[static_cast<std::size_t>(q)](i, j); };
  };

  Vec r(grid.size());
  const auto nn = static_cast<std::size_t>(n);
  for (std::size_t k = 0; k < size; ++k) {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    const Mat ginv = g[k].inverse();
    // dg[a](i,j) = d_a G_ij, ddg[a*n+b](i,j) = d_a d_b G_ij
    std::vector<Mat> dg(nn, Mat(n, n)), ddg(nn * nn, Mat(n, n));
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          dg[static_cast<std::size_t>(a)](i, j) = grid_d1(comp(i, j), grid, kk, a);
          for (int b = 0; b < n; ++b)
            ddg[static_cast<std::size_t>(a * n + b)](i, j) = grid_d2(comp(i, j), grid, kk, a, b);
        }
    auto low = [&](int p, int i, int j) {  // Gamma_{p i j}
      return 0.5 * (dg[static_cast<std::size_t>(i)](p, j) + dg[static_cast<std::size_t>(j)](p, i) -
                    dg[static_cast<std::size_t>(p)](i, j));
    };
    auto dlow = [&](int a, int p, int i, int j) {  // d_a Gamma_{p i j}
      auto dd = [&](int x, int y) -> const Mat& { return ddg[static_cast<std::size_t>(x * n + y)]; };
      return 0.5 * (dd(a, i)(p, j) + dd(a, j)(p, i) - dd(a, p)(i, j));
    };
    auto gam = [&](int h, int i, int j) {
      double v = 0.0;
      for (int p = 0; p < n; ++p) v += ginv(h, p) * low(p, i, j);
      return v;
    };
    auto dgam = [&](int a, int h, int i, int j) {
      // d_a G^{hp} = -G^{hq} d_a G_qr G^{rp}
      const Mat dinv = -ginv * dg[static_cast<std::size_t>(a)] * ginv;
      double v = 0.0;
      for (int p = 0; p < n; ++p) v += dinv(h, p) * low(p, i, j) + ginv(h, p) * dlow(a, p, i, j);
      return v;
    };
    // Ric_{ij} = d_h Gamma^h_ji - d_j Gamma^h_hi + Gamma^h_hl Gamma^l_ji - Gamma^h_jl Gamma^l_hi
    double scalar = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double ric = 0.0;
        for (int h = 0; h < n; ++h) {
          ric += dgam(h, h, j, i) - dgam(j, h, h, i);
          for (int l = 0; l < n; ++l) ric += gam(h, h, l) * gam(l, j, i) - gam(h, j, l) * gam(l, h, i);
        }
        scalar += ginv(i, j) * ric;
      }
    r[kk] = scalar;
  }
  return r;
}

std::vector<Vec> interior_samples(const FibredChart& chart, int per_axis) {
  const int n = chart.n;
  std::vector<Vec> out;
  std::array<int, 3> idx{0, 0, 0};
  for (;;) {
    Vec x(n);
    for (int a = 0; a < n; ++a) {
      const auto& [lo, hi] = chart.extent[static_cast<std::size_t>(a)];
      x[a] = lo + (idx[static_cast<std::size_t>(a)] + 1) * (hi - lo) / (per_axis + 1);
    }
    out.push_back(x);
    int a = n - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == per_axis) idx[static_cast<std::size_t>(a--)] = 0;
    if (a < 0) break;
  }
  return out;
}

double GeometryResiduals::worst() const {
  return std::max({metric_compatibility, curvature_symmetry, em_closure, em_antisymmetry, torsion,
                   total_consistency, metric_symmetry});
}

std::vector<std::pair<std::string, double>> GeometryResiduals::rows() const {
  return {{"metric_compatibility", metric_compatibility},
          {"curvature_symmetry", curvature_symmetry},
          {"em_closure", em_closure},
          {"em_antisymmetry", em_antisymmetry},
          {"torsion", torsion},
          {"total_consistency", total_consistency},
          {"metric_symmetry", metric_symmetry},
          {"min_metric_eigenvalue", min_metric_eigenvalue}};
}

GeometryResiduals validate_geometry(const GeometryBundle& b, const ValidationOptions& opts) {
  const int n = b.dim();
  const int d = n + 1;
  const double h = b.fd_step;
  std::vector<double> times = opts.times;
  if (times.empty()) times = {b.chart.t0, b.chart.t0 + b.chart.time_step};
  GeometryResiduals res;
  res.min_metric_eigenvalue = std::numeric_limits<double>::infinity();
  auto bump = [](double& slot, double v) { slot = std::max(slot, std::abs(v)); };

  for (double t : times) {
    for (const Vec& x : interior_samples(b.chart, opts.samples_per_axis)) {
      ++res.samples;
      const Mat g = b.metric(t, x);
      bump(res.metric_symmetry, (g - g.transpose()).cwiseAbs().maxCoeff());
      const Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (g + g.transpose()));
      res.min_metric_eigenvalue = std::min(res.min_metric_eigenvalue, eig.eigenvalues().minCoeff());

      const Connection k = b.total(t, x);
      const Mat f = b.em(t, x);
      bump(res.em_antisymmetry, (f + f.transpose()).cwiseAbs().maxCoeff());
      bump(res.total_consistency, (k - compose_total_connection(b.grav(t, x), f, g)).max_abs());

      for (int l = 0; l < d; ++l)
        for (int m = 0; m < d; ++m)
          for (int i = 0; i < n; ++i) bump(res.torsion, k(l, i, m) - k(m, i, l));

      for (int l = 0; l < d; ++l) {
        const Mat dg = partial(b.metric, t, x, l, h);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double v = dg(i, j);
            for (int s = 0; s < n; ++s) v += k(l, s, i + 1) * g(s, j) + k(l, s, j + 1) * g(i, s);
            bump(res.metric_compatibility, v);
          }
      }

      std::vector<Mat> df;
      for (int l = 0; l < d; ++l) df.push_back(partial(b.em, t, x, l, h));
      for (int l = 0; l < d; ++l)
        for (int m = l + 1; m < d; ++m)
          for (int q = m + 1; q < d; ++q)
            bump(res.em_closure, df[static_cast<std::size_t>(l)](m, q) + df[static_cast<std::size_t>(m)](q, l) +
                                     df[static_cast<std::size_t>(q)](l, m));

      // Q^{ij}_{lm} = G^{jk} R^i_{l k m} must equal Q^{ji}_{ml}
      const auto r = riemann(b.grav, n, t, x, h);
      const Mat ginv = g.inverse();
      auto q = [&](int i, int j, int l, int m) {
        double v = 0.0;
        for (int kk = 0; kk < n; ++kk) v += ginv(j, kk) * r[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)](kk + 1, m);
        return v;
      };
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < d; ++l)
            for (int m = 0; m < d; ++m) bump(res.curvature_symmetry, q(i, j, l, m) - q(j, i, m, l));
    }
  }
  return res;
}

}  // namespace cqm
