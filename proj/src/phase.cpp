#include "cqm/phase.hpp"

#include <cmath>
#include <string>

#include "cqm/errors.hpp"
#include "cqm/stencil.hpp"

namespace cqm {

namespace {

PhasePoint from_coords(const Vec& z, int n) {
  return {z[0], z.segment(1, n), z.segment(1 + n, n)};
}

Vec to_coords(const PhasePoint& p) {
  const auto n = p.x.size();
  Vec z(1 + 2 * n);
  z << p.t, p.x, p.v;
  return z;
}

}  // namespace

Mat omega_components(const Mat& g, const Connection& k, const Vec& v) {
  const int n = static_cast<int>(v.size());
  const int d = 2 * n + 1;
  std::vector<Vec> theta(static_cast<std::size_t>(n), Vec::Zero(d));
  std::vector<Vec> omega(static_cast<std::size_t>(n), Vec::Zero(d));
  for (int i = 0; i < n; ++i) {
    Vec& th = theta[static_cast<std::size_t>(i)];
    th[1 + n + i] = 1.0;
    for (int l = 0; l <= n; ++l) {
      double c = k(l, i, 0);
      for (int h = 0; h < n; ++h) c += k(l, i, h + 1) * v[h];
      th[l] -= c;
    }
    Vec& om = omega[static_cast<std::size_t>(i)];
    om[1 + i] = 1.0;
    om[0] = -v[i];
  }
  Mat out = Mat::Zero(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Vec& a = theta[static_cast<std::size_t>(i)];
      const Vec& c = omega[static_cast<std::size_t>(j)];
      out += g(i, j) * (a * c.transpose() - c * a.transpose());
    }
  return out;
}

CosymplecticForm build_omega(const GeometryBundle& bundle) {
  return CosymplecticForm(bundle.dim(), [b = bundle](const PhasePoint& p) {
    return omega_components(b.metric(p.t, p.x), b.total(p.t, p.x), p.v);
  });
}

int form_rank(const Mat& omega, double rel_tol) {
  const Eigen::JacobiSVD<Mat> svd(omega);
  const Vec s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * s[0]) ++r;
  return r;
}

double omega_closure_residual(const CosymplecticForm& omega, const std::vector<PhasePoint>& points,
                              double fd_step) {
  const int n = omega.dim();
  const int d = 2 * n + 1;
  double worst = 0.0;
  for (const auto& p : points) {
    const Vec z = to_coords(p);
    std::vector<Mat> dom;
    for (int a = 0; a < d; ++a)
      dom.push_back(derivative(
          [&](double s) {
            Vec y = z;
            y[a] += s;
            return omega(from_coords(y, n));
          },
          fd_step));
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b)
        for (int c = b + 1; c < d; ++c) {
          const double v = dom[static_cast<std::size_t>(a)](b, c) + dom[static_cast<std::size_t>(b)](c, a) +
                           dom[static_cast<std::size_t>(c)](a, b);
          worst = std::max(worst, std::abs(v));
        }
  }
  return worst;
}

Vec second_order_acceleration(const Connection& k, const Vec& v) {
  const int n = k.dim();
  Vec a(n);
  for (int h = 0; h < n; ++h) {
    double acc = k(0, h, 0);
    for (int j = 0; j < n; ++j) {
      acc += 2.0 * k(0, h, j + 1) * v[j];
      for (int i = 0; i < n; ++i) acc += k(i + 1, h, j + 1) * v[i] * v[j];
    }
    a[h] = acc;
  }
  return a;
}

Vec SecondOrderConnection::vector_at(const PhasePoint& p) const {
  Vec out(1 + 2 * n_);
  out << 1.0, p.v, accel_(p);
  return out;
}

SecondOrderConnection build_gamma(const GeometryBundle& bundle) {
  return SecondOrderConnection(bundle.dim(), [b = bundle](const PhasePoint& p) {
    const Mat g = b.metric(p.t, p.x);
    if (!(std::abs(g.determinant()) > 1e-300))
      throw DegeneracyError("singular spacelike metric at t=" + std::to_string(p.t));
    return second_order_acceleration(b.total(p.t, p.x), p.v);
  });
}

double contraction_residual(const CosymplecticForm& omega, const SecondOrderConnection& gamma,
                            const PhasePoint& p) {
  return (omega(p).transpose() * gamma.vector_at(p)).cwiseAbs().maxCoeff();
}

Trajectory integrate_newton(const SecondOrderConnection& gamma, const FibredChart& chart,
                            const PhasePoint& start, double t_end, int steps) {
  if (steps < 1) throw DomainError("integrate_newton needs at least one step");
  if (!chart.contains(start.x)) throw BoundaryError("start point outside the chart", start.t);
  const double dt = (t_end - start.t) / steps;
  Trajectory out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(start);
  PhasePoint p = start;
  auto accel = [&](double t, const Vec& x, const Vec& v) { return gamma(PhasePoint{t, x, v}); };
  for (int s = 0; s < steps; ++s) {
    const double t = start.t + s * dt;
    const Vec k1x = p.v;
    const Vec k1v = accel(t, p.x, p.v);
    const Vec k2x = p.v + 0.5 * dt * k1v;
    const Vec k2v = accel(t + 0.5 * dt, p.x + 0.5 * dt * k1x, k2x);
    const Vec k3x = p.v + 0.5 * dt * k2v;
    const Vec k3v = accel(t + 0.5 * dt, p.x + 0.5 * dt * k2x, k3x);
    const Vec k4x = p.v + dt * k3v;
    const Vec k4v = accel(t + dt, p.x + dt * k3x, k4x);
    p.x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    p.v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    p.t = start.t + (s + 1) * dt;
    if (!chart.contains(p.x))
      throw BoundaryError("trajectory left the chart at t=" + std::to_string(p.t), p.t);
    out.push_back(p);
  }
  return out;
}

double euler_lagrange_residual(const GeometryBundle& bundle, const SecondOrderConnection& gamma,
                               const Trajectory& traj) {
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    const double dt = traj[k + 1].t - traj[k - 1].t;
    const Vec a = (traj[k + 1].v - traj[k - 1].v) / dt;
    const Vec r = bundle.metric(traj[k].t, traj[k].x) * (a - gamma(traj[k]));
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

PoincareCartanSplit poincare_cartan_split(const GeometryBundle& bundle) {
  PoincareCartanSplit s;
  s.lagrangian = [b = bundle](const PhasePoint& p) {
    const Vec a = b.potential(p.t, p.x);
    const int n = b.dim();
    return 0.5 * p.v.dot(b.metric(p.t, p.x) * p.v) + a.tail(n).dot(p.v) + a[0];
  };
  s.hamiltonian = [b = bundle](const PhasePoint& p) {
    return 0.5 * p.v.dot(b.metric(p.t, p.x) * p.v) - b.potential(p.t, p.x)[0];
  };
  s.momentum = [b = bundle](const PhasePoint& p) {
    return Vec(b.metric(p.t, p.x) * p.v + b.potential(p.t, p.x).tail(b.dim()));
  };
  return s;
}

Vec hamiltonian_lift(const Vec& df, const Mat& omega) {
  const auto d = omega.rows();
  const auto n = (d - 1) / 2;
  // i_X Omega = Omega(X, .) = -(Omega X); solve on the vertical block, which
  // is invertible exactly when Omega has rank 2n.
  Eigen::FullPivLU<Mat> lu(omega.bottomRightCorner(2 * n, 2 * n));
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) throw DegeneracyError("degenerate cosymplectic form");
  const Vec xv = lu.solve(-df.tail(2 * n));
  Vec out = Vec::Zero(d);
  out.tail(2 * n) = xv;
  return out;
}

double poisson_from_differentials(const Vec& df, const Vec& dg, const Mat& omega) {
  return dg.dot(hamiltonian_lift(df, omega));
}

Vec phase_gradient(const PhaseFunction& f, const PhasePoint& p, double fd_step) {
  const auto n = static_cast<int>(p.x.size());
  const Vec z = to_coords(p);
  Vec grad(z.size());
  for (Eigen::Index a = 0; a < z.size(); ++a)
    grad[a] = derivative(
        [&](double s) {
          Vec y = z;
          y[a] += s;
          return f(from_coords(y, n));
        },
        fd_step);
  return grad;
}

double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g, const CosymplecticForm& omega,
                       const PhasePoint& at, double fd_step) {
  return poisson_from_differentials(phase_gradient(f, at, fd_step), phase_gradient(g, at, fd_step), omega(at));
}

}  // namespace cqm
