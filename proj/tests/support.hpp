#pragma once

// Shared fixtures: closed-form bundles and random admissible bundles.

#include <cmath>
#include <random>
#include <vector>

#include "cqm/falg.hpp"

namespace cqm::testing {

inline FibredChart box_chart(int n, double lo, double hi, int points, double dt = 1e-3) {
  FibredChart c;
  c.n = n;
  c.extent.assign(static_cast<std::size_t>(n), {lo, hi});
  c.points.assign(static_cast<std::size_t>(n), points);
  c.time_step = dt;
  return c;
}

/// Round sphere of radius a in a stereographic chart: G = 4a^4/(a^2+|x|^2)^2 delta.
inline MatrixField sphere_metric(double a) {
  return [a](double, const Vec& x) {
    const double s = a * a + x.squaredNorm();
    return Mat(4.0 * std::pow(a, 4) / (s * s) * Mat::Identity(x.size(), x.size()));
  };
}

inline GeometryBundle sphere_bundle(double a, const FibredChart& chart) {
  BundleInputs in;
  in.chart = chart;
  in.metric = sphere_metric(a);
  return make_bundle(in);
}

/// Sum of a few random sinusoids in (t, x); smooth and cheap.
struct RandomWave {
  struct Term {
    double amp, omega, phase;
    std::vector<double> k;
  };
  std::vector<Term> terms;

  RandomWave(std::mt19937_64& rng, int n, int count, double amplitude, bool time_dependent) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int c = 0; c < count; ++c) {
      Term term{amplitude * u(rng), time_dependent ? 1.5 * u(rng) : 0.0, 3.0 * u(rng), {}};
      for (int a = 0; a < n; ++a) term.k.push_back(1.5 * u(rng));
      terms.push_back(term);
    }
  }

  double operator()(double t, const Vec& x) const {
    double v = 0.0;
    for (const auto& term : terms) {
      double arg = term.omega * t + term.phase;
      for (std::size_t a = 0; a < term.k.size(); ++a) arg += term.k[a] * x[static_cast<Eigen::Index>(a)];
      v += term.amp * std::sin(arg);
    }
    return v;
  }
};

/// Static curved metric, Newtonian potential and electromagnetic potential,
/// all random; admissible by construction.
inline GeometryBundle random_admissible_bundle(std::mt19937_64& rng, int n, double fd_step = 1e-3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat c = Mat::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const double e = 0.2 * u(rng);
      c(i, j) += e;
      c(j, i) += e;
    }
  c = (c * c.transpose()).eval();
  RandomWave conformal(rng, n, 3, 0.15, false);
  RandomWave newton(rng, n, 2, 0.5, true);
  std::vector<RandomWave> pot;
  for (int l = 0; l <= n; ++l) pot.emplace_back(rng, n, 2, 0.5, true);

  BundleInputs in;
  in.chart = box_chart(n, -1.0, 1.0, 16);
  in.fd_step = fd_step;
  in.metric = [c, conformal](double t, const Vec& x) { return Mat(std::exp(2.0 * conformal(t, x)) * c); };
  in.newton_potential = newton;
  in.potential = [pot](double t, const Vec& x) {
    Vec a(static_cast<Eigen::Index>(pot.size()));
    for (std::size_t l = 0; l < pot.size(); ++l) a[static_cast<Eigen::Index>(l)] = pot[l](t, x);
    return a;
  };
  return make_bundle(in);
}

// Quantisable when f0 depends on time only.
inline SpecialQuadratic random_quadratic(std::mt19937_64& rng, int n, bool quantisable = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = 0.5 * u(rng);
  RandomWave spatial(rng, n, 2, 0.5, true);
  std::vector<RandomWave> fi;
  for (int i = 0; i < n; ++i) fi.emplace_back(rng, n, 2, 0.8, true);
  RandomWave base(rng, n, 3, 0.8, true);
  return SpecialQuadratic(n, [=](double t, const Vec& x) {
    QuadraticCoefficients c;
    c.f0 = a + b * t + (quantisable ? 0.0 : spatial(t, x));
    c.fi.resize(n);
    for (int i = 0; i < n; ++i) c.fi[i] = fi[static_cast<std::size_t>(i)](t, x);
    c.base = base(t, x);
    return c;
  });
}

inline PhasePoint random_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  PhasePoint p{u(rng), Vec(n), Vec(n)};
  for (int i = 0; i < n; ++i) {
    p.x[i] = u(rng);
    p.v[i] = 2.0 * u(rng);
  }
  return p;
}

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

}  // namespace cqm::testing
