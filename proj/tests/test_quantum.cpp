#include <doctest.h>

#include <cmath>
#include <random>

#include "cqm/errors.hpp"
#include "cqm/quantum.hpp"
#include "cqm/stencil.hpp"
#include "support.hpp"

using namespace cqm;
using namespace cqm::testing;

namespace {

constexpr Complex I{0.0, 1.0};

SpacetimeWave plane_wave(double k) {
  return [k](double t, const Vec& x) { return std::exp(I * (k * x[0] - 0.5 * k * k * t)); };
}

// Gaussian packet; compactly supported to round-off on the test charts.
SpacetimeWave packet(const Vec& centre, const Vec& momentum, double width, double omega = 0.0) {
  return [=](double t, const Vec& x) {
    const Vec d = x - centre;
    return std::exp(-d.squaredNorm() / (2.0 * width * width) + I * (momentum.dot(x) - omega * t));
  };
}

SpacetimeWave random_packet(std::mt19937_64& rng, int n, double spread = 1.0, double width = 0.7) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec c(n), p(n);
  for (int i = 0; i < n; ++i) {
    c[i] = spread * u(rng);
    p[i] = 2.0 * u(rng);
  }
  const double omega = u(rng);
  return packet(c, p, width * (1.0 + 0.2 * u(rng)), omega);
}

// l = 1 harmonic on the stereographic sphere chart: the ambient coordinate X / a.
SpacetimeWave sphere_y1(double a) {
  return [a](double, const Vec& x) { return Complex(2.0 * a * x[0] / (a * a + x.squaredNorm())); };
}

GeometryBundle flat1(double lo = -6, double hi = 6, int points = 64, VectorField pot = nullptr) {
  return flat_bundle(box_chart(1, lo, hi, points), std::move(pot));
}

double max_abs_diff(const SpacetimeWave& a, const SpacetimeWave& b, const std::vector<Vec>& pts, double t = 0.0) {
  double m = 0.0;
  for (const auto& x : pts) m = std::max(m, std::abs(a(t, x) - b(t, x)));
  return m;
}

std::vector<Vec> line_points(double lo, double hi, int count) {
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) out.push_back(vec({lo + (hi - lo) * i / (count - 1)}));
  return out;
}

}  // namespace

TEST_CASE("covariant derivative") {
  const auto pts = line_points(-2, 2, 9);
  const auto flat = flat1();
  const SpacetimeWave one = [](double, const Vec&) { return Complex(1.0); };
  CHECK(max_abs_diff(covariant_derivative(one, flat, 1), [](double, const Vec&) { return Complex(0.0); }, pts) == 0.0);

  const double a = 0.7;
  const auto gauged = flat1(-6, 6, 64, [a](double, const Vec&) { return vec({0.0, a}); });
  const SpacetimeWave phase = [a](double, const Vec& x) { return std::exp(I * a * x[0]); };
  const auto zero = [](double, const Vec&) { return Complex(0.0); };
  CHECK(max_abs_diff(covariant_derivative(phase, gauged, 1), zero, pts) < 1e-12);

  const double k = 1.3;
  const auto pw = plane_wave(k);
  const SpacetimeWave ikpsi = [&](double t, const Vec& x) { return I * k * pw(t, x); };
  CHECK(max_abs_diff(covariant_derivative(pw, flat, 1), ikpsi, pts) < 1e-10);

  SUBCASE("grid version") {
    const Grid grid(gauged.chart);
    const CVec d = covariant_difference(gauged, grid, 0.0, 0) * WaveFunction::sample(phase, grid, 0.0).values;
    double inner = 0.0;
    for (std::ptrdiff_t n = 1; n + 1 < grid.size(); ++n) inner = std::max(inner, std::abs(d[n]));
    CHECK(inner < 1e-12);

    // O(h^2) on a plane wave
    const auto err = [&](int points) {
      const auto b = flat1(-6, 6, points);
      const Grid g(b.chart);
      const auto w = WaveFunction::sample(pw, g, 0.0);
      const CVec dw = covariant_difference(b, g, 0.0, 0) * w.values;
      double e = 0.0;
      for (std::ptrdiff_t n = 1; n + 1 < g.size(); ++n) e = std::max(e, std::abs(dw[n] - I * k * w.values[n]));
      return e;
    };
    const double ratio = err(199) / err(399);
    CHECK(ratio > 3.8);
    CHECK(ratio < 4.2);
  }
}

TEST_CASE("curved Laplacian") {
  const auto pts = line_points(-2, 2, 9);
  const double k = 0.9;
  const auto pw = plane_wave(k);
  const SpacetimeWave expect = [&](double t, const Vec& x) { return -k * k * pw(t, x); };
  CHECK(max_abs_diff(curved_laplacian(pw, flat1()), expect, pts) < 1e-9);

  SUBCASE("sphere eigenfunction") {
    const double a = 1.0;
    const auto b = sphere_bundle(a, box_chart(2, -1, 1, 128));
    const auto y1 = sphere_y1(a);
    const auto lap = curved_laplacian(y1, b);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      const Vec x = vec({u(rng), u(rng)});
      worst = std::max(worst, std::abs(lap(0.0, x) + 2.0 / (a * a) * y1(0.0, x)));
    }
    CHECK(worst < 1e-6);

    // discrete: W^{-1} M_lap on the 128^2 grid, interior nodes
    const Grid grid(b.chart);
    const Vec w = node_density(b, grid, 0.0);
    const auto psi = WaveFunction::sample(y1, grid, 0.0);
    const CVec lp = (weighted_laplacian(b, grid, 0.0) * psi.values).cwiseQuotient(w.cast<Complex>());
    double disc = 0.0;
    for (std::ptrdiff_t n = 0; n < grid.size(); ++n)
      if (grid.wall_distance(n) > 8) disc = std::max(disc, std::abs(lp[n] + 2.0 * psi.values[n]));
    CHECK(disc < 1e-3);
  }
}

TEST_CASE("Schrodinger operator") {
  const auto pts = line_points(-2, 2, 9);
  const auto flat = flat1();
  const auto zero = [](double, const Vec&) { return Complex(0.0); };
  CHECK(max_abs_diff(schrodinger_apply(plane_wave(1.1), flat, 0.0), zero, pts, 0.3) < 1e-9);

  const double a = 1.0;
  const auto b = sphere_bundle(a, box_chart(2, -1, 1, 16));
  CHECK(b.log_density_derivative(0.2, vec({0.3, 0.1}), 0) == 0.0);
  const auto psi = packet(vec({0.1, 0.0}), vec({0.5, -0.3}), 0.6, 0.4);
  const auto s0 = schrodinger_apply(psi, b, 0.0), s1 = schrodinger_apply(psi, b, 1.0);
  for (const auto& x : {vec({0.2, 0.1}), vec({-0.4, 0.5})}) {
    const double r = scalar_curvature_at(b.metric, 0.0, x, b.fd_step);
    CHECK(r == doctest::Approx(2.0 / (a * a)).epsilon(1e-6));
    const Complex diff = s0(0.0, x) - s1(0.0, x) - (-0.5 * I * r * psi(0.0, x));
    CHECK(std::abs(diff) < 1e-12);
  }
}

TEST_CASE("quantum vector fields and Lie actions") {
  const auto flat = flat1();
  const Vec x = vec({0.4});
  const auto yx = quantum_vector_field(builtin::coordinate(1, 0), flat);
  CHECK(yx.y0(0.0, x) == 0.0);
  CHECK(yx.yj(0.0, x).norm() == 0.0);
  CHECK(std::abs(yx.yz(0.0, x) - I * 0.4) < 1e-15);
  const auto yp = quantum_vector_field(builtin::momentum(flat, 0), flat);
  CHECK(yp.yj(0.0, x)[0] == -1.0);
  CHECK(std::abs(yp.yz(0.0, x)) < 1e-15);
  const auto yh = quantum_vector_field(builtin::hamiltonian(flat), flat);
  CHECK(yh.y0(0.0, x) == 1.0);
  CHECK(std::abs(yh.yz(0.0, x)) < 1e-15);

  const auto pts = line_points(-2, 2, 9);
  const double k = 0.8;
  const auto pw = plane_wave(k);
  const SpacetimeWave kpsi = [&](double t, const Vec& y) { return k * pw(t, y); };
  CHECK(max_abs_diff(lie_action(builtin::momentum(flat, 0), pw, flat), kpsi, pts) < 1e-10);
  const SpacetimeWave xpsi = [&](double t, const Vec& y) { return y[0] * pw(t, y); };
  CHECK(max_abs_diff(lie_action(builtin::coordinate(1, 0), pw, flat), xpsi, pts) < 1e-14);

  // stationary state of the oscillator A0 = -x^2/2: phi = exp(-x^2/2), E = 1/2
  const auto osc = flat1(-6, 6, 64, [](double, const Vec& y) { return vec({-0.5 * y[0] * y[0], 0.0}); });
  const SpacetimeWave ground = [](double t, const Vec& y) { return std::exp(-0.5 * y[0] * y[0] - 0.5 * I * t); };
  const SpacetimeWave half = [&](double t, const Vec& y) { return 0.5 * ground(t, y); };
  CHECK(max_abs_diff(lie_action(builtin::hamiltonian(osc), ground, osc), half, pts, 0.7) < 1e-10);
  const auto zero = [](double, const Vec&) { return Complex(0.0); };
  CHECK(max_abs_diff(schrodinger_apply(ground, osc, 0.0), zero, pts, 0.7) < 1e-10);

  SUBCASE("curved: displayed forms of Z[P_j] and projection onto X[f]") {
    const auto b = sphere_bundle(1.0, box_chart(2, -1, 1, 16));
    const auto psi = packet(vec({0.1, -0.1}), vec({0.3, 0.7}), 0.5);
    for (int j = 0; j < 2; ++j) {
      const auto z = lie_action(builtin::momentum(b, j), psi, b);
      for (const auto& y : {vec({0.3, 0.2}), vec({-0.5, 0.1})}) {
        const Complex dj = partial(psi, 0.0, y, j + 1, 1e-3);
        const double half_log = b.log_density_derivative(0.0, y, j + 1) * 0.5;
        CHECK(std::abs(z(0.0, y) - (-I * (dj + half_log * psi(0.0, y)))) < 1e-9);
      }
    }
    std::mt19937_64 rng(3);
    const auto cb = random_admissible_bundle(rng, 2);
    const auto f = SpecialQuadratic(2, [](double t, const Vec& y) {
      return QuadraticCoefficients{1.0 + 0.5 * t, vec({std::sin(y[0] + t), y[0] * y[1]}), std::cos(y[1])};
    });
    const auto qv = quantum_vector_field(f, cb);
    const auto lift = tangent_lift(f, cb);
    for (const auto& y : {vec({0.3, 0.2}), vec({-0.5, 0.1})}) {
      CHECK(qv.y0(0.4, y) == doctest::Approx(lift(0.4, y)[0]));
      CHECK((qv.yj(0.4, y) - lift(0.4, y).tail(2)).norm() < 1e-14);
    }
    CHECK_THROWS_AS(quantum_vector_field(SpecialQuadratic::from_fields(
                                             2, [](double, const Vec& y) { return y[0]; }, nullptr, nullptr),
                                         cb),
                    ClassificationError);
  }
}

namespace {

double weighted_inner_residual(const QuantumOperator& op, const CVec& a, const CVec& b) {
  const Vec& w = op.weights();
  const auto ip = [&](const CVec& u, const CVec& v) { return (u.conjugate().cwiseProduct(v).cwiseProduct(w.cast<Complex>())).sum(); };
  return std::abs(ip(op.apply(a), b) - ip(a, op.apply(b))) / (1.0 + std::abs(ip(op.apply(a), b)));
}

SpecialQuadratic random_affine(std::mt19937_64& rng, int n) {
  std::vector<RandomWave> fi;
  for (int i = 0; i < n; ++i) fi.emplace_back(rng, n, 2, 0.8, true);
  RandomWave base(rng, n, 2, 0.8, true);
  return SpecialQuadratic(n, [=](double t, const Vec& x) {
    QuadraticCoefficients c;
    c.fi.resize(n);
    for (int i = 0; i < n; ++i) c.fi[i] = fi[static_cast<std::size_t>(i)](t, x);
    c.base = base(t, x);
    return c;
  });
}

SpecialQuadratic random_quantisable(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  const double a = u(rng), b = u(rng) - 1.0;
  const auto aff = random_affine(rng, n);
  return SpecialQuadratic(n, [=](double t, const Vec& x) {
    auto c = aff.coefficients(t, x);
    c.f0 = a + b * t;
    return c;
  });
}

}  // namespace

TEST_CASE("quantum operators: continuum forms") {
  const auto flat = flat1();
  const auto pts = line_points(-2, 2, 9);
  const auto psi = packet(vec({0.2}), vec({0.6}), 0.8);
  const SpacetimeWave xpsi = [&](double t, const Vec& y) { return y[0] * psi(t, y); };
  CHECK(max_abs_diff(operator_apply(builtin::coordinate(1, 0), psi, flat, 0.0), xpsi, pts) < 1e-14);
  const SpacetimeWave dpsi = [&](double t, const Vec& y) { return -I * partial(psi, t, y, 1, 1e-3); };
  CHECK(max_abs_diff(operator_apply(builtin::momentum(flat, 0), psi, flat, 0.0), dpsi, pts) < 1e-9);
  const SpacetimeWave lap = [&](double t, const Vec& y) { return -0.5 * second_partial(psi, t, y, 1, 1e-3); };
  CHECK(max_abs_diff(operator_apply(builtin::hamiltonian(flat), psi, flat, 0.0), lap, pts) < 1e-6);

  SUBCASE("f^ = Z[f] - i f0 S on a curved bundle") {
    std::mt19937_64 rng(21);
    const auto b = random_admissible_bundle(rng, 2);
    for (int trial = 0; trial < 3; ++trial) {
      const auto f = random_quantisable(rng, 2);
      const auto p = random_packet(rng, 2, 0.3);
      const auto fh = operator_apply(f, p, b, 0.7);
      const auto z = lie_action(f, p, b);
      const auto s = schrodinger_apply(p, b, 0.7);
      for (const auto& y : {vec({0.1, 0.2}), vec({-0.3, 0.4})}) {
        const double t = 0.2;
        CHECK(std::abs(fh(t, y) - (z(t, y) - I * f.f0(t, y) * s(t, y))) < 1e-7);
      }
    }
  }
}

TEST_CASE("quantum operators: grid") {
  SUBCASE("flat reduction is exact") {
    const auto flat = flat1(-6, 6, 128);
    const Grid g(flat.chart);
    const double h = g.spacing(0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    CVec psi(g.size());
    for (auto& v : psi) v = Complex(nd(rng), nd(rng));
    const CVec xh = quantum_operator(builtin::coordinate(1, 0), flat, 0.0).apply(psi);
    const CVec ph = quantum_operator(builtin::momentum(flat, 0), flat, 0.0).apply(psi);
    const CVec hh = quantum_operator(builtin::hamiltonian(flat), flat, 0.0).apply(psi);
    double ex = 0.0, ep = 0.0, eh = 0.0;
    for (std::ptrdiff_t i = 0; i < g.size(); ++i) {
      const Complex l = i > 0 ? psi[i - 1] : 0.0, r = i + 1 < g.size() ? psi[i + 1] : 0.0;
      ex = std::max(ex, std::abs(xh[i] - g.coordinate(0, static_cast<int>(i)) * psi[i]));
      ep = std::max(ep, std::abs(ph[i] + I * (r - l) / (2 * h)));
      eh = std::max(eh, std::abs(hh[i] + 0.5 * (r - 2.0 * psi[i] + l) / (h * h)));
    }
    CHECK(ex < 1e-14);
    CHECK(ep < 1e-10);
    CHECK(eh < 1e-10);
  }

  SUBCASE("Hermitian on flat and sphere patches") {
    std::mt19937_64 rng(8);
    const auto sphere = sphere_bundle(1.0, box_chart(2, -1, 1, 24));
    const auto gauged = make_bundle([] {
      BundleInputs in;
      in.chart = box_chart(2, -3, 3, 24);
      in.metric = [](double, const Vec&) { return Mat::Identity(2, 2).eval(); };
      in.potential = [](double, const Vec& x) { return vec({-0.5 * x.squaredNorm(), -0.5 * x[1], 0.5 * x[0]}); };
      return in;
    }());
    for (const auto* b : {&sphere, &gauged}) {
      const Grid g(b->chart);
      std::vector<SpecialQuadratic> battery{builtin::coordinate(2, 0), builtin::momentum(*b, 1),
                                            builtin::hamiltonian(*b), random_affine(rng, 2),
                                            random_quantisable(rng, 2)};
      for (const auto& f : battery) {
        const auto op = quantum_operator(f, *b, 1.0, {2, 0.1});
        for (int s = 0; s < 3; ++s) {
          const auto a = WaveFunction::sample(random_packet(rng, 2, 0.3, 0.3), g, 0.1);
          const auto c = WaveFunction::sample(random_packet(rng, 2, 0.3, 0.3), g, 0.1);
          CHECK(weighted_inner_residual(op, a.values, c.values) < 1e-12);
        }
      }
    }
  }

  SUBCASE("agrees with the continuum operator to second order") {
    std::mt19937_64 rng(9);
    const auto f = random_quantisable(rng, 2);
    const auto psi = random_packet(rng, 2, 0.2, 0.35);
    auto err = [&](int points) {
      const auto b = sphere_bundle(1.0, box_chart(2, -1, 1, points));
      const Grid g(b.chart);
      const CVec disc = quantum_operator(f, b, 0.5, {2, 0.0}).apply(WaveFunction::sample(psi, g, 0.0).values);
      const auto cont = operator_apply(f, psi, b, 0.5);
      double e = 0.0;
      for (std::ptrdiff_t k = 0; k < g.size(); ++k)
        if (g.point(k).cwiseAbs().maxCoeff() <= 0.5)
          e = std::max(e, std::abs(disc[k] - cont(0.0, g.point(k))));
      return e;
    };
    const double ratio = err(39) / err(79);
    MESSAGE("discrete/continuum error ratio " << ratio);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }

  SUBCASE("high-order stencils") {
    const auto b = flat_bundle(box_chart(1, -8, 8, 200),
                               [](double, const Vec& x) { return vec({-0.5 * x[0] * x[0], 0.0}); });
    const Grid g(b.chart);
    const auto ground = WaveFunction::sample(
        [](double, const Vec& x) { return Complex(std::exp(-0.5 * x[0] * x[0])); }, g, 0.0);
    for (int order : {2, 4, 6, 8}) {
      const CVec r = quantum_operator(builtin::hamiltonian(b), b, 0.0, {order, 0.0}).apply(ground.values) -
                     0.5 * ground.values;
      MESSAGE("order " << order << " residual " << r.cwiseAbs().maxCoeff());
      if (order == 8) CHECK(r.cwiseAbs().maxCoeff() < 1e-8);
    }
    CHECK_THROWS_AS(quantum_operator(builtin::hamiltonian(b), sphere_bundle(1.0, box_chart(1, -1, 1, 20)), 0.0, {4, 0.0}),
                    DomainError);
  }

  SUBCASE("injectivity probe") {
    std::mt19937_64 rng(12);
    const auto b = sphere_bundle(1.0, box_chart(2, -1, 1, 20));
    const Grid g(b.chart);
    const auto f = random_quantisable(rng, 2);
    std::vector<CVec> states;
    for (int s = 0; s < 4; ++s) states.push_back(WaveFunction::sample(random_packet(rng, 2, 0.3, 0.3), g, 0.0).values);
    const auto same = quantum_operator(f, b, 0.0);
    for (int which = 0; which < 3; ++which) {
      const SpecialQuadratic bent(2, [f, which](double t, const Vec& x) {
        auto c = f.coefficients(t, x);
        if (which == 0) c.f0 += 1e-3;
        if (which == 1) c.fi[1] += 1e-3 * x[0];
        if (which == 2) c.base += 1e-3 * std::cos(x[1]);
        return c;
      });
      const auto other = quantum_operator(bent, b, 0.0);
      double diff = 0.0, self = 0.0;
      for (const auto& s : states) {
        diff = std::max(diff, (other.apply(s) - same.apply(s)).cwiseAbs().maxCoeff());
        self = std::max(self, (quantum_operator(f, b, 0.0).apply(s) - same.apply(s)).cwiseAbs().maxCoeff());
      }
      CHECK(diff > 1e-5);
      CHECK(self == 0.0);
    }
  }
}

TEST_CASE("commutator identity") {
  const auto flat = flat1(-6, 6, 40);
  const auto psi = packet(vec({0.3}), vec({0.5}), 0.7, 0.2);
  const auto x1 = builtin::coordinate(1, 0), p1 = builtin::momentum(flat, 0);
  const auto xp = commutator_check(x1, p1, psi, flat, 0.0);
  CHECK(xp.residual < 1e-8);
  CHECK(xp.lhs_scale > 0.9);
  CHECK_FALSE(xp.obstruction_active);
  const auto xx = commutator_check(p1, p1, psi, flat, 0.0);
  CHECK(xx.residual < 1e-12);
  CHECK(xx.lhs_scale < 1e-12);

  SUBCASE("active obstruction, oscillator") {
    const auto osc = flat1(-6, 6, 40, [](double, const Vec& y) { return vec({-0.5 * y[0] * y[0], 0.0}); });
    const auto rep = commutator_check(builtin::hamiltonian(osc), builtin::momentum(osc, 0), psi, osc, 0.0);
    CHECK(rep.obstruction_active);
    CHECK(rep.obstruction_scale > 0.1);
    CHECK(rep.residual < 1e-6);
    const auto free = commutator_check(builtin::hamiltonian(flat), p1, psi, flat, 0.0);
    CHECK(free.residual < 1e-6);
  }

  SUBCASE("curved bundles") {
    std::mt19937_64 rng(31);
    BundleInputs in;
    in.chart = box_chart(2, -4, 4, 12);
    in.metric = sphere_metric(3.0);
    in.potential = [](double t, const Vec& x) { return vec({0.1 * std::sin(x[0] + t), 0.2 * x[1], -0.1 * x[0]}); };
    const auto b = make_bundle(in);
    const auto state = packet(vec({0.2, -0.1}), vec({0.4, 0.1}), 0.4, 0.3);
    const auto aff = commutator_check(random_affine(rng, 2), random_affine(rng, 2), state, b, 0.0);
    CHECK_FALSE(aff.obstruction_active);
    CHECK(aff.residual < 1e-8);
    const auto q = commutator_check(random_quantisable(rng, 2), random_affine(rng, 2), state, b, 1.0);
    CHECK(q.obstruction_active);
    MESSAGE("curved quantisable commutator residual " << q.residual << " scale " << q.lhs_scale);
    CHECK(q.residual < 1e-6 * (1.0 + q.lhs_scale));
  }

  SUBCASE("test states must vanish at the walls") {
    CHECK_THROWS_AS(commutator_check(x1, p1, plane_wave(1.0), flat, 0.0), TestStateError);
  }
}

TEST_CASE("probability current") {
  const double k = 0.9;
  const auto b = flat1(-6, 6, 400);
  const Grid g(b.chart);
  const auto j = probability_current(WaveFunction::sample(plane_wave(k), g, 0.3), b);
  for (std::ptrdiff_t n = 1; n + 1 < g.size(); ++n) {
    CHECK(j.j0[n] == doctest::Approx(1.0));
    CHECK(std::abs(j.j[0][n] - k) < 1e-3);
  }
  const auto real = probability_current(
      WaveFunction::sample([](double, const Vec& x) { return Complex(std::exp(-x[0] * x[0])); }, g, 0.0), b);
  CHECK(real.j[0].cwiseAbs().maxCoeff() == 0.0);

  // free Gaussian, exact solution: the residual falls as h^2
  const SpacetimeWave gauss = [](double t, const Vec& x) {
    const Complex s = 1.0 + I * t;
    return std::exp(-x[0] * x[0] / (2.0 * s)) / std::sqrt(s);
  };
  const auto residual = [&](int points) {
    const auto wide = flat1(-10, 10, points);
    const Grid gw(wide.chart);
    const double dt = 1e-4;
    return continuity_residual(WaveFunction::sample(gauss, gw, 0.5 - dt), WaveFunction::sample(gauss, gw, 0.5),
                               WaveFunction::sample(gauss, gw, 0.5 + dt), wide);
  };
  const double r256 = residual(255), r512 = residual(511);
  MESSAGE("continuity residual " << r256 << " " << r512);
  CHECK(r256 / r512 > 3.5);
  CHECK(r512 < 5e-4);
}

TEST_CASE("variational cross-check") {
  const auto b = flat1(-5, 5, 48);
  const ActionLattice lat{0.0, 1.0, 41};
  std::mt19937_64 rng(41);
  const SpacetimeWave bump = [](double t, const Vec& x) {
    const double s = t;  // lattice spans [0, 1]
    if (s <= 0.0 || s >= 1.0) return Complex(0.0);
    return Complex(std::exp(-1.0 / (s * (1.0 - s))) * std::exp(-x[0] * x[0]) * 50.0);
  };
  for (int trial = 0; trial < 10; ++trial) {
    const auto psi = random_packet(rng, 1, 0.5, 0.9);
    const double k = trial % 2 ? 1.0 : 0.0;
    const double eps = 1e-3;
    const auto shifted = [&](double e) {
      return SpacetimeWave([&, e](double t, const Vec& x) { return psi(t, x) + e * bump(t, x); });
    };
    const double fd = (action(shifted(eps), b, k, lat) - action(shifted(-eps), b, k, lat)) / (2 * eps);
    const double pairing = action_variation(bump, psi, b, k, lat);
    CHECK(std::abs(fd - pairing) < 1e-5 * (1.0 + std::abs(pairing)));
  }
}
