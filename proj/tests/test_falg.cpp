#include <doctest.h>

#include <cmath>
#include <random>

#include "cqm/errors.hpp"
#include "cqm/falg.hpp"
#include "support.hpp"

using namespace cqm;
using namespace cqm::testing;

namespace {

// Pointwise oracle: Poisson bracket of the full phase functions by finite
// differences plus the gamma correction.
double bracket_oracle(const SpecialQuadratic& f, const SpecialQuadratic& g, const GeometryBundle& b,
                      const PhasePoint& p) {
  const auto ff = f.on(b), gg = g.on(b);
  const Vec gv = build_gamma(b).vector_at(p);
  return poisson_bracket(ff, gg, build_omega(b), p) + f.f0(p.t, p.x) * phase_gradient(gg, p).dot(gv) -
         g.f0(p.t, p.x) * phase_gradient(ff, p).dot(gv);
}

GeometryBundle flat2() { return flat_bundle(box_chart(2, -1, 1, 8)); }

SpecialQuadratic boost(int n) {
  // t P_1 - x^1 in a flat chart
  return SpecialQuadratic(n, [n](double t, const Vec& x) {
    Vec fi = Vec::Zero(n);
    fi[0] = t;
    return QuadraticCoefficients{0.0, fi, -x[0]};
  });
}

}  // namespace

TEST_CASE("classify") {
  const auto b = flat2();
  const auto h = classify(builtin::hamiltonian(b), b.chart);
  CHECK(h.quantisable);
  CHECK(h.constant_time);
  CHECK_FALSE(h.affine);
  const auto p = classify(builtin::momentum(b, 0), b.chart);
  CHECK(p.affine);
  CHECK_FALSE(p.spacetime);
  const auto x = classify(builtin::coordinate(2, 0), b.chart);
  CHECK(x.spacetime);
  CHECK(x.affine);
  CHECK(x.quantisable);

  std::mt19937_64 rng(1);
  const auto nq = classify(random_quadratic(rng, 2, false), b.chart);
  CHECK(nq.special_quadratic);
  CHECK_FALSE(nq.quantisable);
  CHECK_FALSE(nq.constant_time);
  const auto tq = classify(SpecialQuadratic::from_fields(2, [](double t, const Vec&) { return 1.0 + t; }, nullptr,
                                                         nullptr),
                           b.chart);
  CHECK(tq.quantisable);
  CHECK_FALSE(tq.constant_time);
}

TEST_CASE("special bracket examples") {
  const auto b = flat2();
  const Vec x0 = vec({0.2, -0.3});
  const PhasePoint p{0.1, x0, vec({0.7, -0.4})};
  const auto x1 = builtin::coordinate(2, 0), x2 = builtin::coordinate(2, 1);
  const auto p1 = builtin::momentum(b, 0);
  const auto h0 = builtin::hamiltonian(b);

  CHECK(special_bracket(x1, x2, b)(b, p) == 0.0);
  CHECK(special_bracket(x1, p1, b)(b, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bracket_oracle(x1, p1, b, p) == doctest::Approx(1.0).epsilon(1e-9));

  // The Hamiltonian commutes with the coordinates: its lift is d_0 and x^1 lifts to zero.
  const auto hx = special_bracket(h0, x1, b).coefficients(0.1, x0);
  CHECK(std::abs(hx.f0) < 1e-12);
  CHECK(hx.fi.norm() < 1e-10);
  CHECK(std::abs(hx.base) < 1e-10);

  // [[H0, t P - x]] = P
  const auto hb = special_bracket(h0, boost(2), b);
  for (const auto& q : {p, PhasePoint{0.4, vec({-0.5, 0.1}), vec({-1.0, 2.0})}})
    CHECK(hb(b, q) == doctest::Approx(p1(b, q)).epsilon(1e-10));
}

TEST_CASE("Poisson bracket of special quadratics can leave the space") {
  const auto b = flat_bundle(box_chart(1, -1, 1, 8));
  const auto f = builtin::hamiltonian(b);
  const auto g = SpecialQuadratic::from_fields(1, [](double, const Vec& x) { return x[0]; }, nullptr, nullptr);
  const auto omega = build_omega(b);
  // {v^2/2, x v^2/2} = -v^3/2, which is cubic
  for (double v : {0.5, 1.0, 2.0}) {
    const PhasePoint p{0.0, vec({0.3}), vec({v})};
    CHECK(poisson_bracket(f.on(b), g.on(b), omega, p) == doctest::Approx(-0.5 * v * v * v).epsilon(1e-8));
    CHECK(std::abs(special_bracket_at(f, g, b, p)) < 1e-10);
  }
  CHECK(bracket_extraction_residual(f, g, b, 0.0, vec({0.3})) < 1e-10);
}

TEST_CASE("special bracket on curved bundles") {
  std::mt19937_64 rng(7);
  for (int n = 1; n <= 3; ++n) {
    const auto b = random_admissible_bundle(rng, n);
    for (int trial = 0; trial < 3; ++trial) {
      const auto f = random_quadratic(rng, n, trial != 1);
      const auto g = random_quadratic(rng, n);
      const auto fg = special_bracket(f, g, b);
      const auto gf = special_bracket(g, f, b);
      for (int k = 0; k < 3; ++k) {
        const auto p = random_point(rng, n);
        CHECK(bracket_extraction_residual(f, g, b, p.t, p.x) < 1e-10);
        const double val = fg(b, p);
        CHECK(std::abs(val - bracket_oracle(f, g, b, p)) < 1e-8 * (1.0 + std::abs(val)));
        CHECK(std::abs(val - special_bracket_at(f, g, b, p)) < 1e-10 * (1.0 + std::abs(val)));
        CHECK(std::abs(val + gf(b, p)) < 1e-8);
      }
    }
  }
}

TEST_CASE("Jacobi identity") {
  std::mt19937_64 rng(11);
  const auto b = random_admissible_bundle(rng, 2);
  for (int trial = 0; trial < 2; ++trial) {
    const auto f = random_quadratic(rng, 2), g = random_quadratic(rng, 2), h = random_quadratic(rng, 2);
    const auto j1 = special_bracket(f, special_bracket(g, h, b), b);
    const auto j2 = special_bracket(g, special_bracket(h, f, b), b);
    const auto j3 = special_bracket(h, special_bracket(f, g, b), b);
    const auto p = random_point(rng, 2);
    const double a1 = j1(b, p), a2 = j2(b, p), a3 = j3(b, p);
    CHECK(std::abs(a1 + a2 + a3) < 1e-6);
    MESSAGE("jacobi terms " << a1 << " " << a2 << " " << a3);
  }
}

TEST_CASE("tangent lift") {
  const auto b = flat2();
  const Vec x = vec({0.1, 0.2});
  CHECK(tangent_lift(builtin::hamiltonian(b), b)(0.0, x).isApprox(vec({1.0, 0.0, 0.0})));
  CHECK(tangent_lift(builtin::momentum(b, 0), b)(0.0, x).isApprox(vec({0.0, -1.0, 0.0})));
  CHECK(tangent_lift(builtin::coordinate(2, 0), b)(0.0, x).norm() == 0.0);
  std::mt19937_64 rng(2);
  CHECK_THROWS_AS(tangent_lift(random_quadratic(rng, 2, false), b), ClassificationError);
  // non-quantisable functions still bracket
  CHECK_NOTHROW(special_bracket(random_quadratic(rng, 2, false), builtin::hamiltonian(b), b).coefficients(0.0, x));

  SUBCASE("morphism of Lie algebras") {
    const auto cb = random_admissible_bundle(rng, 2);
    for (int trial = 0; trial < 3; ++trial) {
      const auto f = random_quadratic(rng, 2), g = random_quadratic(rng, 2);
      const auto lhs = tangent_lift(special_bracket(f, g, cb), cb);
      const auto rhs = vector_field_commutator(tangent_lift(f, cb), tangent_lift(g, cb), 2);
      const auto p = random_point(rng, 2);
      CHECK((lhs(p.t, p.x) - rhs(p.t, p.x)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("subalgebra closure") {
  std::mt19937_64 rng(4);
  const auto b = random_admissible_bundle(rng, 2);
  const auto p1 = builtin::momentum(b, 0), p2 = builtin::momentum(b, 1);
  const auto aff = classify(special_bracket(p1, p2, b), b.chart, 1e-8);
  CHECK(aff.affine);
  const auto x1 = builtin::coordinate(2, 0);
  const auto st = SpecialQuadratic::from_fields(2, nullptr, nullptr, [](double t, const Vec& x) {
    return std::sin(x[0] * x[1]) + t;
  });
  const auto zero = special_bracket(x1, st, b);
  const auto p = random_point(rng, 2);
  CHECK(std::abs(zero(b, p)) < 1e-12);
  CHECK(classify(zero, b.chart).spacetime);
  CHECK(classify(special_bracket(builtin::hamiltonian(b), p1, b), b.chart, 1e-8).affine);
  CHECK_THROWS_AS(special_bracket(x1, builtin::coordinate(3, 0), b), DimensionError);
}
