#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "cqm/fields.hpp"

namespace cqm::units {

/// Exact rational with a positive denominator, always in lowest terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// Parses "3", "-1", "3/2".
  static Rational parse(const std::string& text);
  std::string str() const;

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a) { return {-a.num_, a.den_}; }
  friend Rational operator-(Rational a, Rational b) { return a + (-b); }
  friend Rational operator*(Rational a, Rational b);
  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Exponents of the unit spaces T (time), L (length), M (mass).
struct DimTag {
  Rational t_exp;
  Rational l_exp;
  Rational m_exp;

  static DimTag none() { return {}; }
  static DimTag time() { return {1, 0, 0}; }
  static DimTag length() { return {0, 1, 0}; }
  static DimTag mass() { return {0, 0, 1}; }
  /// T* (x) L^2 (x) M
  static DimTag planck() { return {-1, 2, 1}; }
  /// T* (x) L^{3/2} (x) M^{1/2}
  static DimTag charge() { return {-1, Rational(3, 2), Rational(1, 2)}; }

  DimTag inverse() const { return {-t_exp, -l_exp, -m_exp}; }
  DimTag pow(Rational p) const { return {t_exp * p, l_exp * p, m_exp * p}; }
  std::string str() const;

  friend DimTag operator*(const DimTag& a, const DimTag& b) {
    return {a.t_exp + b.t_exp, a.l_exp + b.l_exp, a.m_exp + b.m_exp};
  }
  friend DimTag operator/(const DimTag& a, const DimTag& b) { return a * b.inverse(); }
  friend bool operator==(const DimTag&, const DimTag&) = default;
};

struct ScaledScalar {
  double value = 0.0;
  DimTag tag;

  friend ScaledScalar operator*(const ScaledScalar& a, const ScaledScalar& b) {
    return {a.value * b.value, a.tag * b.tag};
  }
  friend ScaledScalar operator/(const ScaledScalar& a, const ScaledScalar& b);
  /// Throws DimensionError unless tags agree.
  friend ScaledScalar operator+(const ScaledScalar& a, const ScaledScalar& b);
  friend ScaledScalar operator-(const ScaledScalar& a, const ScaledScalar& b);
};

template <class Field>
struct Tagged {
  Field field;
  DimTag tag;
};

/// G = (m/hbar) g. The input metric must carry tag L^2; the result carries T.
Tagged<MatrixField> rescale_metric(const Tagged<MatrixField>& g, const ScaledScalar& m,
                                   const ScaledScalar& hbar);

/// F = (q/hbar) f. The input 2-form must carry tag L^{1/2} M^{1/2}; the result is untagged.
Tagged<MatrixField> rescale_em(const Tagged<MatrixField>& f_em, const ScaledScalar& q,
                               const ScaledScalar& hbar);

/// The tag an electromagnetic 2-form carries before rescaling.
inline DimTag em_field_tag() { return {0, Rational(1, 2), Rational(1, 2)}; }

}  // namespace cqm::units
