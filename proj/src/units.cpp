#include "cqm/units.hpp"

#include <charconv>
#include <numeric>

#include "cqm/errors.hpp"

namespace cqm::units {

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / (g == 0 ? 1 : g);
  den_ = den / (g == 0 ? 1 : g);
}

Rational operator+(Rational a, Rational b) {
  return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
}

Rational operator*(Rational a, Rational b) { return {a.num_ * b.num_, a.den_ * b.den_}; }

Rational Rational::parse(const std::string& text) {
  auto parse_int = [&](std::string_view s) {
    std::int64_t v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw DomainError("malformed rational exponent '" + text + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return {parse_int(text), 1};
  return {parse_int(std::string_view(text).substr(0, slash)),
          parse_int(std::string_view(text).substr(slash + 1))};
}

std::string Rational::str() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

std::string DimTag::str() const {
  return "[" + t_exp.str() + "," + l_exp.str() + "," + m_exp.str() + "]";
}

ScaledScalar operator/(const ScaledScalar& a, const ScaledScalar& b) {
  if (b.value == 0.0) throw DomainError("division by a zero scaled scalar");
  return {a.value / b.value, a.tag / b.tag};
}

ScaledScalar operator+(const ScaledScalar& a, const ScaledScalar& b) {
  if (!(a.tag == b.tag))
    throw DimensionError("cannot add " + a.tag.str() + " to " + b.tag.str());
  return {a.value + b.value, a.tag};
}

ScaledScalar operator-(const ScaledScalar& a, const ScaledScalar& b) {
  return a + ScaledScalar{-b.value, b.tag};
}

namespace {

void require_tag(const DimTag& got, const DimTag& want, const char* what) {
  if (!(got == want))
    throw DimensionError(std::string(what) + " has tag " + got.str() + ", expected " + want.str());
}

Tagged<MatrixField> scale(const Tagged<MatrixField>& in, double ratio, DimTag tag) {
  auto field = in.field;
  return {[field, ratio](double t, const Vec& x) -> Mat { return ratio * field(t, x); }, tag};
}

}  // namespace

Tagged<MatrixField> rescale_metric(const Tagged<MatrixField>& g, const ScaledScalar& m,
                                   const ScaledScalar& hbar) {
  require_tag(m.tag, DimTag::mass(), "mass");
  require_tag(hbar.tag, DimTag::planck(), "Planck constant");
  require_tag(g.tag, DimTag::length().pow(2), "spacelike metric");
  if (!(m.value > 0.0) || !(hbar.value > 0.0))
    throw DomainError("mass and Planck constant must be positive");
  const ScaledScalar ratio = m / hbar;
  return scale(g, ratio.value, ratio.tag * g.tag);
}

Tagged<MatrixField> rescale_em(const Tagged<MatrixField>& f_em, const ScaledScalar& q,
                               const ScaledScalar& hbar) {
  require_tag(q.tag, DimTag::charge(), "charge");
  require_tag(hbar.tag, DimTag::planck(), "Planck constant");
  require_tag(f_em.tag, em_field_tag(), "electromagnetic field");
  if (!(hbar.value > 0.0)) throw DomainError("Planck constant must be positive");
  const ScaledScalar ratio = q / hbar;
  return scale(f_em, ratio.value, ratio.tag * f_em.tag);
}

}  // namespace cqm::units
