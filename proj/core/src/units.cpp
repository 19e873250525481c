#include "kraft/units.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kraft/error.hpp"
#include "kraft/transform.hpp"

namespace kraft {

namespace {
constexpr std::array<std::string_view, kBaseDimCount> kDimNames = {"mass",        "length",   "time",
                                                                   "temperature", "currency", "count"};
}

std::string_view to_string(BaseDim dim) { return kDimNames[static_cast<std::size_t>(dim)]; }

std::optional<BaseDim> parse_base_dim(std::string_view text) {
  for (std::size_t i = 0; i < kDimNames.size(); ++i)
    if (kDimNames[i] == text) return static_cast<BaseDim>(i);
  return std::nullopt;
}

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

std::string Rational::str() const {
  return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(Rational a, Rational b) { return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_); }
Rational operator-(Rational a, Rational b) { return a + (-b); }
Rational operator*(Rational a, Rational b) { return Rational(a.num_ * b.num_, a.den_ * b.den_); }

Rational parse_rational(std::string_view text) {
  auto parse_int = [&](std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
      throw InputError("invalid exponent '" + std::string(text) + "'");
    return v;
  };
  if (const auto slash = text.find('/'); slash != std::string_view::npos)
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  if (text.find('.') == std::string_view::npos) return Rational(parse_int(text));
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) throw InputError("invalid exponent '" + std::string(text) + "'");
  for (std::int64_t den : {1, 2, 3, 4, 6, 8, 12}) {
    const double scaled = v * static_cast<double>(den);
    const auto rounded = static_cast<std::int64_t>(scaled >= 0 ? scaled + 0.5 : scaled - 0.5);
    if (std::abs(scaled - static_cast<double>(rounded)) < 1e-9) return Rational(rounded, den);
  }
  throw InputError("exponent '" + std::string(text) + "' is not a simple fraction");
}

bool Dims::dimensionless() const {
  for (const auto& e : exp)
    if (!e.is_zero()) return false;
  return true;
}

Dims operator+(const Dims& a, const Dims& b) {
  Dims out;
  for (std::size_t i = 0; i < kBaseDimCount; ++i) out.exp[i] = a.exp[i] + b.exp[i];
  return out;
}

Dims operator-(const Dims& a, const Dims& b) {
  Dims out;
  for (std::size_t i = 0; i < kBaseDimCount; ++i) out.exp[i] = a.exp[i] - b.exp[i];
  return out;
}

Dims operator*(const Dims& a, Rational k) {
  Dims out;
  for (std::size_t i = 0; i < kBaseDimCount; ++i) out.exp[i] = a.exp[i] * k;
  return out;
}

std::string format_dims(const Dims& dims) {
  std::string out;
  for (std::size_t i = 0; i < kBaseDimCount; ++i) {
    const Rational& e = dims.exp[i];
    if (e.is_zero()) continue;
    if (!out.empty()) out += ' ';
    out += kDimNames[i];
    if (e != Rational(1)) out += "^" + e.str();
  }
  return out.empty() ? "1" : out;
}

MaybeUnit propagate_unit(OpId op, std::span<const MaybeUnit> inputs) {
  const TransformOp& info = op_info(op);
  const std::size_t expected = info.arity == Arity::Binary || info.arity == Arity::Aggregation ? 2 : 1;
  if (inputs.size() != expected)
    throw std::invalid_argument("propagate_unit: " + std::string(info.name) + " takes " + std::to_string(expected) +
                                " input unit(s)");

  switch (op) {
    case OpId::OneHot:
    case OpId::And:
    case OpId::Or:
    case OpId::Day:
    case OpId::Month:
    case OpId::Year:
    case OpId::IsWeekend:
      return Unit::dimensionless();
    default:
      break;
  }

  if (info.arity == Arity::Aggregation) {
    if (!inputs[1]) return std::nullopt;
    return Unit{inputs[1]->dims, std::nullopt};
  }
  for (const auto& u : inputs)
    if (!u) return std::nullopt;

  const Dims& a = inputs[0]->dims;
  switch (op) {
    case OpId::Log:
      if (a.dimensionless()) return Unit::dimensionless();
      return std::nullopt;
    case OpId::Sqrt: return Unit{a * Rational(1, 2), std::nullopt};
    case OpId::Square: return Unit{a * Rational(2), std::nullopt};
    case OpId::Reciprocal: return Unit{a * Rational(-1), std::nullopt};
    case OpId::Mul: return Unit{a + inputs[1]->dims, std::nullopt};
    case OpId::Div: return Unit{a - inputs[1]->dims, std::nullopt};
    case OpId::Add:
    case OpId::Sub:
      if (a == inputs[1]->dims) return Unit{a, inputs[0]->name};
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

}  // namespace kraft
