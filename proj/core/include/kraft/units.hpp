#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace kraft {

enum class OpId : std::uint8_t;

enum class BaseDim : std::uint8_t { Mass, Length, Time, Temperature, Currency, Count };
inline constexpr std::size_t kBaseDimCount = 6;

std::string_view to_string(BaseDim dim);
std::optional<BaseDim> parse_base_dim(std::string_view text);

/// Exact rational exponent, kept in lowest terms with a positive denominator.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend Rational operator+(Rational a, Rational b);
  friend Rational operator-(Rational a, Rational b);
  friend Rational operator*(Rational a, Rational b);
  friend Rational operator-(Rational a) { return Rational(-a.num_, a.den_); }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend auto operator<=>(const Rational& a, const Rational& b) {
    return a.num_ * b.den_ <=> b.num_ * a.den_;
  }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// Parses "2", "-1", "1/2" or "0.5" (decimals must be exact halves, quarters...).
Rational parse_rational(std::string_view text);

/// Exponent vector over the base dimensions.
struct Dims {
  std::array<Rational, kBaseDimCount> exp{};

  bool dimensionless() const;
  Rational& operator[](BaseDim d) { return exp[static_cast<std::size_t>(d)]; }
  const Rational& operator[](BaseDim d) const { return exp[static_cast<std::size_t>(d)]; }

  friend Dims operator+(const Dims& a, const Dims& b);
  friend Dims operator-(const Dims& a, const Dims& b);
  friend Dims operator*(const Dims& a, Rational k);
  friend bool operator==(const Dims&, const Dims&) = default;
  friend auto operator<=>(const Dims&, const Dims&) = default;
};

/// "mass length^-2"; "1" when dimensionless.
std::string format_dims(const Dims& dims);

struct Unit {
  Dims dims;
  std::optional<std::string> name;  // registered unit name, when known

  static Unit dimensionless() { return Unit{}; }
  /// The registered name if any, else the dimension formula.
  std::string label() const { return name ? *name : format_dims(dims); }
};

/// std::nullopt means the unit is unknown.
using MaybeUnit = std::optional<Unit>;

/// Unit algebra of the transformation catalog. Group operations take
/// {key, value}; only the value unit matters. Operations whose output is a
/// count, flag or calendar field are dimensionless regardless of input.
/// Names are not attached here (see KnowledgeGraph::name_unit).
MaybeUnit propagate_unit(OpId op, std::span<const MaybeUnit> inputs);

}  // namespace kraft
