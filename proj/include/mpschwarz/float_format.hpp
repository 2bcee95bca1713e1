#pragma once

// Simulated reduced-precision floating-point value sets with directed
// rounding, over native double as the working precision. Two families:
// binary formats defined by (significand bits, exponent bits) and decimal
// formats defined by a number of significant digits. The decimal family has
// no range limits of its own.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mpschwarz {

enum class FormatKind { Binary, Decimal };

enum class RoundMode { Nearest, TowardZero, AwayFromZero };

struct FloatFormat {
  FormatKind kind = FormatKind::Binary;
  int significand_bits = 53;  // binary only; counts the implicit bit
  int exponent_bits = 11;     // binary only
  int decimal_digits = 16;    // decimal only
  bool subnormals_enabled = true;  // binary only
  double unit_roundoff = 0.0;
  double x_min = 0.0;  // smallest positive normal
  double x_max = 0.0;  // largest finite
  std::string name;

  int exponent_max() const { return (1 << (exponent_bits - 1)) - 1; }
  int exponent_min() const { return 1 - exponent_max(); }

  bool is_working_precision() const {
    return kind == FormatKind::Binary && significand_bits >= 53 &&
           exponent_bits >= 11;
  }

  static FloatFormat binary(int significand_bits, int exponent_bits,
                            bool subnormals = true) {
    if (significand_bits < 1 || exponent_bits < 1)
      throw std::invalid_argument("FloatFormat::binary: bits must be >= 1");
    FloatFormat f;
    f.kind = FormatKind::Binary;
    f.significand_bits = significand_bits;
    f.exponent_bits = exponent_bits;
    f.subnormals_enabled = subnormals;
    f.unit_roundoff = std::ldexp(1.0, -significand_bits);
    const int emax = f.exponent_max();
    f.x_min = std::ldexp(1.0, f.exponent_min());
    f.x_max = (2.0 - std::ldexp(1.0, 1 - significand_bits)) *
              std::ldexp(1.0, emax);
    f.name = "b" + std::to_string(significand_bits) + "e" +
             std::to_string(exponent_bits);
    return f;
  }

  static FloatFormat decimal(int digits) {
    if (digits < 1 || digits > 16)
      throw std::invalid_argument("FloatFormat::decimal: digits must be 1..16");
    FloatFormat f;
    f.kind = FormatKind::Decimal;
    f.decimal_digits = digits;
    f.unit_roundoff = 0.5 * std::pow(10.0, 1 - digits);
    // The decimal simulator carries no range restriction of its own; expose
    // the working-precision range.
    f.x_min = std::numeric_limits<double>::min();
    f.x_max = std::numeric_limits<double>::max();
    f.name = "dec:" + std::to_string(digits);
    return f;
  }

  // Named presets: q52, q43, bfloat16, fp16, fp32, fp64 and dec:<k>.
  static FloatFormat from_name(std::string_view name) {
    auto named = [&](std::string_view n, int t, int e) {
      FloatFormat f = binary(t, e);
      f.name = std::string(n);
      return f;
    };
    if (name == "q52") return named(name, 3, 5);
    if (name == "q43") return named(name, 4, 4);
    if (name == "bfloat16") return named(name, 8, 8);
    if (name == "fp16") return named(name, 11, 5);
    if (name == "fp32") return named(name, 24, 8);
    if (name == "fp64") return named(name, 53, 11);
    if (name.substr(0, 4) == "dec:") {
      int d = 0;
      for (char c : name.substr(4)) {
        if (c < '0' || c > '9')
          throw std::invalid_argument("bad decimal format name: " +
                                      std::string(name));
        d = 10 * d + (c - '0');
      }
      return decimal(d);
    }
    throw std::invalid_argument("unknown format name: " + std::string(name));
  }

  static const std::vector<std::string>& table_preset_names() {
    static const std::vector<std::string> names = {
        "q52", "q43", "bfloat16", "fp16", "fp32", "fp64"};
    return names;
  }
};

struct RoundResult {
  double value = 0.0;
  bool overflow = false;
  bool underflow = false;  // rounded to zero from a nonzero input
};

namespace detail {

// Round a nonnegative scaled significand to an integer. The sign has been
// stripped, so TowardZero is floor and AwayFromZero is ceil.
inline double round_significand(double s, RoundMode mode) {
  switch (mode) {
    case RoundMode::TowardZero:
      return std::floor(s);
    case RoundMode::AwayFromZero:
      return std::ceil(s);
    case RoundMode::Nearest:
    default:
      return std::nearbyint(s);  // ties to even
  }
}

inline RoundResult round_binary(double x, const FloatFormat& fmt,
                                RoundMode mode) {
  const double ax = std::fabs(x);
  const double sign = x < 0.0 ? -1.0 : 1.0;
  if (ax > fmt.x_max)
    return {sign * fmt.x_max, /*overflow=*/true, false};

  const int t = fmt.significand_bits;
  int e = 0;
  const double frac = std::frexp(ax, &e);  // ax = frac * 2^e, frac in [1/2,1)
  if (e - 1 >= fmt.exponent_min()) {
    // Normal binade: representable values are k * 2^(e-t).
    const double scaled = std::ldexp(frac, t);  // exact
    const double k = round_significand(scaled, mode);
    return {sign * std::ldexp(k, e - t), false, false};
  }

  if (fmt.subnormals_enabled) {
    // Fixed spacing 2^(emin+1-t) below the normal range.
    const int spacing_exp = fmt.exponent_min() + 1 - t;
    const double scaled = std::ldexp(ax, -spacing_exp);  // exact
    const double k = round_significand(scaled, mode);
    const double v = std::ldexp(k, spacing_exp);
    return {sign * v, false, v == 0.0};
  }

  // No subnormals: the only representable magnitudes below x_min are 0.
  switch (mode) {
    case RoundMode::TowardZero:
      return {sign * 0.0, false, true};
    case RoundMode::AwayFromZero:
      return {sign * fmt.x_min, false, false};
    case RoundMode::Nearest:
    default:
      if (ax >= 0.5 * fmt.x_min) return {sign * fmt.x_min, false, false};
      return {sign * 0.0, false, true};
  }
}

// Exact powers of ten up to 10^22 as doubles.
inline double pow10_exact(int k) {
  static const double table[] = {1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,  1e7,
                                 1e8,  1e9,  1e10, 1e11, 1e12, 1e13, 1e14, 1e15,
                                 1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22};
  return table[k];
}

// x * 10^p computed in stages of exact powers, so the intermediate never
// overflows when the target magnitude is moderate.
inline double mul_pow10(double x, int p) {
  while (p > 22) {
    x *= 1e22;
    p -= 22;
  }
  while (p < -22) {
    x /= 1e22;
    p += 22;
  }
  if (p >= 0) return x * pow10_exact(p);
  return x / pow10_exact(-p);
}

inline RoundResult round_decimal(double x, const FloatFormat& fmt,
                                 RoundMode mode) {
  const double ax = std::fabs(x);
  const double sign = x < 0.0 ? -1.0 : 1.0;
  const int d = fmt.decimal_digits;
  const double lo = pow10_exact(d - 1);
  const double hi = pow10_exact(d);

  int e10 = static_cast<int>(std::floor(std::log10(ax)));
  int p = d - 1 - e10;  // mantissa = ax * 10^p, target [10^(d-1), 10^d)
  double m = mul_pow10(ax, p);
  for (int guard = 0; guard < 3 && m >= hi; ++guard) m = mul_pow10(ax, --p);
  for (int guard = 0; guard < 3 && m < lo; ++guard) m = mul_pow10(ax, ++p);

  // Inputs that are (up to working-precision noise from the scaling) already
  // d-digit values are fixed points of every mode.
  const double nearest_int = std::nearbyint(m);
  double k;
  if (std::fabs(m - nearest_int) <=
      8.0 * std::numeric_limits<double>::epsilon() * m) {
    k = nearest_int;
  } else {
    switch (mode) {
      case RoundMode::TowardZero:
        k = std::floor(m);
        break;
      case RoundMode::AwayFromZero:
        k = std::ceil(m);
        break;
      case RoundMode::Nearest:
      default:
        k = std::round(m);  // ties away from zero
        break;
    }
  }
  if (k >= hi) {
    k = lo;
    --p;
  }
  return {sign * mul_pow10(k, -p), false, false};
}

}  // namespace detail

// Round one working-precision value into the representable set of fmt.
// TowardZero and AwayFromZero act on the magnitude, preserving the sign.
inline RoundResult round_scalar(double x, const FloatFormat& fmt,
                                RoundMode mode) {
  if (!std::isfinite(x))
    throw std::invalid_argument("round_scalar: input must be finite");
  if (x == 0.0) return {x, false, false};
  if (fmt.kind == FormatKind::Binary) {
    if (fmt.is_working_precision()) return {x, false, false};
    return detail::round_binary(x, fmt, mode);
  }
  return detail::round_decimal(x, fmt, mode);
}

}  // namespace mpschwarz
