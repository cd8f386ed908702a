#pragma once

// Arithmetic backends. Everything numeric in the library is a template over a
// Real type; `double` is the native backend and BinFloat<B> the extended one.
// A PrecisionContext carries the per-backend defaults (guard, symbolic depth).

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>

#include "entroscope/errors.hpp"

namespace entroscope {

template <unsigned Bits>
using BinFloat = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<Bits, boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;

using Real128 = BinFloat<128>;
using Real256 = BinFloat<256>;
using Real512 = BinFloat<512>;
using Real1024 = BinFloat<1024>;

/// Mantissa bits of a backend.
template <class Real>
inline constexpr unsigned mantissa_bits = static_cast<unsigned>(std::numeric_limits<Real>::digits);

template <class Real>
inline constexpr bool is_native = std::is_same_v<Real, double>;

template <class Real>
struct PrecisionContext {
  using real_type = Real;
  static constexpr unsigned bits = mantissa_bits<Real>;

  // Orbit points closer than this to the turning point get the symbol C.
  Real guard = default_guard();
  // Symbolic depth N for kneading comparisons.
  std::size_t depth = default_depth();
  // Cap on bisection steps for slope and parameter searches.
  std::size_t bisect_iters = default_bisect_iters();

  static Real default_guard() {
    if constexpr (is_native<Real>) {
      return 1e-13;
    } else {
      using std::ldexp;
      return ldexp(Real(1), -static_cast<int>(bits - 10));
    }
  }

  static std::size_t default_depth() {
    if constexpr (is_native<Real>) {
      return 48;
    } else {
      return static_cast<std::size_t>(0.8 * bits);
    }
  }

  static std::size_t default_bisect_iters() { return bits < 200 ? 200 : bits + 16; }
};

using NativeContext = PrecisionContext<double>;

template <class Real>
Real real_from_string(std::string_view text) {
  if constexpr (is_native<Real>) {
    std::size_t used = 0;
    const std::string s(text);
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: " + s);
    }
    if (used != s.size()) throw InvalidArgument("not a number: " + s);
    return v;
  } else {
    try {
      return Real(std::string(text));
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: " + std::string(text));
    }
  }
}

template <class Real>
double to_double(const Real& x) {
  return static_cast<double>(x);
}

/// Decimal rendering with `digits` significant digits (17 round-trips a double).
template <class Real>
std::string to_string(const Real& x, int digits = 17) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

template <class Real>
Real ln2() {
  using std::log;
  return log(Real(2));
}

/// Calls `fn(PrecisionContext<R>{})` with the smallest backend carrying at
/// least `bits` mantissa bits. bits <= 53 selects the native backend.
template <class Fn>
decltype(auto) with_precision(unsigned bits, Fn&& fn) {
  if (bits <= 53) return fn(PrecisionContext<double>{});
  if (bits <= 128) return fn(PrecisionContext<Real128>{});
  if (bits <= 256) return fn(PrecisionContext<Real256>{});
  if (bits <= 512) return fn(PrecisionContext<Real512>{});
  if (bits <= 1024) return fn(PrecisionContext<Real1024>{});
  throw InvalidArgument("precision above 1024 bits is not supported");
}

}  // namespace entroscope
