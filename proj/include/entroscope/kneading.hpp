#pragma once

// Symbolic dynamics of the critical orbit.
//
// Symbols are derivative signs along the orbit of the critical value, so a
// quadratic map (minimum at 0) and a tent map (maximum at 0) produce directly
// comparable sequences. The comparison below is the parity-twisted
// lexicographic order in which b -> K(T_b) is non-decreasing.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entroscope/errors.hpp"
#include "entroscope/maps.hpp"
#include "entroscope/precision.hpp"

namespace entroscope {

enum class Symbol : int { L = -1, C = 0, R = 1 };

inline int sign_of(Symbol s) { return static_cast<int>(s); }

inline Symbol flip(Symbol s) { return static_cast<Symbol>(-static_cast<int>(s)); }

inline char symbol_char(Symbol s) {
  switch (s) {
    case Symbol::L: return 'L';
    case Symbol::C: return 'C';
    case Symbol::R: return 'R';
  }
  return '?';
}

struct Itinerary {
  std::vector<Symbol> symbols;
  bool terminated = false;
  std::optional<std::size_t> ambiguous_at;

  std::size_t size() const { return symbols.size(); }

  std::string str() const {
    std::string out;
    out.reserve(symbols.size());
    for (Symbol s : symbols) out.push_back(symbol_char(s));
    return out;
  }

  /// Parses "LRC..." (ambiguity flags cannot be expressed in the string form).
  static Itinerary parse(std::string_view text) {
    Itinerary it;
    for (std::size_t i = 0; i < text.size(); ++i) {
      switch (text[i]) {
        case 'L': it.symbols.push_back(Symbol::L); break;
        case 'R': it.symbols.push_back(Symbol::R); break;
        case 'C':
          if (i + 1 != text.size()) throw InvalidArgument("C may only appear last in an itinerary");
          it.symbols.push_back(Symbol::C);
          it.terminated = true;
          break;
        default: throw InvalidArgument(std::string("bad itinerary symbol '") + text[i] + "'");
      }
    }
    if (it.symbols.empty()) throw InvalidArgument("empty itinerary");
    return it;
  }

  /// First `n` symbols. Dropping the terminal C clears `terminated`.
  Itinerary prefix(std::size_t n) const {
    Itinerary out;
    out.symbols.assign(symbols.begin(), symbols.begin() + static_cast<std::ptrdiff_t>(std::min(n, size())));
    out.terminated = terminated && out.size() == size();
    if (ambiguous_at && *ambiguous_at < out.size()) out.ambiguous_at = ambiguous_at;
    return out;
  }
};

struct KneadingData {
  std::vector<int> d;  // d_0 = 1, d_i = k_1 ... k_i
  Itinerary source;
};

namespace detail {

/// x*x + a together with the exact rounding error of that evaluation
/// (TwoProduct + TwoSum), so that exactly representable orbits such as the one
/// at a = -2 accumulate no error at all.
template <class Real>
Real square_plus(const Real& x, const Real& a, Real& err) {
  Real p, ep;
  if constexpr (is_native<Real>) {
    p = x * x;
    ep = std::fma(x, x, -p);
  } else {
    static const Real splitter = [] {
      using std::ldexp;
      return ldexp(Real(1), static_cast<int>((mantissa_bits<Real> + 1) / 2)) + 1;
    }();
    const Real t = splitter * x;
    const Real hi = t - (t - x);
    const Real lo = x - hi;
    p = x * x;
    ep = ((hi * hi - p) + 2 * hi * lo) + lo * lo;
  }
  const Real s = p + a;
  const Real bv = s - p;
  const Real es = (p - (s - bv)) + (a - bv);
  err = ep + es;
  return s;
}

}  // namespace detail

/// Itinerary of the critical value: symbols[i] is the derivative sign at the
/// (i+1)-th image of the turning point.
///
/// For the quadratic family a first-order bound on the accumulated rounding
/// error is carried along; the first symbol whose sign it can no longer
/// certify is marked ambiguous, as is any point within 10 guard of 0.
template <class Real>
Itinerary kneading_itinerary(const FamilyParam<Real>& p, std::size_t n, const PrecisionContext<Real>& ctx) {
  using std::abs;
  if (n < 1) throw InvalidArgument("itinerary length must be at least 1");
  const Real& guard = ctx.guard;
  const Real near = 10 * guard;
  const bool track = p.is_quadratic();

  Itinerary it;
  it.symbols.reserve(n);
  Real x = eval(p, Real(0));
  Real drift = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real ax = abs(x);
    if (ax <= guard) {
      it.symbols.push_back(Symbol::C);
      it.terminated = true;
      break;
    }
    if (!it.ambiguous_at && (ax <= near || 2 * drift >= ax)) it.ambiguous_at = i;
    it.symbols.push_back(static_cast<Symbol>(deriv_sign(p, x)));
    if (track) {
      Real local;
      const Real next = detail::square_plus(x, p.value(), local);
      if (!it.ambiguous_at) drift = 2 * ax * drift + drift * drift + abs(local);
      x = next;
    } else {
      x = eval(p, x);
    }
  }
  return it;
}

inline KneadingData sign_products(const Itinerary& it) {
  if (it.symbols.empty()) throw InvalidArgument("empty itinerary");
  KneadingData kd;
  kd.source = it;
  kd.d.reserve(it.size() + 1);
  int d = 1;
  kd.d.push_back(d);
  for (Symbol s : it.symbols) {
    d *= sign_of(s);
    kd.d.push_back(d);
  }
  return kd;
}

/// Extends a terminated itinerary A C to length n by repeating the block A x,
/// where x is chosen so the block's sign product is +1. Under this convention
/// d is periodic and the kneading determinant is P(t)/(1 - t^p), with P the
/// finite polynomial read off A C, so the smallest root is unchanged.
inline Itinerary periodic_extension(const Itinerary& it, std::size_t n) {
  if (!it.terminated) return it.prefix(n);
  Itinerary out;
  const std::size_t block = it.size();
  int prod = 1;
  for (std::size_t i = 0; i + 1 < block; ++i) prod *= sign_of(it.symbols[i]);
  const Symbol closing = prod > 0 ? Symbol::R : Symbol::L;
  out.symbols.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % block;
    out.symbols.push_back(k + 1 == block ? closing : it.symbols[k]);
  }
  return out;
}

enum class Ordering { Less, Equal, Greater, Incomparable };

inline const char* ordering_name(Ordering o) {
  switch (o) {
    case Ordering::Less: return "Less";
    case Ordering::Equal: return "Equal";
    case Ordering::Greater: return "Greater";
    case Ordering::Incomparable: return "Incomparable";
  }
  return "?";
}

namespace detail {
// Spatial rank for a map with a maximum at the turning point: an increasing
// branch (R) lies left of C, a decreasing branch (L) right of it.
inline int spatial_rank(Symbol s) {
  switch (s) {
    case Symbol::R: return 0;
    case Symbol::C: return 1;
    case Symbol::L: return 2;
  }
  return 1;
}
}  // namespace detail

inline Ordering itinerary_compare(const Itinerary& x, const Itinerary& y) {
  const std::size_t n = std::min(x.size(), y.size());
  int parity = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if ((x.ambiguous_at && *x.ambiguous_at <= i) || (y.ambiguous_at && *y.ambiguous_at <= i)) {
      return Ordering::Incomparable;
    }
    const Symbol a = x.symbols[i];
    const Symbol b = y.symbols[i];
    if (a == b) {
      if (a == Symbol::C) return Ordering::Equal;
      parity *= sign_of(a);
      continue;
    }
    const int diff = (detail::spatial_rank(a) - detail::spatial_rank(b)) * parity;
    return diff < 0 ? Ordering::Less : Ordering::Greater;
  }
  return Ordering::Equal;
}

/// Period-doubling deflation. A kneading sequence of a map renormalisable with
/// period two reads L k2 L k4 L k6 ...; the renormalised map has kneading
/// -k2 -k4 -k6 .... Returns nothing when an even slot is not L.
inline std::optional<Itinerary> deflate(const Itinerary& it) {
  Itinerary out;
  out.symbols.reserve(it.size() / 2);
  for (std::size_t i = 0; i < it.size(); ++i) {
    if (it.ambiguous_at && *it.ambiguous_at == i) {
      if (i % 2 == 0) {
        // Renormalisability itself is uncertain from here on.
        out.ambiguous_at = out.size();
        break;
      }
      out.ambiguous_at = out.size();
    }
    const Symbol s = it.symbols[i];
    if (i % 2 == 0) {
      if (s != Symbol::L) return std::nullopt;
    } else {
      out.symbols.push_back(flip(s));
      if (s == Symbol::C) out.terminated = true;
    }
  }
  if (out.symbols.empty()) return std::nullopt;
  return out;
}

/// Inverse of `deflate`: each symbol k becomes the pair L, -k.
inline Itinerary inflate(const Itinerary& it) {
  Itinerary out;
  out.symbols.reserve(2 * it.size());
  for (Symbol s : it.symbols) {
    out.symbols.push_back(Symbol::L);
    out.symbols.push_back(flip(s));
  }
  out.terminated = it.terminated;
  if (it.ambiguous_at) out.ambiguous_at = 2 * *it.ambiguous_at + 1;
  return out;
}

enum class EntropyMethod { TentExact, KneadBisect, KneadRoot, LapCount };

inline const char* method_name(EntropyMethod m) {
  switch (m) {
    case EntropyMethod::TentExact: return "TentExact";
    case EntropyMethod::KneadBisect: return "KneadBisect";
    case EntropyMethod::KneadRoot: return "KneadRoot";
    case EntropyMethod::LapCount: return "LapCount";
  }
  return "?";
}

template <class Real>
struct EntropyResult {
  Real value{};
  Real error_radius{};
  EntropyMethod method = EntropyMethod::KneadBisect;
  int renorm_depth = 0;
  // No root of the kneading determinant / below every positive-entropy tent.
  bool zero = false;
  // The matching tent map has a periodic turning point: the parameter is a
  // window center or lies in a window (entropy exact, parameter not unique).
  bool window_tie = false;
  // Period of the quadratic window suggested by the tie (0 without a tie).
  std::size_t tie_period = 0;
  // Symbolic depth actually used in the comparison (after ambiguity cut-off).
  std::size_t depth_used = 0;
};

/// Smallest root of the truncated kneading determinant sum d_i t^i.
inline EntropyResult<double> kneading_root_entropy(const KneadingData& kd, double tol) {
  if (!(tol > 0)) throw InvalidArgument("tolerance must be positive");
  if (kd.d.size() < 8) throw InvalidArgument("kneading data needs at least 8 coefficients");

  const auto& d = kd.d;
  auto poly = [&](double t) {
    double acc = 0;
    for (std::size_t i = d.size(); i-- > 0;) acc = acc * t + d[i];
    return acc;
  };
  auto dpoly = [&](double t) {
    double acc = 0;
    for (std::size_t i = d.size(); i-- > 1;) acc = acc * t + static_cast<double>(i) * d[i];
    return acc;
  };

  EntropyResult<double> res;
  res.method = EntropyMethod::KneadRoot;
  res.depth_used = d.size() - 1;

  constexpr int kScan = 4096;
  const double top = 1.0 - tol;
  double prev_t = 0.0;
  double lo = -1, hi = -1;
  for (int k = 1; k <= kScan; ++k) {
    const double t = top * k / kScan;
    const double v = poly(t);
    if (v <= 0) {
      lo = prev_t;
      hi = t;
      break;
    }
    prev_t = t;
  }
  if (lo < 0) {
    res.value = 0;
    res.error_radius = tol;
    res.zero = true;
    return res;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (poly(mid) > 0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  // A terminated sequence is an exact finite determinant (the periodic
  // extension has the same smallest root), so there is no truncation tail.
  const bool exact = kd.source.terminated && d.back() == 0;
  const double tail = exact ? 0.0 : std::pow(s, static_cast<double>(d.size())) / (1.0 - s);
  const double slope = std::abs(dpoly(s));
  const double ds = (slope > 0 ? tail / slope : 1.0) + (hi - lo);
  res.value = -std::log(s);
  res.error_radius = ds / s + 1e-15;
  return res;
}

}  // namespace entroscope
