#pragma once

// Topological entropy: exact for tent maps, by kneading bisection against the
// tent family for quadratic maps, and by lap counting as an independent check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "entroscope/errors.hpp"
#include "entroscope/kneading.hpp"
#include "entroscope/maps.hpp"
#include "entroscope/precision.hpp"
#include "entroscope/tent_dynamics.hpp"

namespace entroscope {

inline constexpr int kMaxRenormDepth = 12;
inline constexpr std::size_t kMinReliableDepth = 16;

template <class Real>
EntropyResult<Real> tent_entropy(const Real& b) {
  using std::log;
  const auto p = FamilyParam<Real>::tent(b);
  EntropyResult<Real> r;
  r.value = log(p.value());
  r.error_radius = 0;
  r.method = EntropyMethod::TentExact;
  return r;
}

/// Lower end of the slope bracket; its entropy doubles as the zero tolerance.
template <class Real>
Real slope_floor() {
  return 1 + Real(1e-9);
}

template <class Real>
struct SlopeMatch {
  Real b{};
  Real lo{};
  Real hi{};
  Real error_b{};  // radius in slope units
  bool zero = false;
  bool collapsed = false;
  bool window_tie = false;
  std::size_t tie_index = 0;  // phi_j(b) ~ 0 at this j when window_tie
  std::size_t depth_used = 0;
};

namespace detail {

template <class Real>
Itinerary tent_kneading(const Real& b, std::size_t n, const PrecisionContext<Real>& ctx) {
  auto it = kneading_itinerary(FamilyParam<Real>::tent(b), n, ctx);
  // The bisection runs over b itself; a mis-signed near-zero point only moves
  // the transition inside the guard zone, which the error radius covers.
  it.ambiguous_at.reset();
  return it;
}

}  // namespace detail

/// Monotone bisection over tent slopes for the slope whose kneading matches
/// `target` to depth n.
template <class Real>
SlopeMatch<Real> match_tent_slope(Itinerary target, std::size_t n, std::size_t iters,
                                  const PrecisionContext<Real>& ctx) {
  using std::abs;
  using std::pow;

  SlopeMatch<Real> m;
  m.lo = slope_floor<Real>();
  m.hi = 2;
  m.depth_used = std::min(n, target.size());

  if (target.ambiguous_at) {
    const std::size_t k = *target.ambiguous_at;
    if (k < kMinReliableDepth) {
      // Partial bracket: bisect until the ambiguous symbol decides.
      for (std::size_t i = 0; i < iters; ++i) {
        const Real mid = (m.lo + m.hi) / 2;
        const auto c = itinerary_compare(target, detail::tent_kneading(mid, n, ctx));
        if (c == Ordering::Greater) {
          m.lo = mid;
        } else if (c == Ordering::Less) {
          m.hi = mid;
        } else {
          break;
        }
      }
      throw InsufficientPrecision("insufficient precision: ambiguous kneading symbol at index " + std::to_string(k),
                                  to_double(m.lo), to_double(m.hi));
    }
    target = target.prefix(k);
    m.depth_used = k;
  }

  if (itinerary_compare(target, detail::tent_kneading(m.lo, n, ctx)) == Ordering::Less) {
    m.zero = true;
    m.b = m.lo;
    m.error_b = m.lo - 1;
    return m;
  }

  for (std::size_t i = 0; i < iters; ++i) {
    const Real mid = (m.lo + m.hi) / 2;
    if (mid <= m.lo || mid >= m.hi) break;
    const auto c = itinerary_compare(target, detail::tent_kneading(mid, n, ctx));
    if (c == Ordering::Greater) {
      m.lo = mid;
    } else if (c == Ordering::Less) {
      m.hi = mid;
    } else {
      m.lo = m.hi = mid;
      m.collapsed = true;
      break;
    }
  }
  m.b = (m.lo + m.hi) / 2;

  // Radius: bracket, symbolic depth (|phi_N'| ~ b^N; a terminated target pins
  // the slope exactly), rounding in the tent orbit, and the guard zone around
  // slopes whose orbit passes within 10 guard of 0.
  Real radius = (m.hi - m.lo) / 2;
  if (!target.terminated) radius = std::max(radius, Real(pow(m.b, -static_cast<int>(m.depth_used))));
  radius = std::max(radius, Real(64 * std::numeric_limits<Real>::epsilon()));
  const auto tr = phi_with_derivative(m.b, m.depth_used, ctx.guard);
  const Real near = 10 * ctx.guard;
  for (std::size_t j = 1; j < tr.phi_prime.size(); ++j) {
    const Real dp = abs(tr.phi_prime[j]);
    if (dp == 0) continue;
    if (abs(tr.phi[j]) <= near) radius = std::max(radius, Real(near / dp));
  }
  // Tie: within the radius some early phi_j can vanish, i.e. the matching
  // slope may be periodic. Only indices where the radius is still small
  // against 1/|phi_j'| say anything.
  for (std::size_t j = 1; j < tr.phi_prime.size(); ++j) {
    const Real dp = abs(tr.phi_prime[j]);
    if (dp * radius > Real(1e-3)) break;
    if (abs(tr.phi[j]) <= dp * 2 * radius + near) {
      m.window_tie = true;
      m.tie_index = j;
      break;
    }
  }
  m.error_b = radius;
  return m;
}

template <class Real>
EntropyResult<Real> entropy_from_slope(const SlopeMatch<Real>& m, int level) {
  using std::ldexp;
  using std::log;
  EntropyResult<Real> r;
  r.method = EntropyMethod::KneadBisect;
  r.renorm_depth = level;
  r.depth_used = m.depth_used;
  if (m.zero) {
    r.value = 0;
    r.error_radius = ldexp(log(slope_floor<Real>()), -level);
    r.zero = true;
    return r;
  }
  r.value = ldexp(log(m.b), -level);
  r.error_radius = ldexp(Real(m.error_b / m.b), -level);
  r.window_tie = m.window_tie;
  if (m.window_tie) r.tie_period = (m.tie_index + 1) << level;
  return r;
}

/// Entropy of x -> x^2 + a. Below (log 2)/2 (with 1% hysteresis) the itinerary
/// is deflated by period-doubling renormalisation and the result rescaled by
/// 2^-m, which keeps the relative accuracy of small entropies.
template <class Real>
EntropyResult<Real> quad_entropy(const Real& a, std::size_t depth, std::size_t iters,
                                 const PrecisionContext<Real>& ctx) {
  using std::ldexp;
  using std::log;
  const auto f = FamilyParam<Real>::quadratic(a);
  if (depth < 16) throw InvalidArgument("symbolic depth must be at least 16");
  if (iters < 32) throw InvalidArgument("bisection needs at least 32 iterations");

  const Real trigger = Real(0.99) * ln2<Real>() / 2;
  Itinerary target = kneading_itinerary(f, depth, ctx);
  SlopeMatch<Real> match = match_tent_slope(target, depth, iters, ctx);
  int level = 0;

  while (!match.zero && log(match.b) < trigger && level < kMaxRenormDepth) {
    const int next_level = level + 1;
    Itinerary deep = kneading_itinerary(f, depth << next_level, ctx);
    std::optional<Itinerary> reduced = deep;
    for (int k = 0; k < next_level && reduced; ++k) reduced = deflate(*reduced);
    if (!reduced || reduced->size() < kMinReliableDepth ||
        (reduced->ambiguous_at && *reduced->ambiguous_at < kMinReliableDepth)) {
      break;
    }
    SlopeMatch<Real> deeper;
    try {
      deeper = match_tent_slope(*reduced, depth, iters, ctx);
    } catch (const InsufficientPrecision&) {
      break;
    }
    match = deeper;
    level = next_level;
  }

  EntropyResult<Real> r = entropy_from_slope(match, level);
  if (level >= kMaxRenormDepth && !r.zero && r.value < Real(1e-4)) {
    r.value = 0;
    r.error_radius = ldexp(ln2<Real>(), -level);
    r.zero = true;
    r.window_tie = false;
    r.tie_period = 0;
  }
  return r;
}

template <class Real>
EntropyResult<Real> quad_entropy(const Real& a, const PrecisionContext<Real>& ctx) {
  return quad_entropy(a, ctx.depth, ctx.bisect_iters, ctx);
}

/// Entropy of x -> x^2 + a from the smallest root of the kneading determinant
/// (no renormalisation). The itinerary is cut at its first uncertain symbol;
/// a terminated one is replaced by its periodic extension.
template <class Real>
EntropyResult<double> quad_entropy_root(const Real& a, const PrecisionContext<Real>& ctx, double tol = 1e-15) {
  const auto f = FamilyParam<Real>::quadratic(a);
  Itinerary it = kneading_itinerary(f, ctx.depth, ctx);
  if (it.ambiguous_at) {
    if (*it.ambiguous_at < 8) {
      throw InsufficientPrecision("insufficient precision: ambiguous kneading symbol at index " +
                                  std::to_string(*it.ambiguous_at), 0, 0);
    }
    it = it.prefix(*it.ambiguous_at);
  }
  if (it.terminated) it = periodic_extension(it, std::max<std::size_t>(ctx.depth, 8));
  return kneading_root_entropy(sign_products(it), tol);
}

/// Number of maximal monotone pieces of the n-th iterate on the invariant
/// interval: one more than the number of distinct x with g^k(x) = 0, k < n.
template <class Real>
std::uint64_t lap_count(const FamilyParam<Real>& g, int n) {
  using std::abs;
  using std::sqrt;
  if (n < 1) throw InvalidArgument("lap count needs n >= 1");
  if (n > 22) throw InvalidArgument("lap count refused: n > 22 exceeds the exponential budget");
  const auto box = invariant_interval(g);
  const Real& v = g.value();

  std::vector<Real> all{Real(0)};
  std::vector<Real> level{Real(0)};
  for (int k = 1; k < n; ++k) {
    std::vector<Real> next;
    next.reserve(2 * level.size());
    for (const Real& y : level) {
      Real x;
      if (g.is_quadratic()) {
        if (y < v) continue;
        x = sqrt(y - v);
      } else {
        if (y > 1) continue;
        x = (1 - y) / v;
      }
      if (x == 0) {
        next.push_back(x);
      } else if (box.interior(x)) {
        next.push_back(x);
        next.push_back(-x);
      }
    }
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::sort(all.begin(), all.end());
  const Real tol = Real(1e-12) * (box.hi - box.lo);
  std::uint64_t distinct = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i == 0 || all[i] - all[i - 1] > tol) ++distinct;
  }
  return distinct + 1;
}

template <class Real>
double lap_entropy_estimate(const FamilyParam<Real>& g, int n) {
  return std::log(static_cast<double>(lap_count(g, n))) / n;
}

}  // namespace entroscope
