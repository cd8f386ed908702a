#pragma once

// Parameter dynamics of the tent family: phi_n(b) = T_b^n(1) and its
// b-derivative, periodic slopes, safe preimages of the turning point, and the
// Przytycki lower bound on returns of the critical orbit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entroscope/errors.hpp"
#include "entroscope/maps.hpp"
#include "entroscope/precision.hpp"

namespace entroscope {

template <class Real>
struct PhiTrace {
  std::vector<Real> phi;        // phi_0 .. phi_n
  std::vector<Real> phi_prime;  // up to and including zero_hit
  std::optional<std::size_t> zero_hit;
};

template <class Real>
PhiTrace<Real> phi_with_derivative(const Real& b, std::size_t n, const Real& guard) {
  using std::abs;
  (void)FamilyParam<Real>::tent(b);
  PhiTrace<Real> tr;
  tr.phi.reserve(n + 1);
  tr.phi_prime.reserve(n + 1);
  Real phi = 1;
  Real dphi = 0;
  tr.phi.push_back(phi);
  tr.phi_prime.push_back(dphi);
  for (std::size_t i = 1; i <= n; ++i) {
    // phi_i = 1 + k_i b phi_{i-1}, k_i = -sgn(phi_{i-1})
    const int k = phi > 0 ? -1 : 1;
    const Real next = 1 + k * b * phi;
    if (!tr.zero_hit) {
      dphi = k * (phi + b * dphi);
      tr.phi_prime.push_back(dphi);
    }
    phi = next;
    tr.phi.push_back(phi);
    if (!tr.zero_hit && abs(phi) <= guard) tr.zero_hit = i;
  }
  return tr;
}

template <class Real>
PhiTrace<Real> phi_with_derivative(const Real& b, std::size_t n, const PrecisionContext<Real>& ctx) {
  return phi_with_derivative(b, n, ctx.guard);
}

/// phi_n(b) without derivative bookkeeping.
template <class Real>
Real phi_value(const Real& b, std::size_t n) {
  using std::abs;
  Real phi = 1;
  for (std::size_t i = 0; i < n; ++i) phi = 1 - b * abs(phi);
  return phi;
}

/// C(b, n) = max over 5 <= j <= n of max(|phi'_j| / b^j, b^j / |phi'_j|).
template <class Real>
Real growth_check(const Real& b, std::size_t n, const PrecisionContext<Real>& ctx) {
  using std::abs;
  using std::pow;
  const auto tr = phi_with_derivative(b, n, ctx);
  if (tr.zero_hit && *tr.zero_hit < n) {
    throw DerivativeUndefined("derivative undefined beyond j=" + std::to_string(*tr.zero_hit));
  }
  Real c = 1;
  Real bj = pow(b, 5);
  for (std::size_t j = 5; j <= n; ++j, bj *= b) {
    const Real dp = abs(tr.phi_prime[j]);
    if (dp == 0) throw DerivativeUndefined("phi' vanished at j=" + std::to_string(j));
    c = std::max(c, std::max(dp / bj, bj / dp));
  }
  return c;
}

template <class Real>
struct PeriodicSlopes {
  std::vector<Real> slopes;
  // Two roots landed within two grid cells of each other; closer pairs may
  // have been merged.
  bool resolution_warning = false;
};

namespace detail {

/// Sign-change scan on a uniform grid plus bisection. An exact zero on a grid
/// node counts only if the function changes sign across it; a rounded-off
/// tangency (e.g. phi_3(b) ~ 2 (b-1)^2 next to b = 1) is not a root.
template <class Real, class Fn>
std::vector<std::pair<Real, std::size_t>> scan_roots(Fn&& fn, const Real& lo, const Real& hi, std::size_t cells,
                                                     const Real& tol) {
  std::vector<std::pair<Real, std::size_t>> roots;
  const Real step = (hi - lo) / cells;
  auto crosses = [&](const Real& x) {
    const Real h = step / 64;
    const Real l = fn(Real(x - h)), r = fn(Real(x + h));
    return l != 0 && r != 0 && ((l < 0) != (r < 0));
  };
  Real x0 = lo;
  Real f0 = fn(x0);
  if (f0 == 0 && crosses(x0)) roots.emplace_back(x0, 0);
  for (std::size_t k = 1; k <= cells; ++k) {
    const Real x1 = k == cells ? hi : lo + step * k;
    const Real f1 = fn(x1);
    if (f1 == 0) {
      if (crosses(x1)) roots.emplace_back(x1, k);
    } else if (f0 != 0 && ((f0 < 0) != (f1 < 0))) {
      Real a = x0, b = x1, fa = f0;
      while (b - a > tol) {
        const Real mid = (a + b) / 2;
        if (mid <= a || mid >= b) break;
        const Real fm = fn(mid);
        if (fm == 0) {
          a = b = mid;
          break;
        }
        if ((fm < 0) == (fa < 0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.emplace_back((a + b) / 2, k);
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

}  // namespace detail

/// All slopes in [lo, hi] whose turning point has exact period p.
template <class Real>
PeriodicSlopes<Real> periodic_tent_slopes(int p, const Real& lo, const Real& hi, const PrecisionContext<Real>& ctx,
                                          const Real& tol = Real(1e-14)) {
  using std::abs;
  using std::pow;
  using std::sqrt;
  if (p < 3) throw InvalidArgument("period is necessarily at least 3");
  if (!(lo < hi) || !(lo > 1) || !(hi <= 2)) throw InvalidArgument("slope window must satisfy 1 < lo < hi <= 2");
  (void)ctx;

  constexpr std::size_t kCells = std::size_t{1} << 14;
  const auto n = static_cast<std::size_t>(p - 1);
  // Bisect to full working precision; `tol` only merges duplicates.
  auto found = detail::scan_roots([n](const Real& b) { return phi_value(b, n); }, lo, hi, kCells, Real(0));

  PeriodicSlopes<Real> out;
  std::size_t last_cell = 0;
  bool have_last = false;
  for (const auto& [b, cell] : found) {
    bool lower_period = false;
    Real phi = 1;
    for (std::size_t j = 1; j < n; ++j) {
      phi = 1 - b * abs(phi);
      if (abs(phi) <= Real(1e-9)) {
        lower_period = true;
        break;
      }
    }
    if (lower_period) continue;
    if (pow(b, p) < 2 * sqrt(Real(2))) {
      throw std::logic_error("periodic slope violates b^p >= 2 sqrt 2: " + to_string(b));
    }
    if (have_last && cell <= last_cell + 2) out.resolution_warning = true;
    if (!out.slopes.empty() && abs(out.slopes.back() - b) <= tol) continue;
    out.slopes.push_back(b);
    last_cell = cell;
    have_last = true;
  }
  return out;
}

template <class Real>
struct SafeSet {
  Real b;
  int depth = 0;
  std::vector<Real> elements;
};

/// Preimages x of the turning point (T_b^j(x) = 0 for some 1 <= j <= N)
/// that are not on the forward orbit of the turning point.
template <class Real>
SafeSet<Real> safe_elements(const Real& b, int depth, const PrecisionContext<Real>& ctx) {
  using std::abs;
  if (depth < 1 || depth > 12) throw InvalidArgument("safe set depth must be in [1, 12]");
  const auto tent = FamilyParam<Real>::tent(b);
  const auto box = invariant_interval(tent);

  std::vector<Real> all;
  std::vector<Real> level{Real(0)};
  for (int j = 1; j <= depth; ++j) {
    std::vector<Real> next;
    next.reserve(2 * level.size());
    for (const Real& y : level) {
      if (y > 1) continue;
      const Real x = (1 - y) / b;
      if (x == 0) {
        next.push_back(x);
        continue;
      }
      if (box.interior(x)) {
        next.push_back(x);
        next.push_back(-x);
      }
    }
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
  }

  std::vector<Real> orbit;
  orbit.reserve(4 * static_cast<std::size_t>(depth) + 1);
  Real x = 0;
  for (int k = 0; k <= 4 * depth; ++k) {
    orbit.push_back(x);
    x = eval(tent, x);
  }
  const Real near = 10 * ctx.guard;

  std::sort(all.begin(), all.end());
  SafeSet<Real> out{b, depth, {}};
  for (const Real& e : all) {
    if (!out.elements.empty() && abs(e - out.elements.back()) <= Real(1e-12)) continue;
    const bool on_orbit =
        std::any_of(orbit.begin(), orbit.end(), [&](const Real& o) { return abs(o - e) <= near; });
    if (!on_orbit) out.elements.push_back(e);
  }
  return out;
}

/// Periodic slope of smallest period strictly inside (b1, b2); ties go to the
/// smaller slope.
template <class Real>
std::optional<std::pair<Real, int>> periodic_slope_in_gap(const Real& b1, const Real& b2, int max_period,
                                                          const PrecisionContext<Real>& ctx) {
  if (!(b1 < b2)) throw InvalidArgument("gap requires b1 < b2");
  if (!(b1 > 1) || !(b2 <= 2)) throw InvalidArgument("gap must lie in (1, 2]");
  const Real margin = Real(1e-13);
  for (int p = 3; p <= max_period; ++p) {
    const auto found = periodic_tent_slopes(p, b1, b2, ctx);
    for (const Real& s : found.slopes) {
      if (s > b1 + margin && s < b2 - margin) return std::make_pair(s, p);
    }
  }
  return std::nullopt;
}

template <class Real>
struct PrzytyckiReport {
  Real lhs;
  Real rhs;
  Real c;      // |g'(x)| <= c |x|
  Real gamma;  // max |g'| on the invariant interval
  bool pass = false;
};

/// Heuristic: does the critical orbit settle on an attracting cycle of period
/// at most max_period? Returns the period if so.
template <class Real>
std::optional<int> attracting_cycle_period(const Real& a, int max_period, std::size_t transient = 20000) {
  using std::abs;
  const auto f = FamilyParam<double>::quadratic(to_double(a));
  const double av = f.value();
  double x = 0;
  for (std::size_t i = 0; i < transient; ++i) x = x * x + av;
  for (int p = 1; p <= max_period; ++p) {
    double y = x;
    double mult = 1;
    for (int k = 0; k < p; ++k) {
      mult *= 2 * y;
      y = y * y + av;
    }
    if (std::abs(y - x) <= 1e-9 * std::max(1.0, std::abs(x)) && std::abs(mult) < 1.0) return p;
  }
  return std::nullopt;
}

template <class Real>
PrzytyckiReport<Real> przytycki_check(const FamilyParam<Real>& g, int n, const PrecisionContext<Real>& ctx) {
  using std::abs;
  using std::pow;
  (void)ctx;
  if (n < 0) throw InvalidArgument("n must be non-negative");
  Real x = 0;
  for (int k = 0; k <= n; ++k) x = eval(g, x);

  PrzytyckiReport<Real> rep;
  rep.lhs = abs(x);
  if (g.is_quadratic()) {
    if (attracting_cycle_period(g.value(), n + 1)) {
      throw NotApplicable("map has an attracting periodic orbit of period <= n+1");
    }
    rep.c = 2;
    rep.gamma = 2 * invariant_interval(g).hi;
    rep.rhs = Real(0.25) / rep.c / pow(rep.gamma, n);
  } else {
    // No bound |g'(x)| <= C|x| exists for a tent map; only non-return is checked.
    rep.c = g.value();
    rep.gamma = g.value();
    rep.rhs = 0;
  }
  rep.pass = rep.lhs > rep.rhs;
  return rep;
}

}  // namespace entroscope
