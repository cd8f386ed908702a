#pragma once

// Renormalisation structure of the quadratic family: superattracting
// parameters, renormalisation windows (entropy plateaus), and the
// band-merging cascade with its Feigenbaum extrapolations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entroscope/entropy.hpp"
#include "entroscope/errors.hpp"
#include "entroscope/kneading.hpp"
#include "entroscope/maps.hpp"
#include "entroscope/precision.hpp"
#include "entroscope/tent_dynamics.hpp"

namespace entroscope {

namespace detail {

/// xi_n(a) = f_a^n(a) and its parameter derivative.
template <class Real>
std::pair<Real, Real> critical_value(const Real& a, std::size_t n) {
  Real x = a;
  Real dx = 1;
  for (std::size_t j = 0; j < n; ++j) {
    dx = 1 + 2 * x * dx;
    x = x * x + a;
  }
  return {x, dx};
}

/// Newton polish of a root of xi_n inside [lo, hi]; keeps the input when a
/// step leaves the bracket or fails to improve.
template <class Real>
Real polish_center(Real a, std::size_t n, const Real& lo, const Real& hi) {
  using std::abs;
  for (int k = 0; k < 8; ++k) {
    const auto [v, dv] = critical_value(a, n);
    if (v == 0 || dv == 0) break;
    const Real next = a - v / dv;
    if (!(next >= lo && next <= hi)) break;
    if (!(abs(critical_value(next, n).first) < abs(v))) break;
    a = next;
  }
  return a;
}

}  // namespace detail

/// Parameters whose critical orbit is periodic of exact period p, in [lo, hi].
template <class Real>
std::vector<Real> superattracting_parameters(int period, const Real& lo, const Real& hi,
                                             const PrecisionContext<Real>& ctx, const Real& tol = Real(1e-14)) {
  using std::abs;
  (void)ctx;
  if (period < 1 || period > 24) throw InvalidArgument("period must be in [1, 24]");
  if (!(lo < hi)) throw InvalidArgument("range requires lo < hi");
  (void)FamilyParam<Real>::quadratic(lo);
  (void)FamilyParam<Real>::quadratic(hi);

  const auto n = static_cast<std::size_t>(period - 1);
  const std::size_t cells = std::min<std::size_t>(std::size_t{1} << 24,
                                                  std::max<std::size_t>(std::size_t{1} << 14, std::size_t{1} << (period + 2)));
  const auto found = detail::scan_roots([n](const Real& a) { return detail::critical_value(a, n).first; }, lo, hi,
                                        cells, tol);
  const Real step = (hi - lo) / cells;

  std::vector<Real> out;
  for (const auto& [root, cell] : found) {
    const Real clo = std::max(lo, Real(root - 2 * step));
    const Real chi = std::min(hi, Real(root + 2 * step));
    const Real a = detail::polish_center(root, n, clo, chi);
    bool lower_period = false;
    Real x = a;
    for (std::size_t j = 0; j < n; ++j) {
      if (abs(x) <= Real(1e-9)) {
        lower_period = true;
        break;
      }
      x = x * x + a;
    }
    if (lower_period) continue;
    if (!out.empty() && abs(out.back() - a) <= tol) continue;
    out.push_back(a);
  }
  return out;
}

template <class Real>
struct RenormWindow {
  int period = 1;
  Real left{};
  Real right{};
  Real center{};
  int feig_depth = 0;
  Real entropy{};        // plateau value
  Real entropy_error{};  // error radius of the plateau value at the center
};

namespace detail {

/// Multiplier continuation of the period-p orbit through the turning point,
/// from the superattracting center (multiplier 0) to the saddle-node
/// (multiplier +1). Unknowns (x, a); forward-mode derivatives of f_a^p.
template <class Real>
std::optional<Real> saddle_node_from_center(const Real& center, int period) {
  using std::abs;
  Real x = 0;
  Real a = center;
  constexpr int kSteps = 40;
  for (int s = 1; s <= kSteps; ++s) {
    const Real mu = Real(s) / kSteps;
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      Real y = x, yx = 1, ya = 0, yxx = 0, yxa = 0;
      for (int k = 0; k < period; ++k) {
        const Real ny = y * y + a;
        const Real nyx = 2 * y * yx;
        const Real nya = 2 * y * ya + 1;
        const Real nyxx = 2 * (yx * yx + y * yxx);
        const Real nyxa = 2 * (ya * yx + y * yxa);
        y = ny;
        yx = nyx;
        ya = nya;
        yxx = nyxx;
        yxa = nyxa;
      }
      const Real F = y - x;
      const Real G = yx - mu;
      const Real Fx = yx - 1, Fa = ya, Gx = yxx, Ga = yxa;
      const Real det = Fx * Ga - Fa * Gx;
      if (det == 0) return std::nullopt;
      const Real dxs = (F * Ga - G * Fa) / det;
      const Real das = (Fx * G - Gx * F) / det;
      x -= dxs;
      a -= das;
      if (!(a >= Real(-2) && a <= Real(0.25))) return std::nullopt;
      if (abs(dxs) + abs(das) <= Real(64) * std::numeric_limits<Real>::epsilon() * (1 + abs(x) + abs(a))) {
        ok = true;
        break;
      }
    }
    if (!ok && s == kSteps) {
      // Near the fold the last corrections stall at rounding level.
      ok = true;
    }
    if (!ok) return std::nullopt;
  }
  return a;
}

/// Tent kneading A C of slope b with phi_{p-1}(b) = 0, read from the signs of
/// phi_0 .. phi_{p-2}; the orbit is not iterated into the zero.
template <class Real>
Itinerary periodic_tent_kneading(const Real& b, int tent_period) {
  using std::abs;
  Itinerary it;
  Real phi = 1;
  for (int i = 0; i + 1 < tent_period; ++i) {
    it.symbols.push_back(phi > 0 ? Symbol::L : Symbol::R);
    phi = 1 - b * abs(phi);
  }
  it.symbols.push_back(Symbol::C);
  it.terminated = true;
  return it;
}

/// The superattracting parameter with kneading `target` (terminated), by
/// monotone bisection over the whole family followed by Newton polish.
template <class Real>
std::optional<Real> center_for_kneading(const Itinerary& target, const PrecisionContext<Real>& ctx) {
  Real lo = -2;
  Real hi = Real(0.25);
  const std::size_t n = target.size();
  for (std::size_t i = 0; i < ctx.bisect_iters; ++i) {
    const Real mid = (lo + hi) / 2;
    if (mid <= lo || mid >= hi) break;
    const auto k = kneading_itinerary(FamilyParam<Real>::quadratic(mid), n, ctx);
    const auto c = itinerary_compare(k, target);
    if (c == Ordering::Greater) {
      lo = mid;
    } else if (c == Ordering::Less) {
      hi = mid;
    } else {
      lo = hi = mid;
      break;
    }
  }
  const Real step = std::max(Real(hi - lo), Real(1e-6));
  const Real mid = (lo + hi) / 2;
  const Real a = polish_center(mid, n - 1, std::max(Real(-2), Real(mid - step)), std::min(Real(0.25), Real(mid + step)));
  using std::abs;
  if (abs(critical_value(a, n - 1).first) > Real(1e-10)) return std::nullopt;
  return a;
}

template <class Real>
bool exceeds_plateau(const Real& a, const Real& plateau, const PrecisionContext<Real>& ctx) {
  try {
    const auto h = quad_entropy(a, ctx);
    return h.value > plateau + 3 * h.error_radius;
  } catch (const InsufficientPrecision&) {
    return false;
  }
}

/// Window edges depend only on the window and the precision context, not on
/// the query point; sweeps hit the same window many times. Values are
/// deterministic, so a racing duplicate computation stores the same result.
template <class Real>
class EdgeMemo {
 public:
  using Edges = std::optional<std::pair<Real, Real>>;

  template <class Fn>
  Edges get(const std::string& key, Fn&& compute) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (const auto it = map_.find(key); it != map_.end()) return it->second;
    }
    Edges e = compute();
    std::lock_guard<std::mutex> lock(mutex_);
    return map_.emplace(key, std::move(e)).first->second;
  }

  static EdgeMemo& instance() {
    static EdgeMemo memo;
    return memo;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, Edges> map_;
};

template <class Real>
std::string memo_key(const char* kind, int period, const Real& center, const PrecisionContext<Real>& ctx) {
  return std::string(kind) + ":" + std::to_string(period) + ":" + to_string(center, 60) + ":" +
         std::to_string(ctx.depth) + ":" + to_string(ctx.guard, 20);
}

}  // namespace detail

/// Smallest-period renormalisation window containing a: the entropy plateau
/// around a superattracting center, bounded on the right by the saddle-node of
/// the periodic orbit and on the left by the point where entropy starts to
/// exceed the plateau value.
template <class Real>
std::optional<RenormWindow<Real>> detect_window(const Real& a, int max_period, const PrecisionContext<Real>& ctx) {
  using std::abs;
  using std::exp;
  using std::ldexp;
  using std::log;
  (void)FamilyParam<Real>::quadratic(a);
  if (max_period < 1 || max_period > 24) throw InvalidArgument("max period must be in [1, 24]");

  const auto h = quad_entropy(a, ctx);
  const std::size_t left_iters = is_native<Real> ? 48 : 64;

  if (h.zero) {
    // Zero-entropy plateau: the fixed-point window up to the Feigenbaum point.
    RenormWindow<Real> w;
    w.period = 1;
    w.center = 0;
    w.right = Real(0.25);
    w.entropy = 0;
    w.entropy_error = h.error_radius;
    // The edge sits at the accumulation point, left of every zero-entropy
    // parameter; bisect from -1.3, which has zero entropy.
    const auto edges = detail::EdgeMemo<Real>::instance().get(
        detail::memo_key("zero", 1, Real(0), ctx), [&]() -> typename detail::EdgeMemo<Real>::Edges {
          Real lo = -2, hi = Real(-1.3);
          for (std::size_t i = 0; i < left_iters; ++i) {
            const Real mid = (lo + hi) / 2;
            bool zero = false;
            try {
              zero = quad_entropy(mid, ctx).zero;
            } catch (const InsufficientPrecision&) {
              zero = false;
            }
            (zero ? hi : lo) = mid;
          }
          return std::make_pair(hi, Real(0.25));
        });
    w.left = std::min(edges->first, a);
    return w;
  }

  const int m = h.renorm_depth;
  const Real hm = ldexp(h.value, m);
  const Real b = exp(hm);
  const Real err_b = b * ldexp(h.error_radius, m);
  if (!(b > 1)) return std::nullopt;

  const auto trace = phi_with_derivative(b, static_cast<std::size_t>(max_period), ctx.guard);
  for (std::size_t j = 2; j < trace.phi_prime.size(); ++j) {
    const int tent_period = static_cast<int>(j) + 1;
    const int period = tent_period << m;
    if (period > max_period) break;
    const Real dp = abs(trace.phi_prime[j]);
    if (abs(trace.phi[j]) > dp * 10 * b * err_b + Real(1e-12)) continue;

    const Real width = std::max(Real(1e-9), Real(100 * err_b));
    const Real blo = std::max(Real(b - width), Real(1 + Real(1e-12)));
    const Real bhi = std::min(Real(b + width), Real(2));
    PeriodicSlopes<Real> slopes;
    try {
      slopes = periodic_tent_slopes(tent_period, blo, bhi, ctx);
    } catch (const std::exception&) {
      continue;
    }
    if (slopes.slopes.empty()) continue;
    Real bstar = slopes.slopes.front();
    for (const Real& s : slopes.slopes) {
      if (abs(s - b) < abs(bstar - b)) bstar = s;
    }

    Itinerary target = detail::periodic_tent_kneading(bstar, tent_period);
    for (int k = 0; k < m; ++k) target = inflate(target);
    const auto center = detail::center_for_kneading(target, ctx);
    if (!center) continue;

    const Real plateau = ldexp(log(bstar), -m);
    const auto edges = detail::EdgeMemo<Real>::instance().get(
        detail::memo_key("window", period, *center, ctx), [&]() -> typename detail::EdgeMemo<Real>::Edges {
          const auto right = detail::saddle_node_from_center(*center, period);
          if (!right) return std::nullopt;
          Real step = std::max(Real(*right - *center), Real(1e-6));
          Real outside;
          bool found = false;
          for (;;) {
            outside = std::max(Real(-2), Real(*center - step));
            if (detail::exceeds_plateau(outside, plateau, ctx)) {
              found = true;
              break;
            }
            if (outside == Real(-2)) break;
            step *= 2;
          }
          if (!found) return std::nullopt;
          Real lo = outside, hi = *center;
          for (std::size_t i = 0; i < left_iters; ++i) {
            const Real mid = (lo + hi) / 2;
            (detail::exceeds_plateau(mid, plateau, ctx) ? lo : hi) = mid;
          }
          return std::make_pair(hi, *right);
        });
    if (!edges) continue;

    RenormWindow<Real> w;
    w.period = period;
    w.center = *center;
    w.right = edges->second;
    w.left = edges->first;
    w.feig_depth = m;
    w.entropy = plateau;
    w.entropy_error = quad_entropy(*center, ctx).error_radius;
    if (a >= w.left && a <= w.right) return w;
  }
  return std::nullopt;
}

template <class Real>
struct CascadeTable {
  std::vector<Real> a;             // a_0 = -2, ..., a_M
  std::vector<Real> h_err;         // entropy error radius at each a_m
  std::vector<Real> ratios;        // (a_m - a_{m-1}) / (a_{m+1} - a_m), m = 1..M-1
  std::optional<Real> delta_star;  // extrapolated ratio limit
  std::optional<Real> a_F;
  std::optional<Real> a_F_uncertainty;
  bool partial = false;
  std::string warning;

  int depth() const { return static_cast<int>(a.size()) - 1; }
};

/// Aitken extrapolation on the last three ratios; the last ratio when fewer
/// are available or the second difference vanishes.
template <class Real>
Real extrapolate_delta(const std::vector<Real>& ratios) {
  using std::abs;
  if (ratios.empty()) throw InvalidArgument("no ratios to extrapolate");
  const std::size_t k = ratios.size();
  if (k < 3) return ratios.back();
  const Real& r0 = ratios[k - 3];
  const Real& r1 = ratios[k - 2];
  const Real& r2 = ratios[k - 1];
  const Real d1 = r1 - r0;
  const Real d2 = r2 - r1;
  const Real denom = d2 - d1;
  if (denom == 0 || abs(denom) < Real(1e-300)) return r2;
  return r2 - d2 * d2 / denom;
}

namespace detail {

template <class Real>
std::pair<Real, Real> extrapolate_feigenbaum_point(const std::vector<Real>& a, const std::vector<Real>& ratios) {
  const std::size_t M = a.size() - 1;
  const Real delta = extrapolate_delta(ratios);
  return {a[M] + (a[M] - a[M - 1]) / (delta - 1), delta};
}

template <class Real>
void fill_extrapolations(CascadeTable<Real>& t) {
  using std::abs;
  t.ratios.clear();
  for (std::size_t m = 1; m + 1 < t.a.size(); ++m) {
    t.ratios.push_back((t.a[m] - t.a[m - 1]) / (t.a[m + 1] - t.a[m]));
  }
  t.delta_star.reset();
  t.a_F.reset();
  t.a_F_uncertainty.reset();
  if (t.ratios.empty()) return;
  const auto [aF, delta] = extrapolate_feigenbaum_point(t.a, t.ratios);
  t.delta_star = delta;
  t.a_F = aF;
  // Drift against the same extrapolation one row shallower.
  Real previous = t.a[t.a.size() - 2];
  if (t.ratios.size() >= 2) {
    std::vector<Real> a_short(t.a.begin(), t.a.end() - 1);
    std::vector<Real> r_short(t.ratios.begin(), t.ratios.end() - 1);
    previous = extrapolate_feigenbaum_point(a_short, r_short).first;
  }
  t.a_F_uncertainty = abs(aF - previous);
}

}  // namespace detail

/// Parameter with h = target on (lo, hi), where h(lo) > target >= h(hi).
template <class Real>
std::pair<Real, Real> solve_entropy_level(const Real& target, Real lo, Real hi, const PrecisionContext<Real>& ctx,
                                          std::size_t iters) {
  using std::abs;
  Real err = 0;
  for (std::size_t i = 0; i < iters; ++i) {
    const Real mid = (lo + hi) / 2;
    if (mid <= lo || mid >= hi) break;
    const auto h = quad_entropy(mid, ctx);
    err = h.error_radius;
    if (abs(h.value - target) <= h.error_radius && !h.zero) {
      lo = hi = mid;
      break;
    }
    (h.value > target ? lo : hi) = mid;
  }
  return {(lo + hi) / 2, err};
}

/// a_m with h(a_m) = 2^-m log 2 for m = 0..M, with ratio and accumulation
/// extrapolations. A failing entropy solve truncates the table (partial).
template <class Real>
CascadeTable<Real> band_merging_cascade(int M, const PrecisionContext<Real>& ctx) {
  using std::ldexp;
  if (M < 2 || M > 10) throw InvalidArgument("cascade depth must be in [2, 10]");
  CascadeTable<Real> t;
  t.a.push_back(Real(-2));
  t.h_err.push_back(quad_entropy(Real(-2), ctx).error_radius);
  const std::size_t iters = is_native<Real> ? 60 : std::min<std::size_t>(ctx.bisect_iters, 96);
  for (int m = 1; m <= M; ++m) {
    const Real target = ldexp(ln2<Real>(), -m);
    try {
      const auto [am, err] = solve_entropy_level(target, t.a.back(), Real(-1.3), ctx, iters);
      t.a.push_back(am);
      t.h_err.push_back(err);
    } catch (const InsufficientPrecision& e) {
      t.partial = true;
      t.warning = "cascade truncated at m=" + std::to_string(m) + ": " + e.what();
      break;
    }
  }
  detail::fill_extrapolations(t);
  return t;
}

/// Superstable cascade: s_m is the period-2^m superattracting parameter of
/// the period-doubling cascade (s_0 = 0, s_1 = -1). Each s_{m+1} starts from a
/// geometric guess and is refined by Newton on xi_{2^{m+1}-1}. Its gap ratios
/// share the limit delta* with the band-merging table.
template <class Real>
std::vector<Real> superstable_cascade(int M) {
  using std::abs;
  if (M < 2 || M > 16) throw InvalidArgument("superstable cascade depth must be in [2, 16]");
  std::vector<Real> s{Real(0), Real(-1)};
  Real delta = Real(4.669);
  for (int m = 2; m <= M; ++m) {
    const std::size_t n = (std::size_t{1} << m) - 1;
    const Real gap = s[m - 1] - s[m - 2];
    Real a = s[m - 1] + gap / delta;
    for (int it = 0; it < 100; ++it) {
      const auto [v, dv] = detail::critical_value(a, n);
      if (dv == 0) break;
      const Real step = v / dv;
      a -= step;
      if (abs(step) <= 16 * std::numeric_limits<Real>::epsilon() * abs(gap)) break;
    }
    s.push_back(a);
    if (m >= 3) delta = (s[m - 2] - s[m - 3]) / (s[m - 1] - s[m - 2]);
  }
  return s;
}

struct FeigenbaumPoint {
  double a_F;
  double uncertainty;
};

template <class Real>
FeigenbaumPoint feigenbaum_aF(const CascadeTable<Real>& t) {
  if (t.a.size() < 3 || !t.a_F) throw InvalidArgument("cascade table needs at least 3 rows");
  return {to_double(*t.a_F), to_double(*t.a_F_uncertainty)};
}

}  // namespace entroscope
