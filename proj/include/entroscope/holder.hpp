#pragma once

// Local regularity of a -> h(a): pointwise Hölder exponents from geometric
// t-grids, the h/lambda prediction, flatness at parabolic parameters, the
// exponent at the Feigenbaum point, and a uniform (C, beta) envelope.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "entroscope/critical_orbit.hpp"
#include "entroscope/entropy.hpp"
#include "entroscope/errors.hpp"
#include "entroscope/precision.hpp"
#include "entroscope/renorm.hpp"
#include "entroscope/stats.hpp"

namespace entroscope {

enum class Side { Left, Right, Both };

inline const char* side_name(Side s) {
  switch (s) {
    case Side::Left: return "L";
    case Side::Right: return "R";
    case Side::Both: return "both";
  }
  return "?";
}

inline Side parse_side(const std::string& s) {
  if (s == "L" || s == "left" || s == "Left") return Side::Left;
  if (s == "R" || s == "right" || s == "Right") return Side::Right;
  if (s == "both" || s == "Both" || s == "B") return Side::Both;
  throw InvalidArgument("side must be L, R or both");
}

inline double exponent_formula(double h, double lambda) {
  if (!(lambda > 0)) throw InvalidArgument("exponent formula needs lambda > 0");
  return h / lambda;
}

inline constexpr double kMinResolvedLyapunov = 0.05;

/// h(a) / lambda(a), with lambda the finite-time exponent at n, accepted only
/// when its tail window has converged and is clearly positive.
template <class Real>
double theoretical_exponent(const Real& a, std::size_t n, const PrecisionContext<Real>& ctx) {
  const auto lyap = lyapunov_estimate(a, n, ctx);
  if (!lyap.converged || !lyap.value) throw NotResolved("lambda(a) not resolved at a=" + to_string(a));
  const double lambda = to_double(*lyap.value);
  if (!(lambda > kMinResolvedLyapunov)) throw NotResolved("lambda(a) not resolved at a=" + to_string(a));
  return exponent_formula(to_double(quad_entropy(a, ctx).value), lambda);
}

struct HolderSample {
  double t;
  double dh;      // h(a +/- t) - h(a), signed
  double err;     // combined error radius of the two evaluations
  bool used;
};

struct HolderEstimate {
  double a = 0;
  Side side = Side::Right;
  std::optional<double> slope;
  double stderr_ = 0;
  double t_min = 0;
  double t_max = 0;
  std::size_t points_used = 0;
  bool flat = false;
  bool reliable = false;
  // Non-increasing h: Right increments <= 0, Left increments >= 0 (up to error).
  bool monotone_ok = true;
  std::optional<double> theoretical;
  std::vector<HolderSample> samples;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kReliablePoints = 5;

namespace detail {

template <class Real>
void collect_side(const Real& a, Side side, double t0, double ratio, int count, const EntropyResult<Real>& h0,
                  const PrecisionContext<Real>& ctx, HolderEstimate& est) {
  const double sign = side == Side::Right ? 1.0 : -1.0;
  double t = t0;
  for (int k = 0; k < count; ++k, t *= ratio) {
    const Real at = a + Real(sign * t);
    if (!(at >= Real(-2) && at <= Real(0.25))) {
      est.warnings.push_back("clipped t=" + to_string(t) + " outside the parameter domain");
      continue;
    }
    EntropyResult<Real> ht;
    try {
      ht = quad_entropy(at, ctx);
    } catch (const InsufficientPrecision&) {
      est.warnings.push_back("entropy unresolved at t=" + to_string(t));
      continue;
    }
    HolderSample s;
    s.t = t;
    s.dh = to_double(Real(ht.value - h0.value));
    s.err = to_double(Real(ht.error_radius + h0.error_radius));
    s.used = std::abs(s.dh) > 10 * s.err;
    const double thr = 2 * s.err;
    if (side == Side::Right ? s.dh > thr : s.dh < -thr) est.monotone_ok = false;
    est.samples.push_back(s);
  }
}

inline void regress_samples(HolderEstimate& est) {
  std::vector<double> x, y;
  for (const auto& s : est.samples) {
    if (!s.used) continue;
    x.push_back(std::log(s.t));
    y.push_back(std::log(std::abs(s.dh)));
  }
  est.points_used = x.size();
  if (x.empty()) {
    est.flat = true;
    return;
  }
  est.t_min = std::exp(*std::min_element(x.begin(), x.end()));
  est.t_max = std::exp(*std::max_element(x.begin(), x.end()));
  if (x.size() >= 2 && est.t_max > est.t_min) {
    const auto fit = least_squares(x, y);
    est.slope = fit.slope;
    est.stderr_ = fit.slope_stderr;
  }
  est.reliable = est.slope.has_value() && est.points_used >= kReliablePoints;
}

}  // namespace detail

/// Regression of log|h(a +/- t) - h(a)| on log t over t = t0 * ratio^k,
/// using only increments larger than 10x their error radius.
template <class Real>
HolderEstimate estimate_local_exponent(const Real& a, Side side, double t0, double ratio, int count,
                                       const PrecisionContext<Real>& ctx) {
  (void)FamilyParam<Real>::quadratic(a);
  if (!(t0 > 0 && t0 <= 1e-2)) throw InvalidArgument("t0 must be in (0, 1e-2]");
  if (!(ratio > 0 && ratio < 1)) throw InvalidArgument("ratio must be in (0, 1)");
  if (count < 8) throw InvalidArgument("count must be at least 8");

  HolderEstimate est;
  est.a = to_double(a);
  est.side = side;
  const auto h0 = quad_entropy(a, ctx);
  if (side == Side::Both) {
    detail::collect_side(a, Side::Left, t0, ratio, count, h0, ctx, est);
    detail::collect_side(a, Side::Right, t0, ratio, count, h0, ctx, est);
  } else {
    detail::collect_side(a, side, t0, ratio, count, h0, ctx, est);
  }
  if (est.samples.empty() && est.warnings.size() == static_cast<std::size_t>(side == Side::Both ? 2 * count : count)) {
    throw InvalidArgument("every offset falls outside the parameter domain on the requested side");
  }
  detail::regress_samples(est);
  return est;
}

struct TwoSidedHolder {
  HolderEstimate left;
  HolderEstimate right;
  // Both sides non-flat: the heuristic reading of "h not locally constant on
  // either side", not a membership proof.
  bool in_V = false;
};

template <class Real>
TwoSidedHolder estimate_two_sided(const Real& a, double t0, double ratio, int count, const PrecisionContext<Real>& ctx) {
  TwoSidedHolder out;
  out.left = estimate_local_exponent(a, Side::Left, t0, ratio, count, ctx);
  out.right = estimate_local_exponent(a, Side::Right, t0, ratio, count, ctx);
  out.in_V = !out.left.flat && !out.right.flat;
  return out;
}

struct FlatnessFit {
  double a = 0;
  Side side = Side::Right;
  double kappa = 0;
  double c = 0;
  double residual = 0;
  std::size_t points_used = 0;
  double decades = 0;
  // Fit with a log(1/t) factor divided out of -log|dh| (when requested).
  std::optional<double> kappa_log_corrected;
  std::vector<HolderSample> samples;
};

inline constexpr std::size_t kMinFlatnessPoints = 6;
inline constexpr double kMinFlatnessDecades = 1.5;

/// Fits log(-log|dh|) = log c + kappa * log(1/t) over the given series.
inline FlatnessFit fit_flatness(const std::vector<double>& t, const std::vector<double>& dh, bool log_correction = false) {
  if (t.size() != dh.size()) throw InvalidArgument("series lengths differ");
  std::vector<double> x, y, yc;
  double tmin = 0, tmax = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = std::abs(dh[i]);
    if (!(d > 0 && d < 1 && t[i] > 0 && t[i] < 1)) continue;
    const double lt = std::log(1 / t[i]);
    x.push_back(lt);
    y.push_back(std::log(-std::log(d)));
    if (log_correction) yc.push_back(y.back() - std::log(lt));
    tmin = x.size() == 1 ? t[i] : std::min(tmin, t[i]);
    tmax = x.size() == 1 ? t[i] : std::max(tmax, t[i]);
  }
  FlatnessFit f;
  f.points_used = x.size();
  f.decades = x.empty() ? 0 : std::log10(tmax / tmin);
  if (f.points_used < kMinFlatnessPoints || f.decades < kMinFlatnessDecades) {
    throw InsufficientSignal("insufficient signal: " + std::to_string(f.points_used) + " points over " +
                             std::to_string(f.decades) + " decades");
  }
  const auto fit = least_squares(x, y);
  f.kappa = fit.slope;
  f.c = std::exp(fit.intercept);
  f.residual = fit.residual;
  if (log_correction) f.kappa_log_corrected = least_squares(x, yc).slope;
  return f;
}

/// Multiplier of the cycle the critical orbit settles on, if one of period
/// <= max_period is found after `transient` steps.
inline std::optional<std::pair<int, double>> limit_cycle_multiplier(double a, int max_period = 64,
                                                                    std::size_t transient = 100000) {
  double x = 0;
  for (std::size_t i = 0; i < transient; ++i) x = x * x + a;
  for (int p = 1; p <= max_period; ++p) {
    double y = x;
    double mult = 1;
    for (int k = 0; k < p; ++k) {
      mult *= 2 * y;
      y = y * y + a;
    }
    if (std::abs(y - x) <= 1e-3) return std::make_pair(p, mult);
  }
  return std::nullopt;
}

inline std::vector<double> default_flatness_grid() {
  std::vector<double> t;
  for (int k = 0; k < 12; ++k) t.push_back(0.03 * std::ldexp(1.0, -k));
  return t;
}

/// Entropy flatness next to a parabolic parameter: -log|dh| against 1/t.
template <class Real>
FlatnessFit parabolic_flatness_fit(const Real& a, Side side, const std::vector<double>& t_grid,
                                   const PrecisionContext<Real>& ctx, bool log_correction = false) {
  (void)FamilyParam<Real>::quadratic(a);
  if (side == Side::Both) throw InvalidArgument("flatness is fitted one side at a time");
  const auto cyc = limit_cycle_multiplier(to_double(a));
  if (!cyc || std::abs(cyc->second - 1) >= 0.05) {
    throw NotApplicable("not applicable: a=" + to_string(a) + " is not a parabolic parameter");
  }
  const auto h0 = quad_entropy(a, ctx);
  if (!(h0.error_radius <= Real(1e-12))) {
    throw InsufficientPrecision("flatness fit needs entropy error <= 1e-12; raise the precision", 0, 0);
  }
  const double sign = side == Side::Right ? 1.0 : -1.0;
  std::vector<double> ts, dhs;
  std::vector<HolderSample> samples;
  for (double t : t_grid) {
    const Real at = a + Real(sign * t);
    if (!(at >= Real(-2) && at <= Real(0.25))) continue;
    const auto ht = quad_entropy(at, ctx);
    HolderSample s;
    s.t = t;
    // Kept in Real until here: the increments can be far below double range
    // relative to h, but not below double's exponent range.
    s.dh = to_double(Real(ht.value - h0.value));
    s.err = to_double(Real(ht.error_radius + h0.error_radius));
    s.used = std::abs(s.dh) > 10 * s.err;
    samples.push_back(s);
    if (s.used) {
      ts.push_back(t);
      dhs.push_back(s.dh);
    }
  }
  auto fit = fit_flatness(ts, dhs, log_correction);
  fit.a = to_double(a);
  fit.side = side;
  fit.samples = std::move(samples);
  return fit;
}

struct AccumulationExponent {
  double slope = 0;
  double reference = 0;  // log 2 / log(delta*) from the same table
  double stderr_ = 0;
  std::size_t rows_used = 0;
  bool reliable = false;
};

/// Slope of log h(a_m) against log|a_m - a_F| over rows m >= 1.
template <class Real>
AccumulationExponent holder_at_aF(const CascadeTable<Real>& t) {
  if (!t.a_F || !t.delta_star) throw InvalidArgument("cascade table lacks extrapolations");
  const double aF = to_double(*t.a_F);
  std::vector<double> x, y;
  for (std::size_t m = 1; m < t.a.size(); ++m) {
    const double gap = std::abs(to_double(t.a[m]) - aF);
    if (!(gap > 0)) continue;
    x.push_back(std::log(gap));
    y.push_back(std::log(std::ldexp(std::log(2.0), -static_cast<int>(m))));
  }
  if (x.size() < 2) throw InvalidArgument("cascade table too shallow for a regression");
  const auto fit = least_squares(x, y);
  AccumulationExponent r;
  r.slope = fit.slope;
  r.stderr_ = fit.slope_stderr;
  r.rows_used = x.size();
  r.reference = std::log(2.0) / std::log(to_double(*t.delta_star));
  r.reliable = t.depth() >= 5;
  return r;
}

struct UniformHolder {
  double C = 0;
  double beta = 0;
  std::size_t pairs = 0;       // pairs sampled
  std::size_t pairs_used = 0;  // non-flat pairs entering the envelope
};

/// Envelope |dh| <= C |da|^beta over sampled pairs of a uniform grid. C comes
/// from the upper convex hull of (log|da|, log|dh|) at the mean abscissa;
/// beta is then the largest exponent every sampled pair obeys.
template <class Real>
UniformHolder uniform_holder_fit(const Real& lo, const Real& hi, std::size_t grid, std::size_t pair_budget,
                                 std::uint64_t seed, const PrecisionContext<Real>& ctx) {
  (void)FamilyParam<Real>::quadratic(lo);
  (void)FamilyParam<Real>::quadratic(hi);
  if (!(lo < hi)) throw InvalidArgument("range requires lo < hi");
  if (grid < 100) throw InvalidArgument("grid must be at least 100");

  std::vector<double> a(grid), h(grid), e(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const Real ai = lo + (hi - lo) * Real(static_cast<double>(i)) / Real(static_cast<double>(grid - 1));
    const auto r = quad_entropy(ai, ctx);
    a[i] = to_double(ai);
    h[i] = to_double(r.value);
    e[i] = to_double(r.error_radius);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t lag = 1; lag < grid; lag *= 2) {
    for (std::size_t i = 0; i + lag < grid; ++i) pairs.emplace_back(i, i + lag);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid - 1);
  while (pairs.size() < pair_budget) {
    std::size_t i = pick(rng), j = pick(rng);
    if (i == j) continue;
    pairs.emplace_back(std::min(i, j), std::max(i, j));
  }

  UniformHolder out;
  out.pairs = pairs.size();
  std::vector<std::pair<double, double>> pts;
  for (const auto& [i, j] : pairs) {
    const double dh = std::abs(h[i] - h[j]);
    if (!(dh > 10 * (e[i] + e[j]))) continue;
    pts.emplace_back(std::log(std::abs(a[j] - a[i])), std::log(dh));
  }
  out.pairs_used = pts.size();
  if (pts.empty()) return out;

  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> hull;
  auto cross = [](const auto& o, const auto& p, const auto& q) {
    return (p.first - o.first) * (q.second - o.second) - (p.second - o.second) * (q.first - o.first);
  };
  for (const auto& p : pts) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) >= 0) hull.pop_back();
    hull.push_back(p);
  }
  double mean_x = 0;
  for (const auto& p : pts) mean_x += p.first;
  mean_x /= pts.size();

  double c = hull.front().second;
  if (hull.size() >= 2) {
    std::size_t k = 0;
    while (k + 2 < hull.size() && hull[k + 1].first < mean_x) ++k;
    const auto& p = hull[k];
    const auto& q = hull[k + 1];
    const double s = (q.second - p.second) / (q.first - p.first);
    c = p.second - s * p.first;  // value of the support line at log|da| = 0
  }
  double beta = 1e300;
  for (const auto& [x, y] : pts) {
    if (x < 0) beta = std::min(beta, (y - c) / x);
  }
  out.C = std::exp(c);
  out.beta = beta;
  return out;
}

}  // namespace entroscope
