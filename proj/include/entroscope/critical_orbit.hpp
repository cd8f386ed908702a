#pragma once

// Statistics along the critical orbit of x -> x^2 + a: the critical value
// xi_j(a) = f^j(a), its parameter derivative, finite-time Lyapunov exponents,
// the transversality sum Q_n and the weak-regularity return statistic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "entroscope/errors.hpp"
#include "entroscope/maps.hpp"
#include "entroscope/precision.hpp"

namespace entroscope {

template <class Real>
struct CriticalOrbitStats {
  std::vector<Real> xi;        // xi_0 = a, ..., xi_n
  std::vector<Real> xi_prime;  // d xi_j / da
  // lambda[j] = (1/j) log|(f^j)'(a)|; empty at j = 0 and past a critical hit.
  std::vector<std::optional<Real>> lambda;
  // q[j] = sum_{k<=j} 1/(f^k)'(a); empty past a critical hit.
  std::vector<std::optional<Real>> q;
  std::optional<std::size_t> critical_hit;  // first j with |xi_j| <= guard
};

template <class Real>
CriticalOrbitStats<Real> critical_stats(const Real& a, std::size_t n, const PrecisionContext<Real>& ctx) {
  using std::abs;
  using std::log;
  const auto f = FamilyParam<Real>::quadratic(a);
  if (n < 1) throw InvalidArgument("orbit length must be at least 1");

  CriticalOrbitStats<Real> s;
  s.xi.reserve(n + 1);
  s.xi_prime.reserve(n + 1);
  s.lambda.reserve(n + 1);
  s.q.reserve(n + 1);

  Real x = f.value();
  Real dx = 1;
  Real log_deriv = 0;  // log|(f^j)'(a)| = sum_{i<j} log|2 xi_i|
  Real inv_deriv = 1;  // 1/(f^j)'(a)
  Real q = 1;
  bool alive = true;
  for (std::size_t j = 0; j <= n; ++j) {
    s.xi.push_back(x);
    s.xi_prime.push_back(dx);
    if (j == 0) {
      s.lambda.emplace_back();
    } else if (alive) {
      s.lambda.emplace_back(log_deriv / Real(static_cast<double>(j)));
    } else {
      s.lambda.emplace_back();
    }
    s.q.push_back(alive ? std::optional<Real>(q) : std::nullopt);

    if (alive && abs(x) <= ctx.guard) {
      s.critical_hit = j;
      alive = false;
    }
    if (j == n) break;
    if (alive) {
      log_deriv += log(abs(2 * x));
      inv_deriv /= 2 * x;
      q += inv_deriv;
    }
    dx = 1 + 2 * x * dx;
    x = x * x + f.value();
  }
  return s;
}

/// Lower/upper proxies of the Lyapunov exponent of the critical value: min
/// and max of lambda_j over j in [n/2, n].
template <class Real>
struct LyapunovEstimate {
  std::optional<Real> value;  // lambda_n
  std::optional<Real> lower;
  std::optional<Real> upper;
  std::optional<Real> gap;
  bool converged = false;
};

inline constexpr double kLyapunovGapTolerance = 0.01;

template <class Real>
LyapunovEstimate<Real> lyapunov_estimate(const CriticalOrbitStats<Real>& s) {
  LyapunovEstimate<Real> e;
  const std::size_t n = s.lambda.size() - 1;
  for (std::size_t j = std::max<std::size_t>(1, n / 2); j <= n; ++j) {
    if (!s.lambda[j]) return e;
  }
  Real lo = *s.lambda[std::max<std::size_t>(1, n / 2)];
  Real hi = lo;
  for (std::size_t j = std::max<std::size_t>(1, n / 2); j <= n; ++j) {
    lo = std::min(lo, *s.lambda[j]);
    hi = std::max(hi, *s.lambda[j]);
  }
  e.value = *s.lambda[n];
  e.lower = lo;
  e.upper = hi;
  e.gap = hi - lo;
  e.converged = *e.gap < Real(kLyapunovGapTolerance);
  return e;
}

template <class Real>
LyapunovEstimate<Real> lyapunov_estimate(const Real& a, std::size_t n, const PrecisionContext<Real>& ctx) {
  return lyapunov_estimate(critical_stats(a, n, ctx));
}

/// Q_n(a) = xi_n'(a) / (f^n)'(a). Evaluated as the running sum and checked
/// against the ratio whenever both are finite.
template <class Real>
Real transversality_Q(const Real& a, std::size_t n, const PrecisionContext<Real>& ctx) {
  using std::abs;
  using std::isfinite;
  const auto f = FamilyParam<Real>::quadratic(a);
  if (n == 0) return 1;

  Real x = f.value();
  Real dx = 1;
  Real deriv = 1;
  Real inv = 1;
  Real q = 1;
  Real q_abs = 1;
  for (std::size_t j = 0; j < n; ++j) {
    if (abs(x) <= ctx.guard) throw CriticalHit("derivative along orbit vanishes at j=" + std::to_string(j));
    deriv *= 2 * x;
    inv /= 2 * x;
    q += inv;
    q_abs += abs(inv);
    dx = 1 + 2 * x * dx;
    x = x * x + f.value();
  }
  if (abs(x) <= ctx.guard) throw CriticalHit("derivative along orbit vanishes at j=" + std::to_string(n));

  const Real ratio = dx / deriv;
  if (isfinite(to_double(ratio)) && isfinite(to_double(q)) && to_double(deriv) != 0 &&
      abs(to_double(deriv)) < std::numeric_limits<double>::max()) {
    // Measured against the sum of |terms| so that a near-cancelling Q is not
    // held to a relative standard it cannot meet.
    if (abs(ratio - q) > Real(1e-8) * q_abs) {
      throw NumericalError("Q ratio/sum mismatch at a=" + to_string(a));
    }
  }
  return q;
}

template <class Real>
struct WeakRegularity {
  std::optional<Real> value;
  bool superattracting = false;  // exact return to the turning point: -inf
  std::size_t returns = 0;       // number of j with |f^j(0)| <= delta
};

/// (1/n) * sum over 1 <= j <= n with |f^j(0)| <= delta of log|f'(f^j(0))|.
template <class Real>
WeakRegularity<Real> wr_statistic(const Real& a, const Real& delta, std::size_t n, const PrecisionContext<Real>& ctx) {
  using std::abs;
  using std::log;
  const auto f = FamilyParam<Real>::quadratic(a);
  if (!(delta > ctx.guard)) throw InvalidArgument("delta must exceed the guard");
  if (n < 1) throw InvalidArgument("n must be at least 1");

  WeakRegularity<Real> w;
  Real x = 0;
  Real sum = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    x = x * x + f.value();
    const Real ax = abs(x);
    if (ax <= ctx.guard) {
      w.superattracting = true;
      ++w.returns;
      return w;
    }
    if (ax <= delta) {
      sum += log(2 * ax);
      ++w.returns;
    }
  }
  w.value = sum / Real(static_cast<double>(n));
  return w;
}

}  // namespace entroscope
