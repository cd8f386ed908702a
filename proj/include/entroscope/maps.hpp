#pragma once

// The two one-parameter families: the quadratic family x -> x^2 + a on
// [-2, 1/4] and the symmetric tent family x -> 1 - b|x| on (1, 2].

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "entroscope/errors.hpp"
#include "entroscope/precision.hpp"

namespace entroscope {

enum class Family { Quadratic, Tent };

inline const char* family_name(Family f) { return f == Family::Quadratic ? "quadratic" : "tent"; }

template <class Real>
class FamilyParam {
 public:
  static FamilyParam quadratic(Real a) {
    if (!(a >= Real(-2) && a <= Real(0.25))) {
      throw InvalidArgument("quadratic parameter outside [-2, 0.25]: " + to_string(a));
    }
    return FamilyParam(Family::Quadratic, std::move(a));
  }

  static FamilyParam tent(Real b) {
    if (!(b > Real(1) && b <= Real(2))) {
      throw InvalidArgument("tent slope outside (1, 2]: " + to_string(b));
    }
    return FamilyParam(Family::Tent, std::move(b));
  }

  Family family() const { return family_; }
  const Real& value() const { return value_; }
  bool is_quadratic() const { return family_ == Family::Quadratic; }

 private:
  FamilyParam(Family f, Real v) : family_(f), value_(std::move(v)) {}

  Family family_;
  Real value_;
};

template <class Real>
struct DynInterval {
  Real lo;
  Real hi;

  bool contains(const Real& x) const { return x >= lo && x <= hi; }
  bool interior(const Real& x) const { return x > lo && x < hi; }
};

template <class Real>
Real eval(const FamilyParam<Real>& p, const Real& x) {
  using std::abs;
  if (p.is_quadratic()) return x * x + p.value();
  return Real(1) - p.value() * abs(x);
}

template <class Real>
Real deriv(const FamilyParam<Real>& p, const Real& x) {
  if (p.is_quadratic()) return 2 * x;
  if (x == 0) throw DerivativeUndefined("derivative undefined at turning point");
  return x > 0 ? Real(-p.value()) : p.value();
}

/// Sign of the derivative at x: -1, 0 (turning point) or +1.
template <class Real>
int deriv_sign(const FamilyParam<Real>& p, const Real& x) {
  const int s = x > 0 ? 1 : (x < 0 ? -1 : 0);
  return p.is_quadratic() ? s : -s;
}

/// I_a = [-beta, beta] with beta = (1 + sqrt(1 - 4a)) / 2 the right fixed point
/// of the quadratic map; for tents the interval bounded by the fixed point
/// -1/(b-1) and its mirror.
template <class Real>
DynInterval<Real> invariant_interval(const FamilyParam<Real>& p) {
  using std::sqrt;
  if (p.is_quadratic()) {
    const Real beta = (1 + sqrt(1 - 4 * p.value())) / 2;
    return {-beta, beta};
  }
  const Real r = 1 / (p.value() - 1);
  return {-r, r};
}

template <class Real>
struct OrbitTrace {
  static constexpr std::size_t kMaxStoredPoints = 100000;

  // x_0 .. x_n, capped at kMaxStoredPoints + 1 entries.
  std::vector<Real> points;
  // Running sums of log|f'(x_j)|, one entry per accumulated term, capped like
  // `points`. When the orbit starts at the turning point the sum starts at x_1.
  std::vector<Real> log_abs_deriv;
  std::optional<std::size_t> critical_hit_index;

  std::size_t steps = 0;
  Real last_point{};
  Real log_abs_deriv_total{};
  std::size_t terms = 0;
};

template <class Real>
OrbitTrace<Real> orbit_with_derivative(const FamilyParam<Real>& p, const Real& x0, std::size_t n,
                                       const Real& guard) {
  using std::abs;
  using std::log;
  if (guard < 0) throw InvalidArgument("guard must be non-negative");
  if (!invariant_interval(p).contains(x0)) {
    throw EscapingPoint("escaping initial point " + to_string(x0));
  }

  OrbitTrace<Real> tr;
  const auto cap = OrbitTrace<Real>::kMaxStoredPoints;
  tr.points.reserve(std::min(n, cap) + 1);
  tr.points.push_back(x0);

  const bool starts_at_turning = abs(x0) <= guard;
  Real x = x0;
  Real sum = 0;
  bool accumulating = true;
  for (std::size_t j = 0; j <= n; ++j) {
    if (j > 0 && accumulating && abs(x) <= guard) {
      tr.critical_hit_index = j;
      accumulating = false;
    }
    if (accumulating && !(j == 0 && starts_at_turning)) {
      sum += log(abs(deriv(p, x)));
      ++tr.terms;
      if (tr.log_abs_deriv.size() <= cap) tr.log_abs_deriv.push_back(sum);
    }
    if (j == n) break;
    x = eval(p, x);
    ++tr.steps;
    if (tr.points.size() <= cap) tr.points.push_back(x);
  }
  tr.last_point = x;
  tr.log_abs_deriv_total = sum;
  return tr;
}

}  // namespace entroscope
