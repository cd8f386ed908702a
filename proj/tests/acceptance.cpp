// Acceptance checks. Each criterion prints one PASS/FAIL line; run one with
// --criterion N or all of them without arguments.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "entroscope/critical_orbit.hpp"
#include "entroscope/entropy.hpp"
#include "entroscope/holder.hpp"
#include "entroscope/kneading.hpp"
#include "entroscope/renorm.hpp"
#include "entroscope/sweep.hpp"
#include "entroscope/tent_dynamics.hpp"

using namespace entroscope;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

const double kLog2 = std::log(2.0);
const double kGolden = (1 + std::sqrt(5.0)) / 2;
const double kFeigenbaumDelta = 4.669201609;

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// Shared by criteria 5 and 6.
const CascadeTable<Real128>& cascade_table() {
  static const CascadeTable<Real128> table = band_merging_cascade(8, PrecisionContext<Real128>{});
  return table;
}

Outcome chebyshev_anchor() {
  const auto h = quad_entropy(-2.0, PrecisionContext<double>{});
  const double diff = std::abs(h.value - kLog2);
  return {diff <= 1e-9, "|h(-2) - log 2| = " + fmt("%.3g", diff)};
}

Outcome period_three_plateau() {
  const PrecisionContext<double> ctx;
  const auto centers = superattracting_parameters(3, -2.0, -1.7, ctx);
  if (centers.size() != 1) return {false, "expected one period-3 centre, found " + std::to_string(centers.size())};
  const double c = centers[0];
  const auto hc = quad_entropy(c, ctx);
  const double center_diff = std::abs(hc.value - std::log(kGolden));
  const auto w = detect_window(c, 10, ctx);
  if (!w || w->period != 3) return {false, "period-3 window not detected at the centre"};
  double lo = 1e9, hi = -1e9, max_err = 0;
  for (int k = 1; k <= 5; ++k) {
    const auto h = quad_entropy(w->left + (w->right - w->left) * k / 6, ctx);
    lo = std::min(lo, h.value);
    hi = std::max(hi, h.value);
    max_err = std::max(max_err, h.error_radius);
  }
  const bool ok = center_diff <= 1e-8 && hi - lo <= 2 * max_err;
  return {ok, "|h(c) - log phi| = " + fmt("%.3g", center_diff) + ", interior spread " + fmt("%.3g", hi - lo) +
                  " vs 2*err " + fmt("%.3g", 2 * max_err)};
}

Outcome method_cross_validation() {
  const PrecisionContext<double> ctx;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> pick(-1.9, -1.6);
  double worst_root = 0, worst_lap = 0;
  for (int i = 0; i < 20; ++i) {
    const double a = pick(rng);
    const double hb = quad_entropy(a, ctx).value;
    worst_root = std::max(worst_root, std::abs(hb - quad_entropy_root(a, ctx).value));
    worst_lap = std::max(worst_lap, std::abs(hb - lap_entropy_estimate(FamilyParam<double>::quadratic(a), 18)));
  }
  return {worst_root <= 1e-5 && worst_lap <= 0.05,
          "max |bisect - root| = " + fmt("%.3g", worst_root) + " (<= 1e-5), max |bisect - lap(18)| = " +
              fmt("%.4f", worst_lap) + " (<= 0.05)"};
}

Outcome monotone_staircase() {
  SweepConfig cfg;
  cfg.grid = 4097;
  cfg.threads = 8;
  const auto res = run_sweep(cfg);
  std::size_t bad = 0, missing = 0;
  for (std::size_t i = 0; i + 1 < res.records.size(); ++i) {
    const auto& p = res.records[i];
    const auto& q = res.records[i + 1];
    if (!p.h || !q.h) {
      ++missing;
      continue;
    }
    if (*q.h > *p.h + 2 * std::max(*p.h_err, *q.h_err)) ++bad;
  }
  return {bad == 0 && missing == 0,
          std::to_string(bad) + " increasing pairs, " + std::to_string(missing) + " unresolved points of 4097"};
}

Outcome cascade_constants() {
  const auto& t = cascade_table();
  if (!t.delta_star || !t.a_F) return {false, "no extrapolation"};
  const double d = to_double(*t.delta_star);
  const double aF = to_double(*t.a_F);
  const double rel = std::abs(d - kFeigenbaumDelta) / kFeigenbaumDelta;
  const double da = std::abs(aF + 1.4011552);
  return {rel <= 0.05 && da <= 5e-4,
          "delta* = " + fmt("%.7f", d) + " (rel " + fmt("%.2g", rel) + "), a_F = " + fmt("%.10f", aF) + " (|diff| " +
              fmt("%.2g", da) + ")"};
}

Outcome exponent_at_aF() {
  const auto r = holder_at_aF(cascade_table());
  const double target = kLog2 / std::log(kFeigenbaumDelta);
  const double diff = std::abs(r.slope - target);
  return {diff <= 0.02 && r.reliable,
          "slope " + fmt("%.5f", r.slope) + " vs log2/log delta = " + fmt("%.5f", target) + " (|diff| " +
              fmt("%.3g", diff) + ")"};
}

Outcome holder_at_chebyshev() {
  const PrecisionContext<double> ctx;
  const auto e = estimate_local_exponent(-2.0, Side::Right, 1e-3, 0.5, 20, ctx);
  const double theory = theoretical_exponent(-2.0, 1000, ctx);
  const bool ok = e.slope && *e.slope >= 0.45 && *e.slope <= 0.55 && std::abs(theory - 0.5) <= 1e-9;
  return {ok, "slope " + (e.slope ? fmt("%.4f", *e.slope) : std::string("none")) + ", h/lambda = " +
                  fmt("%.12f", theory)};
}

Outcome formula_at_band_merging() {
  const PrecisionContext<Real256> ctx;
  const auto t = band_merging_cascade(2, ctx);
  const Real256 a1 = t.a[1];
  const double a = to_double(a1);
  const double xm = (1 - std::sqrt(1 - 4 * a)) / 2;
  const double theory = (kLog2 / 2) / std::log(std::abs(2 * xm));
  const auto e = estimate_local_exponent(a1, Side::Left, 1e-3, 0.5, 20, ctx);
  if (!e.slope) return {false, "no slope on the left of a_1"};
  const double rel = std::abs(*e.slope - theory) / theory;
  return {rel <= 0.10, "a_1 = " + fmt("%.12f", a) + ", left slope " + fmt("%.4f", *e.slope) + " vs " +
                           fmt("%.4f", theory) + " (rel " + fmt("%.3g", rel) + ")"};
}

Outcome parabolic_flatness() {
  const PrecisionContext<Real512> ctx;
  const auto f = parabolic_flatness_fit(Real512(-1.75), Side::Right, default_flatness_grid(), ctx, false);
  std::vector<double> t, dh;
  for (int k = 0; k < 12; ++k) {
    t.push_back(0.03 * std::ldexp(1.0, -k));
    dh.push_back(std::exp(-1 / std::sqrt(t.back())));
  }
  const double synthetic = fit_flatness(t, dh).kappa;
  return {f.kappa >= 0.3 && f.kappa <= 0.7 && std::abs(synthetic - 0.5) <= 0.02,
          "kappa(-1.75) = " + fmt("%.4f", f.kappa) + " over " + fmt("%.2f", f.decades) + " decades, synthetic " +
              fmt("%.5f", synthetic)};
}

Outcome tent_machinery() {
  const PrecisionContext<double> ctx;
  const auto p3 = periodic_tent_slopes(3, 1.0 + 1e-9, 2.0, ctx).slopes;
  const bool golden = p3.size() == 1 && std::abs(p3[0] - kGolden) <= 1e-12;
  const double growth = growth_check(1.9, 30, ctx);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pick(1.01, 2.0);
  std::size_t ratio_checked = 0, ratio_bad = 0;
  for (int i = 0; i < 100; ++i) {
    const double b = pick(rng);
    const auto tr = phi_with_derivative(b, 200, ctx);
    for (std::size_t k = 1; k < tr.phi_prime.size(); ++k) {
      if (std::abs(tr.phi_prime[k - 1]) < 1e3) continue;
      const double r = std::abs(tr.phi_prime[k] / tr.phi_prime[k - 1]);
      ++ratio_checked;
      if (!(r > 1 + (b - 1) / 2 && r < 1 + 2 * (b - 1))) ++ratio_bad;
    }
  }

  std::size_t slopes = 0, below = 0;
  for (int p = 3; p <= 14; ++p) {
    for (double b : periodic_tent_slopes(p, 1.0 + 1e-9, 2.0, ctx).slopes) {
      ++slopes;
      if (std::pow(b, p) < 2 * std::sqrt(2.0)) ++below;
    }
  }
  return {golden && growth <= 50 && ratio_bad == 0 && ratio_checked > 0 && below == 0,
          std::string("golden ") + (golden ? "ok" : "missing") + ", C(1.9,30) = " + fmt("%.3f", growth) +
              ", ratio bound " + std::to_string(ratio_checked - ratio_bad) + "/" + std::to_string(ratio_checked) +
              ", b^p >= 2 sqrt 2 for " + std::to_string(slopes - below) + "/" + std::to_string(slopes) + " slopes"};
}

template <class Real>
Real xi(Real a, int n) {
  Real x = a;
  for (int k = 0; k < n; ++k) x = x * x + a;
  return x;
}

Outcome derivative_identities() {
  const PrecisionContext<double> ctx;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pick(-2.0, 0.25);
  double worst_fd = 0;
  const Real256 e("1e-30");
  for (int i = 0; i < 100; ++i) {
    const double a = pick(rng);
    const auto s = critical_stats(a, 15, ctx);
    for (int n = 1; n <= 15; ++n) {
      const Real256 A(a);
      const double fd = to_double(Real256((xi(Real256(A + e), n) - xi(Real256(A - e), n)) / (2 * e)));
      worst_fd = std::max(worst_fd, std::abs(s.xi_prime[n] - fd) / std::abs(fd));
    }
  }

  double worst_q = 0;
  std::uniform_real_distribution<double> pick_chaotic(-2.0, -1.4);
  for (int i = 0; i < 100; ++i) {
    const double a = pick_chaotic(rng);
    const auto s = critical_stats(a, 25, ctx);
    if (s.critical_hit) continue;
    double deriv = 1, sum = 0, abs_sum = 0, inv = 1;
    for (int j = 0; j <= 25; ++j) {
      sum += inv;
      abs_sum += std::abs(inv);
      if (j < 25) {
        deriv *= 2 * s.xi[j];
        inv /= 2 * s.xi[j];
      }
    }
    worst_q = std::max(worst_q, std::abs(s.xi_prime[25] / deriv - sum) / abs_sum);
  }

  const double q60 = std::abs(transversality_Q(-2.0, 60, ctx) - 2.0 / 3.0);
  return {worst_fd <= 1e-4 && worst_q <= 1e-8 && q60 <= 1e-10,
          "xi' vs finite difference rel " + fmt("%.3g", worst_fd) + ", Q ratio/sum rel " + fmt("%.3g", worst_q) +
              ", |Q_60(-2) - 2/3| = " + fmt("%.3g", q60)};
}

Outcome determinism_and_cache() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "entroscope-acceptance-cache";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SweepConfig cfg;
  cfg.grid = 1025;
  cfg.tasks = kTaskEntropy | kTaskLyapunov | kTaskWr | kTaskWindows;
  std::vector<std::string> csv, json;
  for (unsigned threads : {1u, 4u, 8u}) {
    cfg.threads = threads;
    const auto r = run_sweep(cfg);
    csv.push_back(to_csv(r.records));
    json.push_back(to_json(r.records));
  }
  const bool threads_ok = csv[0] == csv[1] && csv[0] == csv[2] && json[0] == json[1] && json[0] == json[2];

  cfg.threads = 4;
  cfg.cache = (dir / "cache.bin").string();
  const auto cold = run_sweep(cfg);
  const auto warm = run_sweep(cfg);
  const bool cache_ok = to_csv(cold.records) == to_csv(warm.records) && to_csv(cold.records) == csv[0] &&
                        to_json(warm.records) == json[0] && warm.cache_hits == cfg.grid;
  fs::remove_all(dir);
  return {threads_ok && cache_ok, std::string("threads 1/4/8 ") + (threads_ok ? "identical" : "differ") +
                                      ", warm cache " + (cache_ok ? "identical" : "differs") + " (" +
                                      std::to_string(warm.cache_hits) + " hits)"};
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

const std::vector<Criterion> kCriteria = {
    {"Chebyshev anchor", 1, chebyshev_anchor},
    {"period-3 window value", 10, period_three_plateau},
    {"method cross-validation", 120, method_cross_validation},
    {"monotone staircase", 300, monotone_staircase},
    {"cascade constants", 600, cascade_constants},
    {"exponent at a_F", 600, exponent_at_aF},
    {"Hoelder exponent at -2", 120, holder_at_chebyshev},
    {"exponent formula at a_1", 300, formula_at_band_merging},
    {"parabolic flatness", 900, parabolic_flatness},
    {"tent machinery", 30, tent_machinery},
    {"derivative identities", 30, derivative_identities},
    {"determinism and cache", 180, determinism_and_cache},
};

bool run_one(std::size_t index) {
  const auto& c = kCriteria[index];
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs <= c.budget_s;
  const bool pass = o.pass && in_time;
  std::printf("criterion %2zu %s: %s -- %s [%.2fs of %.0fs]\n", index + 1, pass ? "PASS" : "FAIL", c.name,
              o.detail.c_str(), secs, c.budget_s);
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entroscope acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-12)")->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  if (only) {
    all = run_one(static_cast<std::size_t>(only - 1));
  } else {
    for (std::size_t i = 0; i < kCriteria.size(); ++i) all = run_one(i) && all;
  }
  return all ? 0 : 1;
}
