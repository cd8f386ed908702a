// entroscope: command-line front end.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "entroscope/critical_orbit.hpp"
#include "entroscope/entropy.hpp"
#include "entroscope/holder.hpp"
#include "entroscope/precision.hpp"
#include "entroscope/records_json.hpp"
#include "entroscope/renorm.hpp"
#include "entroscope/sweep.hpp"
#include "entroscope/tent_dynamics.hpp"

namespace es = entroscope;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitPartial = 3;
constexpr int kExitIo = 4;

struct Globals {
  unsigned prec = 53;
  std::size_t depth = 0;
  unsigned threads = 1;
  std::string cache;
  bool json = false;
  bool csv = false;
  std::uint64_t seed = 1;
};

template <class Ctx>
Ctx configure(Ctx ctx, const Globals& g) {
  if (g.depth != 0) {
    if (g.depth < 16) throw es::InvalidArgument("depth must be at least 16");
    ctx.depth = g.depth;
  }
  return ctx;
}

// Doubles for plotting, plus full digits when the backend carries more.
template <class Real>
void put(Json& j, const std::string& key, const Real& x) {
  j[key] = es::to_double(x);
  if constexpr (!es::is_native<Real>) {
    j[key + "_digits"] = es::to_string(x, static_cast<int>(es::mantissa_bits<Real> * 0.30103));
  }
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

template <class Real>
Json entropy_json(const es::EntropyResult<Real>& r) {
  Json j;
  put(j, "h", r.value);
  j["err"] = es::to_double(r.error_radius);
  j["method"] = es::method_name(r.method);
  j["m"] = r.renorm_depth;
  j["zero"] = r.zero;
  j["window_tie"] = r.window_tie;
  if (r.window_tie) j["tie_period"] = r.tie_period;
  j["depth_used"] = r.depth_used;
  return j;
}

Json estimate_json(const es::HolderEstimate& e) {
  Json j;
  j["a"] = e.a;
  j["side"] = es::side_name(e.side);
  j["flat"] = e.flat;
  if (e.slope) {
    j["slope"] = *e.slope;
    j["stderr"] = e.stderr_;
  } else {
    j["slope"] = nullptr;
  }
  j["t_range"] = {e.t_min, e.t_max};
  j["points_used"] = e.points_used;
  j["reliable"] = e.reliable;
  j["monotone_ok"] = e.monotone_ok;
  if (e.theoretical) j["theoretical"] = *e.theoretical;
  if (!e.warnings.empty()) j["warnings"] = e.warnings;
  return j;
}

std::string samples_csv(const std::vector<es::HolderSample>& samples) {
  std::string out = "t,dh,err,used\n";
  for (const auto& s : samples) {
    out += es::format_double(s.t) + "," + es::format_double(s.dh) + "," + es::format_double(s.err) + "," +
           (s.used ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entroscope: topological entropy of the quadratic family and its regularity"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--prec", g.prec, "working precision in bits (53 = double; up to 1024)")->capture_default_str();
  app.add_option("--depth", g.depth, "symbolic depth N (default depends on precision)");
  app.add_option("--threads", g.threads, "worker threads for sweeps")->capture_default_str();
  app.add_option("--cache", g.cache, "sweep cache file")->envname("ENTROSCOPE_CACHE");
  auto* json_flag = app.add_flag("--json", g.json, "JSON output");
  auto* csv_flag = app.add_flag("--csv", g.csv, "CSV output");
  json_flag->excludes(csv_flag);
  app.add_option("--seed", g.seed, "seed for randomised subcommands")->capture_default_str();
  app.fallthrough();

  // entropy
  auto* c_entropy = app.add_subcommand("entropy", "entropy h(a) of x -> x^2 + a");
  std::string e_a;
  std::size_t e_iters = 0;
  std::string e_method = "bisect";
  int e_lap = 18;
  c_entropy->add_option("--a", e_a, "parameter in [-2, 0.25]")->required();
  c_entropy->add_option("--iters", e_iters, "bisection iterations (default depends on precision)");
  c_entropy->add_option("--method", e_method, "bisect | root | lap | all")->capture_default_str();
  c_entropy->add_option("--lap-n", e_lap, "iterate for the lap-count estimate")->capture_default_str();

  // tent
  auto* c_tent = app.add_subcommand("tent", "tent-family parameter dynamics");
  int t_periodic = 0;
  std::vector<std::string> t_range{"1.0000001", "2"};
  int t_safe = 0;
  std::string t_b;
  int t_growth = 0;
  int t_phi = -1;
  std::vector<std::string> t_gap;
  int t_max_period = 10;
  c_tent->add_option("--periodic", t_periodic, "list slopes with a periodic turning point of this period");
  c_tent->add_option("--range", t_range, "slope window lo hi")->expected(2);
  c_tent->add_option("--safe", t_safe, "safe preimages of 0 up to this depth (needs --b)");
  c_tent->add_option("--b", t_b, "slope in (1, 2]");
  c_tent->add_option("--growth", t_growth, "derivative growth constant C(b, n) (needs --b)");
  c_tent->add_option("--phi", t_phi, "phi_j(b) and derivatives for j <= n (needs --b)");
  c_tent->add_option("--gap", t_gap, "smallest-period periodic slope in (b1, b2)")->expected(2);
  c_tent->add_option("--max-period", t_max_period, "period cap for --gap")->capture_default_str();

  // lyapunov
  auto* c_lyap = app.add_subcommand("lyapunov", "critical-orbit statistics");
  std::string l_a;
  std::size_t l_n = 1000;
  double l_delta = 0.05;
  c_lyap->add_option("--a", l_a, "parameter")->required();
  c_lyap->add_option("--n", l_n, "orbit length")->capture_default_str();
  c_lyap->add_option("--delta", l_delta, "return window for the weak-regularity statistic")->capture_default_str();

  // holder
  auto* c_holder = app.add_subcommand("holder", "local Hölder exponent of h at a");
  std::string h_a;
  std::string h_side = "R";
  double h_t0 = 1e-3, h_ratio = 0.5;
  int h_count = 20;
  std::size_t h_theory_n = 1000;
  c_holder->add_option("--a", h_a, "parameter")->required();
  c_holder->add_option("--side", h_side, "L | R | both")->capture_default_str();
  c_holder->add_option("--t0", h_t0, "largest offset")->capture_default_str();
  c_holder->add_option("--ratio", h_ratio, "geometric ratio of offsets")->capture_default_str();
  c_holder->add_option("--count", h_count, "number of offsets")->capture_default_str();
  c_holder->add_option("--theory-n", h_theory_n, "orbit length for h/lambda")->capture_default_str();

  // parabolic
  auto* c_para = app.add_subcommand("parabolic", "entropy flatness next to a parabolic parameter");
  std::string p_a;
  std::string p_side = "R";
  bool p_logcorr = false;
  c_para->add_option("--a", p_a, "parabolic parameter")->required();
  c_para->add_option("--side", p_side, "L | R")->capture_default_str();
  c_para->add_flag("--log-correction", p_logcorr, "also fit with a log(1/t) factor divided out");

  // cascade
  auto* c_cascade = app.add_subcommand("cascade", "band-merging cascade and Feigenbaum extrapolation");
  int k_depth = 8;
  bool k_superstable = false;
  c_cascade->add_option("--depth", k_depth, "number of cascade levels M (2..10)")->capture_default_str();
  c_cascade->add_flag("--superstable", k_superstable, "also report the superstable cascade as a cross-check");

  // windows
  auto* c_windows = app.add_subcommand("windows", "renormalisation window containing a");
  std::string w_a;
  int w_max = 12;
  c_windows->add_option("--a", w_a, "parameter")->required();
  c_windows->add_option("--max-period", w_max, "largest period searched (<= 24)")->capture_default_str();

  // uniform
  auto* c_uniform = app.add_subcommand("uniform", "uniform Hölder envelope on a parameter range");
  std::vector<double> u_range{-1.9, -1.5};
  std::size_t u_grid = 1000;
  std::size_t u_pairs = 20000;
  c_uniform->add_option("--range", u_range, "lo hi")->expected(2)->capture_default_str();
  c_uniform->add_option("--grid", u_grid, "grid points (>= 100)")->capture_default_str();
  c_uniform->add_option("--pairs", u_pairs, "pair budget")->capture_default_str();

  // sweep
  auto* c_sweep = app.add_subcommand("sweep", "parameter sweep");
  es::SweepConfig sc;
  std::vector<double> s_range{-2.0, 0.25};
  std::string s_tasks = "entropy";
  std::string s_out;
  c_sweep->add_option("--range", s_range, "lo hi")->expected(2)->capture_default_str();
  c_sweep->add_option("--grid", sc.grid, "grid points")->capture_default_str();
  c_sweep->add_option("--tasks", s_tasks, "comma list of entropy,lyapunov,wr,windows,holder")->capture_default_str();
  c_sweep->add_option("--out", s_out, "output file (default stdout)");

  // export
  auto* c_export = app.add_subcommand("export", "convert sweep records between CSV and JSON");
  std::string x_in, x_out;
  c_export->add_option("--in", x_in, "records file (CSV or JSON)")->required();
  c_export->add_option("--out", x_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (g.prec < 2) throw es::InvalidArgument("precision must be at least 2 bits");

    if (*c_entropy) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        const Real a = es::real_from_string<Real>(e_a);
        Json j;
        j["a"] = e_a;
        j["precision_bits"] = ctx.bits;
        const std::size_t iters = e_iters ? e_iters : ctx.bisect_iters;
        if (e_method == "bisect" || e_method == "all") {
          Json r = entropy_json(es::quad_entropy(a, ctx.depth, iters, ctx));
          if (e_method == "bisect") {
            r["a"] = e_a;
            r["precision_bits"] = ctx.bits;
            emit(r);
            return kExitOk;
          }
          j["bisect"] = r;
        }
        if (e_method == "root" || e_method == "all") {
          const auto r = es::quad_entropy_root(a, ctx);
          Json k = entropy_json(r);
          if (e_method == "root") {
            k["a"] = e_a;
            emit(k);
            return kExitOk;
          }
          j["root"] = k;
        }
        if (e_method == "lap" || e_method == "all") {
          const auto f = es::FamilyParam<Real>::quadratic(a);
          Json k;
          k["n"] = e_lap;
          k["laps"] = es::lap_count(f, e_lap);
          k["h"] = es::lap_entropy_estimate(f, e_lap);
          k["method"] = "LapCount";
          if (e_method == "lap") {
            k["a"] = e_a;
            emit(k);
            return kExitOk;
          }
          j["lap"] = k;
        }
        if (e_method != "all") throw es::InvalidArgument("method must be bisect, root, lap or all");
        emit(j);
        return kExitOk;
      });
    }

    if (*c_tent) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        Json out = Json::array();
        if (t_periodic) {
          const auto r = es::periodic_tent_slopes(t_periodic, es::real_from_string<Real>(t_range[0]),
                                                  es::real_from_string<Real>(t_range[1]), ctx);
          for (const auto& b : r.slopes) {
            Json j;
            put(j, "b", b);
            j["period"] = t_periodic;
            out.push_back(j);
          }
          if (r.resolution_warning) std::cerr << "warning: roots closer than the scan resolution may be merged\n";
        } else if (!t_gap.empty()) {
          const auto r = es::periodic_slope_in_gap(es::real_from_string<Real>(t_gap[0]),
                                                   es::real_from_string<Real>(t_gap[1]), t_max_period, ctx);
          if (r) {
            Json j;
            put(j, "b", r->first);
            j["period"] = r->second;
            out.push_back(j);
          }
        } else {
          if (t_b.empty()) throw es::InvalidArgument("this tent query needs --b");
          const Real b = es::real_from_string<Real>(t_b);
          if (t_safe) {
            for (const auto& x : es::safe_elements(b, t_safe, ctx).elements) out.push_back(es::to_double(x));
          } else if (t_growth) {
            Json j;
            j["b"] = t_b;
            j["n"] = t_growth;
            j["C"] = es::to_double(es::growth_check(b, static_cast<std::size_t>(t_growth), ctx));
            out.push_back(j);
          } else if (t_phi >= 0) {
            const auto tr = es::phi_with_derivative(b, static_cast<std::size_t>(t_phi), ctx);
            for (std::size_t k = 0; k < tr.phi.size(); ++k) {
              Json j;
              j["j"] = k;
              j["phi"] = es::to_double(tr.phi[k]);
              if (k < tr.phi_prime.size()) j["phi_prime"] = es::to_double(tr.phi_prime[k]);
              out.push_back(j);
            }
          } else {
            throw es::InvalidArgument("tent needs one of --periodic, --safe, --growth, --phi, --gap");
          }
        }
        emit(out);
        return kExitOk;
      });
    }

    if (*c_lyap) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        const Real a = es::real_from_string<Real>(l_a);
        const auto stats = es::critical_stats(a, l_n, ctx);
        const auto lyap = es::lyapunov_estimate(stats);
        Json j;
        j["a"] = l_a;
        j["n"] = l_n;
        Json tail = Json::array();
        for (std::size_t k = stats.lambda.size() > 10 ? stats.lambda.size() - 10 : 1; k < stats.lambda.size(); ++k) {
          tail.push_back(stats.lambda[k] ? Json(es::to_double(*stats.lambda[k])) : Json(nullptr));
        }
        j["lambda_tail"] = tail;
        j["lambda_n"] = lyap.value ? Json(es::to_double(*lyap.value)) : Json(nullptr);
        j["lambda_lower"] = lyap.lower ? Json(es::to_double(*lyap.lower)) : Json(nullptr);
        j["lambda_upper"] = lyap.upper ? Json(es::to_double(*lyap.upper)) : Json(nullptr);
        j["lambda_gap"] = lyap.gap ? Json(es::to_double(*lyap.gap)) : Json(nullptr);
        j["converged"] = lyap.converged;
        j["critical_hit"] = stats.critical_hit ? Json(*stats.critical_hit) : Json(nullptr);
        try {
          j["Q_n"] = es::to_double(es::transversality_Q(a, l_n, ctx));
        } catch (const es::CriticalHit& e) {
          j["Q_n"] = nullptr;
          j["Q_error"] = e.what();
        }
        const auto w = es::wr_statistic(a, Real(l_delta), l_n, ctx);
        j["wr_delta"] = l_delta;
        if (w.superattracting) {
          j["wr"] = "-inf";
          j["superattracting"] = true;
        } else {
          j["wr"] = es::to_double(*w.value);
        }
        j["wr_returns"] = w.returns;
        emit(j);
        return lyap.converged ? kExitOk : kExitPartial;
      });
    }

    if (*c_holder) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        const Real a = es::real_from_string<Real>(h_a);
        const es::Side side = es::parse_side(h_side);
        std::optional<double> theory;
        std::string theory_note;
        try {
          theory = es::theoretical_exponent(a, h_theory_n, ctx);
        } catch (const es::NotResolved& e) {
          theory_note = e.what();
        }
        auto finish = [&](es::HolderEstimate e) {
          e.theoretical = theory;
          return e;
        };
        if (side == es::Side::Both) {
          auto two = es::estimate_two_sided(a, h_t0, h_ratio, h_count, ctx);
          two.left = finish(two.left);
          two.right = finish(two.right);
          if (g.csv) {
            std::cout << samples_csv(two.left.samples) << samples_csv(two.right.samples).substr(14);
            return kExitOk;
          }
          Json j;
          j["left"] = estimate_json(two.left);
          j["right"] = estimate_json(two.right);
          // Heuristic label only; no finite computation decides set membership.
          j["in_V"] = two.in_V;
          if (!theory_note.empty()) j["theoretical_note"] = theory_note;
          emit(j);
          return kExitOk;
        }
        const auto e = finish(es::estimate_local_exponent(a, side, h_t0, h_ratio, h_count, ctx));
        if (g.csv) {
          std::cout << samples_csv(e.samples);
          return kExitOk;
        }
        Json j = estimate_json(e);
        if (!theory_note.empty()) j["theoretical_note"] = theory_note;
        emit(j);
        return e.flat || e.reliable ? kExitOk : kExitPartial;
      });
    }

    if (*c_para) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        const Real a = es::real_from_string<Real>(p_a);
        const auto f =
            es::parabolic_flatness_fit(a, es::parse_side(p_side), es::default_flatness_grid(), ctx, p_logcorr);
        if (g.csv) {
          std::cout << samples_csv(f.samples);
          return kExitOk;
        }
        Json j;
        j["a"] = p_a;
        j["side"] = es::side_name(f.side);
        j["kappa"] = f.kappa;
        j["c"] = f.c;
        j["residual"] = f.residual;
        j["points_used"] = f.points_used;
        j["decades"] = f.decades;
        if (f.kappa_log_corrected) j["kappa_log_corrected"] = *f.kappa_log_corrected;
        emit(j);
        return kExitOk;
      });
    }

    if (*c_cascade) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        const auto t = es::band_merging_cascade(k_depth, ctx);
        Json j;
        Json rows = Json::array();
        for (std::size_t m = 0; m < t.a.size(); ++m) {
          Json r;
          r["m"] = m;
          put(r, "a", t.a[m]);
          r["h_err"] = es::to_double(t.h_err[m]);
          rows.push_back(r);
        }
        j["a_m"] = rows;
        Json ratios = Json::array();
        for (const auto& r : t.ratios) ratios.push_back(es::to_double(r));
        j["ratios"] = ratios;
        if (t.delta_star) j["delta_star"] = es::to_double(*t.delta_star);
        if (t.a_F) {
          put(j, "a_F", *t.a_F);
          j["a_F_uncertainty"] = es::to_double(*t.a_F_uncertainty);
        }
        if (t.a.size() >= 3) {
          const auto ha = es::holder_at_aF(t);
          j["holder_at_aF"] = {{"slope", ha.slope},
                               {"reference", ha.reference},
                               {"stderr", ha.stderr_},
                               {"rows_used", ha.rows_used},
                               {"reliable", ha.reliable}};
        }
        if (k_superstable) {
          const auto s = es::superstable_cascade<Real>(std::max(k_depth, 2) + 4);
          Json ss = Json::array();
          for (const auto& x : s) ss.push_back(es::to_double(x));
          j["superstable"] = ss;
          std::vector<Real> sr;
          for (std::size_t m = 1; m + 1 < s.size(); ++m) sr.push_back((s[m] - s[m - 1]) / (s[m + 1] - s[m]));
          j["superstable_delta"] = es::to_double(es::extrapolate_delta(sr));
        }
        j["partial"] = t.partial;
        if (t.partial) j["warning"] = t.warning;
        emit(j);
        return t.partial ? kExitPartial : kExitOk;
      });
    }

    if (*c_windows) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        const Real a = es::real_from_string<Real>(w_a);
        const auto w = es::detect_window(a, w_max, ctx);
        Json j;
        j["a"] = w_a;
        if (!w) {
          j["window"] = nullptr;
          j["label"] = "apparently-non-flat";
        } else {
          Json wj;
          wj["period"] = w->period;
          put(wj, "center", w->center);
          wj["interval"] = {es::to_double(w->left), es::to_double(w->right)};
          wj["feig_depth"] = w->feig_depth;
          put(wj, "entropy", w->entropy);
          j["window"] = wj;
          using std::abs;
          j["label"] = abs(a - w->center) <= Real(1e-12) ? "window-center" : "window-interior";
        }
        emit(j);
        return kExitOk;
      });
    }

    if (*c_uniform) {
      return es::with_precision(g.prec, [&](auto base) -> int {
        using Real = typename decltype(base)::real_type;
        auto ctx = configure(base, g);
        const auto u = es::uniform_holder_fit(Real(u_range[0]), Real(u_range[1]), u_grid, u_pairs, g.seed, ctx);
        Json j;
        j["range"] = u_range;
        j["grid"] = u_grid;
        j["C"] = u.C;
        j["beta"] = u.beta;
        j["pairs"] = u.pairs;
        j["pairs_used"] = u.pairs_used;
        emit(j);
        return kExitOk;
      });
    }

    if (*c_sweep) {
      sc.lo = s_range[0];
      sc.hi = s_range[1];
      sc.depth = g.depth;
      sc.prec_bits = g.prec;
      sc.threads = g.threads;
      sc.tasks = es::parse_tasks(s_tasks);
      sc.cache = g.cache;
      sc.output = s_out;
      sc.format = g.json ? es::Format::Json : es::Format::Csv;
      const auto res = es::run_sweep(sc);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      const std::string text = es::export_records(res.records, sc.format);
      if (s_out.empty()) {
        std::cout << text;
      } else {
        es::write_file(s_out, text);
      }
      if (res.flagged) std::cerr << "warning: " << res.flagged << " grid point(s) flagged\n";
      return res.flagged ? kExitPartial : kExitOk;
    }

    if (*c_export) {
      const auto records = es::parse_records(es::read_file(x_in));
      const std::string text = es::export_records(records, g.json ? es::Format::Json : es::Format::Csv);
      if (x_out.empty()) {
        std::cout << text;
      } else {
        es::write_file(x_out, text);
      }
      return kExitOk;
    }
  } catch (const es::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const es::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const es::NotApplicable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const es::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}
