#pragma once

// Parameter sweeps: deterministic static partition over threads, a
// fixed-width binary cache, and CSV/JSON record export.

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "entroscope/critical_orbit.hpp"
#include "entroscope/entropy.hpp"
#include "entroscope/errors.hpp"
#include "entroscope/holder.hpp"
#include "entroscope/precision.hpp"
#include "entroscope/renorm.hpp"

namespace entroscope {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum Task : unsigned {
  kTaskEntropy = 1u << 0,
  kTaskLyapunov = 1u << 1,
  kTaskWr = 1u << 2,
  kTaskWindows = 1u << 3,
  kTaskHolder = 1u << 4,
};

inline unsigned parse_tasks(const std::string& list) {
  unsigned mask = kTaskEntropy;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "entropy") {
      mask |= kTaskEntropy;
    } else if (item == "lyapunov") {
      mask |= kTaskLyapunov;
    } else if (item == "wr") {
      mask |= kTaskWr;
    } else if (item == "windows") {
      mask |= kTaskWindows;
    } else if (item == "holder") {
      mask |= kTaskHolder;
    } else {
      throw InvalidArgument("unknown sweep task '" + item + "'");
    }
  }
  return mask;
}

enum class Format { Csv, Json };

struct SweepConfig {
  double lo = -2;
  double hi = 0.25;
  std::size_t grid = 1;
  std::size_t depth = 0;  // 0: backend default
  unsigned prec_bits = 53;
  unsigned threads = 1;
  unsigned tasks = kTaskEntropy;
  std::string output;
  std::string cache;
  Format format = Format::Csv;

  // Per-task settings.
  std::size_t lyapunov_n = 1000;
  double wr_delta = 0.05;
  std::size_t wr_n = 1000;
  int window_max_period = 12;
  double holder_t0 = 1e-3;
  double holder_ratio = 0.5;
  int holder_count = 12;

  void validate() const {
    if (grid < 1) throw InvalidArgument("grid must be at least 1");
    if (!(lo < hi) && grid > 1) throw InvalidArgument("range requires lo < hi");
    if (!(lo >= -2 && hi <= 0.25)) throw InvalidArgument("range must lie in [-2, 0.25]");
    if (threads < 1) throw InvalidArgument("threads must be at least 1");
    if (depth != 0 && depth < 16) throw InvalidArgument("depth must be at least 16");
    if (prec_bits > 1024) throw InvalidArgument("precision above 1024 bits is not supported");
  }

  double grid_point(std::size_t i) const {
    if (grid == 1) return lo;
    if (i + 1 == grid) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
  }
};

struct SweepRecord {
  double a = 0;
  std::optional<double> h;
  std::optional<double> h_err;
  std::optional<double> lambda;
  std::optional<double> lambda_gap;
  std::optional<double> q;
  std::optional<double> wr;
  std::optional<int> window_period;
  std::optional<double> window_center;
  std::optional<double> holder;
  bool flagged = false;  // some requested task did not resolve; not exported

  bool operator==(const SweepRecord& o) const {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(o.a) && h == o.h && h_err == o.h_err &&
           lambda == o.lambda && lambda_gap == o.lambda_gap && q == o.q && wr == o.wr &&
           window_period == o.window_period && window_center == o.window_center && holder == o.holder;
  }
};

namespace detail {

template <class Real>
SweepRecord compute_record(double a_value, const SweepConfig& cfg, const PrecisionContext<Real>& ctx) {
  SweepRecord r;
  r.a = a_value;
  const Real a(a_value);
  try {
    const auto h = quad_entropy(a, ctx);
    r.h = to_double(h.value);
    r.h_err = to_double(h.error_radius);
  } catch (const NumericalError&) {
    r.flagged = true;
  }
  if (cfg.tasks & kTaskLyapunov) {
    const auto lyap = lyapunov_estimate(a, cfg.lyapunov_n, ctx);
    if (lyap.gap) r.lambda_gap = to_double(*lyap.gap);
    if (lyap.converged) {
      r.lambda = to_double(*lyap.value);
    } else {
      r.flagged = true;
    }
    try {
      r.q = to_double(transversality_Q(a, ctx.depth, ctx));
    } catch (const NumericalError&) {
      r.flagged = true;
    }
  }
  if (cfg.tasks & kTaskWr) {
    const auto w = wr_statistic(a, Real(cfg.wr_delta), cfg.wr_n, ctx);
    if (w.value) r.wr = to_double(*w.value);
  }
  if (cfg.tasks & kTaskWindows) {
    try {
      if (const auto w = detect_window(a, cfg.window_max_period, ctx)) {
        r.window_period = w->period;
        r.window_center = to_double(w->center);
      }
    } catch (const NumericalError&) {
      r.flagged = true;
    }
  }
  if (cfg.tasks & kTaskHolder) {
    try {
      const auto e =
          estimate_local_exponent(a, Side::Right, cfg.holder_t0, cfg.holder_ratio, cfg.holder_count, ctx);
      if (e.slope && !e.flat && e.reliable) r.holder = *e.slope;
    } catch (const NumericalError&) {
      r.flagged = true;
    } catch (const InvalidArgument&) {
      r.flagged = true;
    }
  }
  return r;
}

// Fixed-width cache record. Presence bits mark optionals.
struct CacheEntry {
  std::uint64_t a_bits;
  std::uint32_t depth;
  std::uint32_t prec;
  std::uint32_t tasks;
  std::uint32_t present;
  double values[9];  // h, h_err, lambda, lambda_gap, q, wr, window_center, holder, window_period
  std::uint64_t checksum;
};
static_assert(sizeof(CacheEntry) == 8 + 4 * 4 + 9 * 8 + 8);

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline CacheEntry pack(const SweepRecord& r, std::uint32_t depth, std::uint32_t prec, std::uint32_t tasks) {
  CacheEntry e{};
  e.a_bits = std::bit_cast<std::uint64_t>(r.a);
  e.depth = depth;
  e.prec = prec;
  e.tasks = tasks;
  const std::optional<double> fields[8] = {r.h, r.h_err, r.lambda, r.lambda_gap, r.q, r.wr, r.window_center, r.holder};
  for (int i = 0; i < 8; ++i) {
    if (fields[i]) {
      e.present |= 1u << i;
      e.values[i] = *fields[i];
    }
  }
  if (r.window_period) {
    e.present |= 1u << 8;
    e.values[8] = *r.window_period;
  }
  if (r.flagged) e.present |= 1u << 31;
  e.checksum = fnv1a(&e, offsetof(CacheEntry, checksum));
  return e;
}

inline SweepRecord unpack(const CacheEntry& e) {
  SweepRecord r;
  r.a = std::bit_cast<double>(e.a_bits);
  std::optional<double>* fields[8] = {&r.h, &r.h_err, &r.lambda, &r.lambda_gap, &r.q, &r.wr, &r.window_center, &r.holder};
  for (int i = 0; i < 8; ++i) {
    if (e.present & (1u << i)) *fields[i] = e.values[i];
  }
  if (e.present & (1u << 8)) r.window_period = static_cast<int>(e.values[8]);
  r.flagged = (e.present >> 31) & 1u;
  return r;
}

}  // namespace detail

inline constexpr const char* kCacheMagic = "ENTROSCOPE-CACHE";
inline constexpr int kCacheVersion = 1;

/// Append-only cache file: one text header line, then CacheEntry records.
class SweepCache {
 public:
  using Key = std::tuple<std::uint64_t, std::uint32_t, std::uint32_t, std::uint32_t>;

  SweepCache(std::string path, unsigned prec) : path_(std::move(path)), prec_(prec) { load(); }

  bool usable() const { return usable_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::optional<SweepRecord> find(double a, std::uint32_t depth, std::uint32_t tasks) const {
    const auto it = entries_.find({std::bit_cast<std::uint64_t>(a), depth, prec_, tasks});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void append(const std::vector<SweepRecord>& records, std::uint32_t depth, std::uint32_t tasks) {
    if (!usable_ || records.empty()) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot write cache " + path_);
    if (fresh_) {
      out << header();
      fresh_ = false;
    }
    for (const auto& r : records) {
      const auto e = detail::pack(r, depth, prec_, tasks);
      out.write(reinterpret_cast<const char*>(&e), sizeof e);
      entries_[{e.a_bits, depth, prec_, tasks}] = r;
    }
    if (!out) throw IoError("cannot write cache " + path_);
  }

  std::string header() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s v%d prec=%u record=%zu\n", kCacheMagic, kCacheVersion, prec_,
                  sizeof(detail::CacheEntry));
    return buf;
  }

 private:
  void load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
      fresh_ = true;
      return;
    }
    std::string line;
    if (!std::getline(in, line) && line.empty()) {
      fresh_ = true;  // empty file
      return;
    }
    if (line + "\n" != header()) {
      usable_ = false;
      warnings_.push_back("cache " + path_ + " has a different version or precision; ignoring it");
      return;
    }
    detail::CacheEntry e;
    while (in.read(reinterpret_cast<char*>(&e), sizeof e)) {
      if (e.checksum != detail::fnv1a(&e, offsetof(detail::CacheEntry, checksum))) {
        usable_ = false;
        warnings_.push_back("cache " + path_ + " is corrupt; ignoring the rest of it");
        return;
      }
      entries_[{e.a_bits, e.depth, e.prec, e.tasks}] = detail::unpack(e);
    }
    if (in.gcount() != 0) {
      usable_ = false;
      warnings_.push_back("cache " + path_ + " ends in a truncated record; not appending");
    }
  }

  std::string path_;
  std::uint32_t prec_;
  bool usable_ = true;
  bool fresh_ = false;
  std::map<Key, SweepRecord> entries_;
  std::vector<std::string> warnings_;
};

struct SweepResult {
  std::vector<SweepRecord> records;
  std::size_t flagged = 0;
  std::size_t cache_hits = 0;
  std::vector<std::string> warnings;
};

/// Evaluates every grid point; thread count never changes the records.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  return with_precision(cfg.prec_bits, [&](auto ctx) -> SweepResult {
    if (cfg.depth != 0) ctx.depth = cfg.depth;
    const auto depth = static_cast<std::uint32_t>(ctx.depth);

    std::optional<SweepCache> cache;
    SweepResult res;
    if (!cfg.cache.empty()) {
      cache.emplace(cfg.cache, cfg.prec_bits);
      res.warnings = cache->warnings();
    }

    std::vector<SweepRecord> records(cfg.grid);
    std::vector<char> hit(cfg.grid, 0);
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < cfg.grid; ++i) {
      const double a = cfg.grid_point(i);
      if (cache) {
        if (auto r = cache->find(a, depth, cfg.tasks)) {
          records[i] = *r;
          hit[i] = 1;
          continue;
        }
      }
      todo.push_back(i);
    }
    res.cache_hits = cfg.grid - todo.size();

    const std::size_t nthreads = std::min<std::size_t>(cfg.threads, std::max<std::size_t>(1, todo.size()));
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = todo[k];
        records[i] = detail::compute_record(cfg.grid_point(i), cfg, ctx);
      }
    };
    if (nthreads <= 1) {
      work(0, todo.size());
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (todo.size() + nthreads - 1) / nthreads;
      for (std::size_t t = 0; t < nthreads; ++t) {
        const std::size_t b = std::min(todo.size(), t * chunk);
        const std::size_t e = std::min(todo.size(), b + chunk);
        pool.emplace_back(work, b, e);
      }
      for (auto& th : pool) th.join();
    }

    if (cache) {
      std::vector<SweepRecord> fresh;
      for (std::size_t i : todo) fresh.push_back(records[i]);
      cache->append(fresh, depth, cfg.tasks);
    }
    for (const auto& r : records) res.flagged += r.flagged ? 1 : 0;
    res.records = std::move(records);
    return res;
  });
}

inline constexpr const char* kCsvHeader = "a,h,h_err,lambda,lambda_gap,q,wr,window_period,window_center,holder";

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_csv(const std::vector<SweepRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  auto cell = [&](const std::optional<double>& v) {
    out += ',';
    if (v) out += format_double(*v);
  };
  for (const auto& r : records) {
    out += format_double(r.a);
    cell(r.h);
    cell(r.h_err);
    cell(r.lambda);
    cell(r.lambda_gap);
    cell(r.q);
    cell(r.wr);
    out += ',';
    if (r.window_period) out += std::to_string(*r.window_period);
    cell(r.window_center);
    cell(r.holder);
    out += '\n';
  }
  return out;
}

inline std::string to_json(const std::vector<SweepRecord>& records) {
  std::string out = "[";
  bool first_record = true;
  for (const auto& r : records) {
    out += first_record ? "\n  {" : ",\n  {";
    first_record = false;
    out += "\"a\": " + format_double(r.a);
    auto field = [&](const char* name, const std::optional<double>& v) {
      if (v) out += std::string(", \"") + name + "\": " + format_double(*v);
    };
    field("h", r.h);
    field("h_err", r.h_err);
    field("lambda", r.lambda);
    field("lambda_gap", r.lambda_gap);
    field("q", r.q);
    field("wr", r.wr);
    if (r.window_period) out += ", \"window_period\": " + std::to_string(*r.window_period);
    field("window_center", r.window_center);
    field("holder", r.holder);
    out += "}";
  }
  out += records.empty() ? "]\n" : "\n]\n";
  return out;
}

inline std::string export_records(const std::vector<SweepRecord>& records, Format f) {
  if (records.empty()) throw InvalidArgument("no records to export");
  return f == Format::Csv ? to_csv(records) : to_json(records);
}

inline std::vector<SweepRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InvalidArgument("not a sweep CSV (header mismatch)");
  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 10) throw InvalidArgument("sweep CSV row has " + std::to_string(cells.size()) + " cells");
    auto num = [&](std::size_t i) -> std::optional<double> {
      if (cells[i].empty()) return std::nullopt;
      return real_from_string<double>(cells[i]);
    };
    SweepRecord r;
    r.a = *num(0);
    r.h = num(1);
    r.h_err = num(2);
    r.lambda = num(3);
    r.lambda_gap = num(4);
    r.q = num(5);
    r.wr = num(6);
    if (!cells[7].empty()) r.window_period = std::stoi(cells[7]);
    r.window_center = num(8);
    r.holder = num(9);
    out.push_back(r);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("cannot write " + path);
}

}  // namespace entroscope
