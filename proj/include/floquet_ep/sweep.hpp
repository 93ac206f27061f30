#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "floquet_ep/berry.hpp"
#include "floquet_ep/errors.hpp"
#include "floquet_ep/floquet.hpp"
#include "floquet_ep/model.hpp"
#include "floquet_ep/propagator.hpp"

namespace floquet_ep {

enum class SweepEngine { Floquet, MonodromyPiecewise, MonodromyIntegrate };

inline const char* to_string(SweepEngine e) {
  switch (e) {
    case SweepEngine::Floquet: return "floquet";
    case SweepEngine::MonodromyPiecewise: return "monodromy-piecewise";
    case SweepEngine::MonodromyIntegrate: return "monodromy-integrate";
  }
  return "monodromy-piecewise";
}

inline SweepEngine parse_engine(const std::string& s) {
  if (s == "floquet") return SweepEngine::Floquet;
  if (s == "monodromy-piecewise" || s == "piecewise") return SweepEngine::MonodromyPiecewise;
  if (s == "monodromy-integrate" || s == "integrate") return SweepEngine::MonodromyIntegrate;
  throw ConfigError("unknown engine: " + s);
}

/// Evenly spaced (gamma, omega) nodes, endpoints included.
struct GridSpec {
  double gamma_min = 0.0, gamma_max = 1.0;
  int gamma_count = 2;
  double omega_min = 0.1, omega_max = 1.0;
  int omega_count = 2;
  SweepEngine engine = SweepEngine::MonodromyPiecewise;

  void validate() const {
    if (gamma_count < 2 || omega_count < 2) throw ConfigError("grid counts must be >= 2");
    if (!(omega_min > 0.0)) throw ConfigError("omega_min must be > 0");
    if (!(gamma_min >= 0.0)) throw ConfigError("gamma_min must be >= 0");
    if (!(gamma_max >= gamma_min) || !(omega_max >= omega_min) || !std::isfinite(gamma_max) ||
        !std::isfinite(omega_max))
      throw ConfigError("grid ranges must be finite and ordered");
  }
  [[nodiscard]] double gamma(int i) const {
    return i == gamma_count - 1 ? gamma_max : gamma_min + (gamma_max - gamma_min) * i / (gamma_count - 1);
  }
  [[nodiscard]] double omega(int j) const {
    return j == omega_count - 1 ? omega_max : omega_min + (omega_max - omega_min) * j / (omega_count - 1);
  }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(gamma_count) * omega_count; }
  [[nodiscard]] double gamma_step() const { return (gamma_max - gamma_min) / (gamma_count - 1); }
};

struct SweepOptions {
  int threads = 1;
  int cutoff = 20;                   // Floquet harmonics
  int integrate_steps = 200000;      // RK4 steps per period
  double failure_budget = 0.01;      // fraction of NaN cells tolerated
  EPOptions ep{};
};

struct CellError {
  int omega_index = 0;
  int gamma_index = 0;
  std::string message;
};

/**
 * max Im eps on the grid, row-major with omega outer and gamma inner:
 * values[j * gamma_count + i] belongs to (omega(j), gamma(i)). NaN marks a failed cell.
 */
struct PhaseDiagram {
  GridSpec grid;
  ModelTemplate model;
  std::vector<double> values;
  std::map<std::string, std::string> metadata;
  std::vector<CellError> errors;

  [[nodiscard]] double at(int omega_index, int gamma_index) const {
    return values[static_cast<std::size_t>(omega_index) * grid.gamma_count + gamma_index];
  }
};

/// Runs body(k) for k in [0, n) on `threads` workers; each k is written by exactly one worker.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads < 1 ? 1 : threads, n));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  constexpr std::size_t kChunk = 64;
  auto worker = [&] {
    try {
      for (;;) {
        const std::size_t start = next.fetch_add(kChunk);
        if (start >= n) break;
        const std::size_t stop = std::min(n, start + kChunk);
        for (std::size_t k = start; k < stop; ++k) body(k);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline void check_engine_family(const ModelTemplate& model, SweepEngine engine) {
  model.validate();
  if (engine == SweepEngine::Floquet && model.family != WaveformFamily::Smooth)
    throw ConfigError("the floquet engine needs the smooth waveform family");
  if (engine == SweepEngine::MonodromyPiecewise && model.family != WaveformFamily::Square)
    throw ConfigError("the monodromy-piecewise engine needs the square waveform family");
}

/// max Im eps at one node with the chosen engine.
inline double evaluate_cell(const ModelTemplate& model, SweepEngine engine, double gamma, double omega,
                            const SweepOptions& opts = {}) {
  const ModelSpec m = model.at(gamma, omega);
  switch (engine) {
    case SweepEngine::Floquet: return max_im_quasienergy(m, opts.cutoff);
    case SweepEngine::MonodromyPiecewise: return monodromy(m, {Engine::Piecewise, opts.integrate_steps}).max_im_eps;
    case SweepEngine::MonodromyIntegrate: return monodromy(m, {Engine::Integrate, opts.integrate_steps}).max_im_eps;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/**
 * @brief Evaluates every grid node independently on a worker pool.
 *
 * Each cell is a pure function of its coordinates and lands in its own slot, so
 * the result is bit-identical for any thread count. Numerical failures become NaN
 * plus an error entry; more than `failure_budget` of the cells failing aborts.
 */
inline PhaseDiagram phase_diagram(const ModelTemplate& model, const GridSpec& grid, const SweepOptions& opts = {}) {
  grid.validate();
  check_engine_family(model, grid.engine);
  PhaseDiagram d;
  d.grid = grid;
  d.model = model;
  d.values.assign(grid.size(), 0.0);
  std::vector<std::string> messages(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t k) {
    const int j = static_cast<int>(k / grid.gamma_count);
    const int i = static_cast<int>(k % grid.gamma_count);
    try {
      const double v = evaluate_cell(model, grid.engine, grid.gamma(i), grid.omega(j), opts);
      if (!std::isfinite(v)) throw NumericalError("non-finite max Im eps");
      d.values[k] = v;
    } catch (const NumericalError& e) {
      d.values[k] = std::numeric_limits<double>::quiet_NaN();
      messages[k] = e.what();
      if (messages[k].empty()) messages[k] = "numerical failure";
    }
  });
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (!messages[k].empty())
      d.errors.push_back({static_cast<int>(k / grid.gamma_count), static_cast<int>(k % grid.gamma_count), messages[k]});
  if (static_cast<double>(d.errors.size()) > opts.failure_budget * static_cast<double>(grid.size())) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu of %zu cells failed (budget %g%%); first: %s", d.errors.size(), grid.size(),
                  opts.failure_budget * 100, d.errors.front().message.c_str());
    throw SweepAborted(buf);
  }
  d.metadata["model"] = model.name;
  d.metadata["engine"] = to_string(grid.engine);
  if (grid.engine == SweepEngine::Floquet)
    d.metadata["cutoff"] = std::to_string(opts.cutoff);
  else
    d.metadata["segments"] = std::to_string(4 * model.beta);
  return d;
}

/// Maximal runs of omega nodes where max Im eps > threshold in one gamma row, as [omega_first, omega_last].
inline std::vector<std::pair<double, double>> instability_window(const PhaseDiagram& d, int gamma_index,
                                                                 double threshold = 1e-8) {
  if (gamma_index < 0 || gamma_index >= d.grid.gamma_count) throw ConfigError("gamma row outside the grid");
  std::vector<std::pair<double, double>> out;
  int start = -1;
  for (int j = 0; j <= d.grid.omega_count; ++j) {
    const bool hot = j < d.grid.omega_count && d.at(j, gamma_index) > threshold;
    if (hot && start < 0) start = j;
    if (!hot && start >= 0) {
      out.emplace_back(d.grid.omega(start), d.grid.omega(j - 1));
      start = -1;
    }
  }
  return out;
}

/// Row whose gamma is closest to `gamma`.
inline int nearest_gamma_row(const GridSpec& g, double gamma) {
  int best = 0;
  for (int i = 1; i < g.gamma_count; ++i)
    if (std::abs(g.gamma(i) - gamma) < std::abs(g.gamma(best) - gamma)) best = i;
  return best;
}

struct EPPoint {
  double omega = 0.0;
  double gamma = 0.0;
  DegeneracyKind kind = DegeneracyKind::None;
  double f = 0.0;  // indicator re-evaluated at the refined root
};

struct EPPolyline {
  int id = 0;
  DegeneracyKind kind = DegeneracyKind::EP;
  std::vector<EPPoint> points;  // increasing omega
};

struct EPContourSet {
  std::vector<EPPolyline> contours;
  double tolerance = 1e-6;  // bisection width in gamma
  std::vector<std::string> log;
};

struct ColumnRoots {
  std::vector<EPPoint> roots;  // increasing gamma
  std::vector<std::string> log;
};

/**
 * @brief Roots in gamma of the EP indicator f along one omega column.
 *
 * Sign changes of f between nodes are bisected until the bracket is narrower
 * than `tolerance` and |f| < opts.ep.root_tolerance; nodes with |f| below the
 * root tolerance are roots as they stand. A bracket that collapses without |f|
 * becoming small straddles a discontinuity: dropped and logged.
 */
inline ColumnRoots ep_roots_in_column(const ModelTemplate& model, SweepEngine engine, double omega,
                                      const std::vector<double>& gammas, const SweepOptions& opts = {},
                                      double tolerance = 1e-6) {
  if (engine == SweepEngine::Floquet) throw ConfigError("EP contours need a monodromy engine");
  const MonodromyOptions mopts{engine == SweepEngine::MonodromyIntegrate ? Engine::Integrate : Engine::Piecewise,
                               opts.integrate_steps};
  auto eval = [&](double g) { return ep_indicator(monodromy(model.at(g, omega), mopts), opts.ep); };
  ColumnRoots out;
  const std::size_t n = gammas.size();
  std::vector<EPIndicator> f(n);
  std::vector<bool> ok(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      f[i] = eval(gammas[i]);
    } catch (const NumericalError& e) {
      ok[i] = false;
      out.log.push_back("omega=" + std::to_string(omega) + " gamma=" + std::to_string(gammas[i]) + ": " + e.what());
    }
  }
  const double tol_f = opts.ep.root_tolerance;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    if (std::abs(f[i].f) < tol_f) {
      out.roots.push_back({omega, gammas[i], f[i].kind, f[i].f});
      continue;
    }
    if (i + 1 >= n || !ok[i + 1] || std::abs(f[i + 1].f) < tol_f) continue;
    if ((f[i].f < 0) == (f[i + 1].f < 0)) continue;
    double lo = gammas[i], hi = gammas[i + 1];
    const bool lo_negative = f[i].f < 0;
    EPIndicator mid_f{};
    double mid = 0.5 * (lo + hi);
    bool found = false;
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (lo + hi);
      mid_f = eval(mid);
      if (hi - lo < tolerance && std::abs(mid_f.f) < tol_f) {
        found = true;
        break;
      }
      if (mid <= lo || mid >= hi) break;  // bracket exhausted at machine precision
      ((mid_f.f < 0) == lo_negative ? lo : hi) = mid;
    }
    if (found)
      out.roots.push_back({omega, mid, mid_f.kind, mid_f.f});
    else
      out.log.push_back("omega=" + std::to_string(omega) + ": root lost in [" + std::to_string(gammas[i]) + ", " +
                        std::to_string(gammas[i + 1]) + "] (discontinuous indicator), dropped");
  }
  return out;
}

/**
 * @brief EP contours over the grid: per-column roots, linked between adjacent
 * columns by nearest gamma within 3 grid cells. EP and Diabolic points form
 * separate polylines.
 */
inline EPContourSet trace_ep_contours(const ModelTemplate& model, const GridSpec& grid, const SweepOptions& opts = {},
                                      double tolerance = 1e-6) {
  grid.validate();
  check_engine_family(model, grid.engine);
  if (grid.engine == SweepEngine::Floquet) throw ConfigError("EP contours need a monodromy engine");
  std::vector<double> gammas(grid.gamma_count);
  for (int i = 0; i < grid.gamma_count; ++i) gammas[i] = grid.gamma(i);
  std::vector<ColumnRoots> columns(grid.omega_count);
  parallel_for(static_cast<std::size_t>(grid.omega_count), opts.threads, [&](std::size_t j) {
    columns[j] = ep_roots_in_column(model, grid.engine, grid.omega(static_cast<int>(j)), gammas, opts, tolerance);
  });

  EPContourSet set;
  set.tolerance = tolerance;
  const double reach = 3.0 * grid.gamma_step();
  std::vector<int> open;  // indices into set.contours ending in the previous column
  for (int j = 0; j < grid.omega_count; ++j) {
    for (auto& line : columns[j].log) set.log.push_back(std::move(line));
    std::vector<int> next_open;
    std::vector<bool> taken(open.size(), false);
    for (const auto& p : columns[j].roots) {
      if (p.kind == DegeneracyKind::None) continue;
      int best = -1;
      double best_d = reach;
      for (std::size_t o = 0; o < open.size(); ++o) {
        const auto& line = set.contours[open[o]];
        if (taken[o] || line.kind != p.kind) continue;
        const double dist = std::abs(line.points.back().gamma - p.gamma);
        if (dist <= best_d) {
          best_d = dist;
          best = static_cast<int>(o);
        }
      }
      if (best >= 0) {
        taken[best] = true;
        set.contours[open[best]].points.push_back(p);
        next_open.push_back(open[best]);
      } else {
        set.contours.push_back({static_cast<int>(set.contours.size()), p.kind, {p}});
        next_open.push_back(static_cast<int>(set.contours.size()) - 1);
      }
    }
    open = std::move(next_open);
  }
  return set;
}

/// One Berry phase per (gamma, band).
struct BerryRow {
  double gamma = 0.0;
  int band = 0;
  cplx theta{};
  std::string flags = "ok";
};

struct BerryCurve {
  ModelTemplate model;
  int steps = 0;
  bool richardson = false;
  std::vector<BerryRow> rows;  // gamma-major, band 0 then band 1
  std::map<std::string, std::string> metadata;
};

/**
 * @brief Berry phases of both bands along a gamma list, in parallel, collected in index order.
 *
 * Runs in flag-and-continue mode so EP crossings mark rows instead of aborting; the loop
 * is a property of s/T only, so omega is fixed to 1. The largest step-doubling delta over
 * the certified rows goes into metadata as the convergence certificate.
 */
inline BerryCurve berry_sweep(const ModelTemplate& model, const std::vector<double>& gammas, BerryOptions opts = {},
                              int threads = 1) {
  model.validate();
  if (gammas.empty()) throw ConfigError("berry sweep needs at least one gamma");
  opts.flag_and_continue = true;
  std::vector<BerryPhaseResult> results(gammas.size());
  parallel_for(gammas.size(), threads, [&](std::size_t k) { results[k] = berry_phase_loop(model.at(gammas[k], 1.0), opts); });
  BerryCurve c;
  c.model = model;
  c.steps = opts.steps;
  c.richardson = opts.richardson;
  double worst = 0.0;
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    const auto flags = results[k].flags_string();
    for (int a = 0; a < 2; ++a) c.rows.push_back({gammas[k], a, results[k].theta[a], flags});
    if (results[k].certified) worst = std::max(worst, results[k].step_doubling_delta);
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", worst);
  c.metadata["model"] = model.name;
  c.metadata["step_doubling_delta_max"] = buf;
  return c;
}

}  // namespace floquet_ep
