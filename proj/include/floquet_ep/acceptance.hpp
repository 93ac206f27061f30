#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "floquet_ep/berry.hpp"
#include "floquet_ep/floquet.hpp"
#include "floquet_ep/propagator.hpp"
#include "floquet_ep/sweep.hpp"

namespace floquet_ep::acceptance {

enum class Level { Fast, Full };

struct Options {
  Level level = Level::Full;
  int threads = 8;             // worker count for the parallel criteria
  bool mutate_z_sign = false;  // self-test: corrupt the Eq. (1) Z sign on the analytic side of the oracle
};

struct Result {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string sci(double v) { return fmt("%.3e", v); }

// Largest distance from an element of a to its greedily matched partner in b.
inline double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (const cplx& x : a) {
    auto best = b.begin();
    for (auto it = b.begin(); it != b.end(); ++it)
      if (std::abs(*it - x) < std::abs(*best - x)) best = it;
    worst = std::max(worst, std::abs(*best - x));
    b.erase(best);
  }
  return worst;
}

inline Eigen::MatrixXcd random_matrix(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

inline ModelSpec flip_z(ModelSpec m) {
  for (auto& t : m.terms)
    if (t.axis == Axis::Z && t.hermiticity == Hermiticity::AntiHermitian) t.amplitude = -t.amplitude;
  return m;
}

inline ModelTemplate square(const char* name, int beta) { return {name, 1.0, beta, WaveformFamily::Square}; }
inline ModelTemplate smooth(const char* name, int beta) { return {name, 1.0, beta, WaveformFamily::Smooth}; }

inline std::string windows(const std::vector<std::pair<double, double>>& w) {
  std::string s;
  for (auto [a, b] : w) s += (s.empty() ? "" : " ") + fmt("[%.3f,", a) + fmt("%.3f]", b);
  return s.empty() ? "none" : s;
}

inline const std::pair<double, double>* window_containing(const std::vector<std::pair<double, double>>& w, double x) {
  for (const auto& p : w)
    if (p.first <= x && x <= p.second) return &p;
  return nullptr;
}

}  // namespace detail

/// Criterion 1: PT cosY-cosZ square, beta = 1, 50x50 over [0,5]x[0.2,3] is stable everywhere, in < 5 s.
inline Result criterion_1(const Options& o) {
  Result r{1, "defective-drive stability (beta=1 always real)", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = phase_diagram(detail::square("pt-cosy-cosz", 1), {0.0, 5.0, 50, 0.2, 3.0, 50, SweepEngine::MonodromyPiecewise},
                               {.threads = o.threads});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  bool finite = d.errors.empty();
  for (double v : d.values) {
    finite = finite && std::isfinite(v);
    worst = std::max(worst, v);
  }
  r.passed = finite && worst < 1e-8 && seconds < 5.0;
  r.detail = "max Im eps = " + detail::sci(worst) + " (< 1e-8), runtime " + detail::fmt("%.2f s", seconds) + " (< 5 s)";
  return r;
}

/// Criterion 2: PT beta = 3, gamma = 0.05: a window contains 2/3 with width < 0.2, for both engines.
inline Result criterion_2(const Options& o) {
  Result r{2, "primary resonance omega = 2J/beta", false, "", 0.0};
  bool ok = true;
  for (auto [m, engine] : {std::pair{detail::square("pt-cosy-cosz", 3), SweepEngine::MonodromyPiecewise},
                           std::pair{detail::smooth("pt-cosy-cosz", 3), SweepEngine::Floquet}}) {
    const auto d = phase_diagram(m, {0.0, 0.05, 2, 0.2, 3.0, 561, engine}, {.threads = o.threads, .cutoff = 20});
    const auto w = instability_window(d, 1);
    const auto* hit = detail::window_containing(w, 2.0 / 3.0);
    const bool good = hit && hit->second - hit->first < 0.2;
    ok = ok && good;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + to_string(engine) + ": " + detail::windows(w) +
                (hit ? " width " + detail::fmt("%.3f", hit->second - hit->first) : " (2/3 not covered)");
  }
  r.passed = ok;
  return r;
}

/// Criterion 3: APT cosX-cosY beta = 3, gamma = 0.05: windows contain 2 and 2/3 (square and smooth).
inline Result criterion_3(const Options& o) {
  Result r{3, "dual resonances omega = 2J and 2J/beta", false, "", 0.0};
  bool ok = true;
  for (auto [m, engine] : {std::pair{detail::square("apt-cosx-cosy", 3), SweepEngine::MonodromyPiecewise},
                           std::pair{detail::smooth("apt-cosx-cosy", 3), SweepEngine::Floquet}}) {
    const auto d = phase_diagram(m, {0.0, 0.05, 2, 0.2, 3.0, 561, engine}, {.threads = o.threads, .cutoff = 20});
    const auto w = instability_window(d, 1);
    ok = ok && detail::window_containing(w, 2.0) && detail::window_containing(w, 2.0 / 3.0);
    r.detail += std::string(r.detail.empty() ? "" : "; ") + to_string(engine) + ": " + detail::windows(w);
  }
  r.passed = ok;
  return r;
}

/// Criterion 4: APT cosX-cosY beta = 3, gamma = 5: unstable at omega = 0.25, 0.5, ..., 3.
inline Result criterion_4(const Options&) {
  Result r{4, "large-gamma instability", false, "", 0.0};
  double lowest_sq = INFINITY, lowest_sm = INFINITY;
  for (int k = 1; k <= 12; ++k) {
    const double w = 0.25 * k;
    lowest_sq = std::min(lowest_sq, monodromy(detail::square("apt-cosx-cosy", 3).at(5.0, w)).max_im_eps);
    lowest_sm = std::min(lowest_sm,
                         monodromy(detail::smooth("apt-cosx-cosy", 3).at(5.0, w), {Engine::Integrate, 200000}).max_im_eps);
  }
  r.passed = lowest_sq > 1e-8 && lowest_sm > 1e-8;
  r.detail = "min over omega of max Im eps: square (piecewise) " + detail::sci(lowest_sq) + ", smooth (integrate) " +
             detail::sci(lowest_sm) + " (> 1e-8 required)";
  return r;
}

/// Criterion 5: APT cosX-sinY square, beta = 3, omega = 0.05: lowest EP root at gamma = 1 +- 0.05, kind EP.
inline Result criterion_5(const Options&) {
  Result r{5, "static-threshold clustering at low omega", false, "", 0.0};
  std::vector<double> gammas(601);
  for (int i = 0; i <= 600; ++i) gammas[i] = 3.0 * i / 600;
  const auto col = ep_roots_in_column(detail::square("apt-cosx-siny", 3), SweepEngine::MonodromyPiecewise, 0.05, gammas);
  const EPPoint* lowest = nullptr;
  for (const auto& p : col.roots)
    if (p.gamma > 0.0 && p.kind != DegeneracyKind::None) {
      lowest = &p;
      break;
    }
  if (!lowest) {
    r.detail = "no EP root found in gamma in (0, 3]";
    return r;
  }
  r.passed = std::abs(lowest->gamma - 1.0) <= 0.05 && lowest->kind == DegeneracyKind::EP;
  std::size_t near_one = 0, positive = 0;
  for (const auto& p : col.roots) {
    positive += p.gamma > 0.0;
    near_one += std::abs(p.gamma - 1.0) <= 0.05;
  }
  r.detail = "lowest root gamma = " + detail::fmt("%.6f", lowest->gamma) + " (" + to_string(lowest->kind) +
             "), expected 1 +- 0.05; " + std::to_string(positive) + " roots in (0,3], " +
             std::to_string(near_one) + " within 0.05 of 1, highest " + detail::fmt("%.6f", col.roots.back().gamma);
  return r;
}

/// Criterion 6: smooth PT beta = 3 at 25 random points: Floquet N=20 vs integrate to 1e-6; N=20 vs 40 converged.
inline Result criterion_6(const Options&) {
  Result r{6, "engine cross-validation (Floquet vs monodromy-integrate)", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ug(0.0, 2.0), uw(0.3, 3.0);
  double worst = 0.0, worst_delta = 0.0;
  int converged = 0;
  for (int k = 0; k < 25; ++k) {
    const double g = ug(rng), w = uw(rng);
    const auto m = detail::smooth("pt-cosy-cosz", 3).at(g, w);
    const auto s = floquet_spectrum(m, 20);
    const auto mono = monodromy(m, {Engine::Integrate, 200000});
    for (const auto& b : s.bands)
      worst = std::max({worst, std::abs(std::abs(b.epsilon.real()) - std::abs(mono.eps_F.real())),
                        std::abs(std::abs(b.epsilon.imag()) - std::abs(mono.eps_F.imag()))});
    const auto c = convergence_check(m, 20, 1e-6);
    converged += c.converged;
    worst_delta = std::max(worst_delta, c.delta);
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.passed = worst < 1e-6 && converged == 25 && seconds < 60.0;
  r.detail = "max |folded eps - eps_F| = " + detail::sci(worst) + " (< 1e-6); converged " + std::to_string(converged) +
             "/25, max delta " + detail::sci(worst_delta) + "; runtime " + detail::fmt("%.1f s", seconds) + " (< 60 s)";
  return r;
}

/// Criterion 7: square PT beta in {1,2,3}, 20 random points each: analytic vs RK4 |dG| < 1e-7, det G = 1 to 1e-9.
inline Result criterion_7(const Options& o) {
  Result r{7, "propagator oracle (analytic product vs integration)", false, "", 0.0};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ug(0.0, 2.0), uw(0.3, 3.0);
  double worst = 0.0, worst_det = 0.0;
  for (int beta = 1; beta <= 3; ++beta)
    for (int k = 0; k < 20; ++k) {
      const double g = ug(rng), w = uw(rng);
      const auto m = detail::square("pt-cosy-cosz", beta).at(g, w);
      const auto analytic = monodromy(o.mutate_z_sign ? detail::flip_z(m) : m, {Engine::Piecewise}).G();
      const auto numeric = monodromy(m, {Engine::Integrate, 200000}).G();
      worst = std::max(worst, max_abs_diff(analytic, numeric));
      for (const auto* g : {&analytic, &numeric})
        worst_det = std::max(worst_det, std::abs((*g)(0, 0) * (*g)(1, 1) - (*g)(0, 1) * (*g)(1, 0) - 1.0));
    }
  r.passed = worst < 1e-7 && worst_det < 1e-9;
  r.detail = "max |dG| = " + detail::sci(worst) + " (< 1e-7), max |det G - 1| = " + detail::sci(worst_det) + " (< 1e-9)" +
             (o.mutate_z_sign ? " [Z-sign mutation active]" : "");
  return r;
}

/// Criterion 8: Eq. (20) beta = 1: Re theta = +-pi (opposite signs) at gamma = 1.5; Im theta = 0 at gamma = 0.5.
inline Result criterion_8(const Options&) {
  Result r{8, "Berry phase plateaus (Eq. 20, beta=1)", false, "", 0.0};
  const BerryOptions opts{.steps = 8192, .richardson = true};
  const auto m = detail::smooth("apt-cosx-siny", 1);
  const auto hi = berry_phase_loop(m.at(1.5, 1.0), opts);
  const auto lo = berry_phase_loop(m.at(0.5, 1.0), opts);
  const double pi = std::numbers::pi;
  const double dev = std::max(std::abs(std::abs(hi.theta[0].real()) - pi), std::abs(std::abs(hi.theta[1].real()) - pi));
  const bool opposite = hi.theta[0].real() * hi.theta[1].real() < 0;
  const double im = std::max(std::abs(lo.theta[0].imag()), std::abs(lo.theta[1].imag()));
  r.passed = dev < 1e-3 && opposite && im < 1e-6;
  r.detail = "gamma=1.5: Re theta = " + detail::fmt("%+.6f", hi.theta[0].real()) + ", " +
             detail::fmt("%+.6f", hi.theta[1].real()) + " (| |Re|-pi | = " + detail::sci(dev) + " < 1e-3, " +
             (opposite ? "opposite signs" : "same sign") + "); gamma=0.5: max |Im theta| = " + detail::sci(im) +
             " (< 1e-6)";
  return r;
}

/// Criterion 9: equatorial Hermitian loop: theta = +-pi, Im theta = 0, half solid angle = pi.
inline Result criterion_9(const Options&) {
  Result r{9, "Hermitian reduction (equatorial loop)", false, "", 0.0};
  const ModelTemplate eq{"hermitian-cosx-siny", 0.0, 1, WaveformFamily::Smooth};
  const auto res = berry_phase_loop(eq.at(1.0, 1.0), {.steps = 8192, .richardson = true});
  const double pi = std::numbers::pi;
  double dev = 0.0, im = 0.0;
  for (const auto& t : res.theta) {
    dev = std::max(dev, std::abs(std::abs(t.real()) - pi));
    im = std::max(im, std::abs(t.imag()));
  }
  std::vector<RVec3> loop(8192);
  for (int k = 0; k < 8192; ++k) {
    const double phi = 2 * pi * k / 8192;
    loop[k] = {std::cos(phi), std::sin(phi), 0.0};
  }
  const double half = half_solid_angle(loop);
  r.passed = dev < 1e-4 && im < 1e-8 && std::abs(half - pi) < 1e-10;
  r.detail = "| |theta|-pi | = " + detail::sci(dev) + " (< 1e-4), |Im theta| = " + detail::sci(im) +
             " (< 1e-8), |Omega/2 - pi| = " + detail::sci(std::abs(half - pi)) + " (< 1e-10)";
  return r;
}

/// Criterion 10: spectrum-region threshold gamma_c = 1 +- 1e-6 for Eq. (17) and Eq. (20) at beta = 1.
inline Result criterion_10(const Options&) {
  Result r{10, "instantaneous-spectrum thresholds", false, "", 0.0};
  bool ok = true;
  for (const char* name : {"pt-cosy-sinz", "apt-cosx-siny"}) {
    const auto s = spectrum_region_scan(detail::smooth(name, 1), 0.0, 3.0, 31);
    const bool good = !s.thresholds.empty() && std::abs(s.thresholds[0] - 1.0) <= 1e-6;
    ok = ok && good;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + name + ": " +
                (s.thresholds.empty() ? std::string("no threshold") : "gamma_c = " + detail::fmt("%.9f", s.thresholds[0]));
  }
  r.passed = ok;
  return r;
}

/// Criterion 11: gauge invariance, conjugation closure of H_F, thread determinism, similarity invariance.
inline Result criterion_11(const Options&) {
  Result r{11, "property suites", false, "", 0.0};
  const double pi = std::numbers::pi;

  double gauge = 0.0;
  {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> mag(0.2, 5.0), ph(-pi, pi);
    const std::pair<const char*, double> loops[] = {
        {"apt-cosx-siny", 0.5}, {"apt-cosx-siny", 2.5}, {"pt-cosy-sinz", 0.6}, {"hermitian-cosx-siny", 0.9}};
    for (auto [name, g] : loops) {
      const auto m = detail::smooth(name, 3).at(g, 1.0);
      const int n = 1024;
      std::vector<EigensystemInstant> frames(n);
      for (int k = 0; k < n; ++k)
        frames[k] = biorthonormalize(instantaneous_eigensystem(hamiltonian_at(m, m.period() * k / n)));
      const auto ref = wilson_loop_phases(frames, {});
      for (auto& f : frames)
        for (int a = 0; a < 2; ++a) {
          const double rho = mag(rng), phase = ph(rng);
          const cplx c = std::polar(rho, phase);
          f.right[a] = {f.right[a][0] * c, f.right[a][1] * c};
          f.left[a] = {f.left[a][0] / c, f.left[a][1] / c};
        }
      const auto moved = wilson_loop_phases(frames, {});
      for (int a = 0; a < 2; ++a) gauge = std::max(gauge, std::abs(moved.theta[a] - ref.theta[a]));
    }
  }

  double closure = 0.0;
  {
    std::mt19937_64 rng(111);
    std::uniform_real_distribution<double> ug(0.0, 2.0), uw(0.3, 3.0);
    const char* names[] = {"pt-cosy-cosz", "apt-cosx-cosy", "apt-cosx-siny"};
    for (int i = 0; i < 9; ++i) {
      const double g = ug(rng), w = uw(rng);
      const auto m = detail::smooth(names[i % 3], 3).at(g, w);
      auto eigs = complex_eigenvalues(build_floquet_matrix(m, 20).matrix);
      auto conj = eigs;
      for (auto& z : conj) z = std::conj(z);
      closure = std::max(closure, detail::multiset_distance(eigs, conj));
    }
  }

  bool deterministic = true;
  {
    const auto m = detail::square("pt-cosy-cosz", 3);
    const GridSpec g{0.0, 3.0, 64, 0.1, 3.0, 64, SweepEngine::MonodromyPiecewise};
    const auto base = phase_diagram(m, g, {.threads = 1});
    for (int t : {4, 8}) {
      const auto other = phase_diagram(m, g, {.threads = t});
      deterministic = deterministic &&
                      std::memcmp(base.values.data(), other.values.data(), base.values.size() * sizeof(double)) == 0;
    }
  }

  double similarity = 0.0;
  {
    std::mt19937_64 rng(82);
    for (int trial = 0; trial < 3; ++trial) {
      const Eigen::MatrixXcd m = detail::random_matrix(rng, 82);
      const Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(82, 82) + 0.05 * detail::random_matrix(rng, 82);
      const Eigen::MatrixXcd similar = p.partialPivLu().solve(m * p);
      similarity = std::max(similarity, detail::multiset_distance(complex_eigenvalues(m), complex_eigenvalues(similar)));
    }
  }

  r.passed = gauge < 1e-10 && closure < 1e-8 && deterministic && similarity < 1e-8;
  r.detail = "gauge drift " + detail::sci(gauge) + " (< 1e-10); H_F conjugation closure " + detail::sci(closure) +
             " (< 1e-8); 1/4/8-thread bit-identical: " + (deterministic ? "yes" : "NO") + "; similarity " +
             detail::sci(similarity) + " (< 1e-8)";
  return r;
}

/// Criterion 12: 400x400 piecewise beta = 3 diagram in < 30 s on 8 threads with >= 4x speedup over 1 thread.
inline Result criterion_12(const Options&) {
  Result r{12, "performance (400x400, 8 threads, >= 4x speedup)", false, "", 0.0};
  const auto m = detail::square("pt-cosy-cosz", 3);
  const GridSpec g{0.0, 5.0, 400, 0.05, 3.0, 400, SweepEngine::MonodromyPiecewise};
  auto timed = [&](int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    phase_diagram(m, g, {.threads = threads});
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double t8 = timed(8), t1 = timed(1);
  const double speedup = t1 / t8;
  const unsigned hw = std::thread::hardware_concurrency();
  r.passed = t8 < 30.0 && speedup >= 4.0;
  r.detail = "8 threads " + detail::fmt("%.2f s", t8) + " (< 30 s), 1 thread " + detail::fmt("%.2f s", t1) +
             ", speedup " + detail::fmt("%.2fx", speedup) + " (>= 4x); hardware threads available: " + std::to_string(hw);
  return r;
}

inline const std::vector<std::function<Result(const Options&)>>& criteria() {
  static const std::vector<std::function<Result(const Options&)>> all{
      criterion_1, criterion_2, criterion_3, criterion_4,  criterion_5,  criterion_6,
      criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12};
  return all;
}

/// Fast level: oracle cross-checks and analytic examples; full level: every criterion.
inline std::vector<int> criteria_for(Level level) {
  if (level == Level::Fast) return {1, 6, 7, 9, 10, 11};
  return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
}

/// Runs one criterion; exceptions count as failures with the message as detail.
inline Result run_criterion(int id, const Options& o) {
  if (id < 1 || id > static_cast<int>(criteria().size())) throw ConfigError("no criterion " + std::to_string(id));
  const auto t0 = std::chrono::steady_clock::now();
  Result r;
  try {
    r = criteria()[id - 1](o);
  } catch (const std::exception& e) {
    r = {id, "criterion " + std::to_string(id), false, std::string("exception: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string format_line(const Result& r) {
  char head[96];
  std::snprintf(head, sizeof head, "criterion %2d: %s  %-52s", r.id, r.passed ? "PASS" : "FAIL", r.title.c_str());
  return std::string(head) + " | " + r.detail + detail::fmt(" [%.2f s]", r.seconds);
}

}  // namespace floquet_ep::acceptance
