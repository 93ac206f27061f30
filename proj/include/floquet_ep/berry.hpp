#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "floquet_ep/complex2x2.hpp"
#include "floquet_ep/errors.hpp"
#include "floquet_ep/model.hpp"

namespace floquet_ep {

using CVec2 = std::array<cplx, 2>;
using RVec3 = std::array<double, 3>;

/**
 * @brief Eigenpairs of one instantaneous 2x2 Hamiltonian.
 *
 * left[a] holds covector components: <L_a|v> = left[a][0] v[0] + left[a][1] v[1]
 * (bilinear, no conjugation). Index 0 is eps_+ = d0 + sqrt(d.d), index 1 is eps_-.
 */
struct EigensystemInstant {
  std::array<cplx, 2> eigenvalues{};
  std::array<CVec2, 2> right{};
  std::array<CVec2, 2> left{};
  bool biorthonormal = false;
  double gap = 0.0;
};

inline cplx pair(const CVec2& left, const CVec2& right) { return left[0] * right[0] + left[1] * right[1]; }

inline double norm2(const CVec2& v) { return std::sqrt(std::norm(v[0]) + std::norm(v[1])); }

namespace detail {

// Unit vector whose largest component is real and positive.
inline CVec2 tidy(CVec2 v) {
  const double n = norm2(v);
  const cplx big = std::abs(v[0]) >= std::abs(v[1]) ? v[0] : v[1];
  const cplx phase = std::conj(big) / (std::abs(big) * n);
  return {v[0] * phase, v[1] * phase};
}

}  // namespace detail

/**
 * Closed-form eigensystem. For A = H - eps I the adjugate satisfies
 * A adj(A) = adj(A) A = 0, so its largest column is a right eigenvector and
 * its largest row a left one.
 */
inline EigensystemInstant instantaneous_eigensystem(const Complex2x2& h) {
  const auto b = bloch_decompose(h);
  const cplx mu = std::sqrt(bilinear_square(b.d));
  const double dn = euclidean_norm(b.d);
  EigensystemInstant e;
  e.eigenvalues = {b.d0 + mu, b.d0 - mu};
  e.gap = 2.0 * std::abs(mu);
  if (dn == 0.0) {
    e.right = {CVec2{1.0, 0.0}, CVec2{0.0, 1.0}};
    e.left = e.right;
    e.biorthonormal = true;
    return e;
  }
  if (std::abs(mu) < 1e-10 * dn) throw DefectivePoint("instantaneous Hamiltonian is defective (exceptional point)");
  for (int a = 0; a < 2; ++a) {
    const cplx p = h(0, 0) - e.eigenvalues[a], q = h(0, 1), r = h(1, 0), s = h(1, 1) - e.eigenvalues[a];
    // adj = [[s, -q], [-r, p]]
    const CVec2 c0{s, -r}, c1{-q, p};
    const CVec2 r0{s, -q}, r1{-r, p};
    e.right[a] = detail::tidy(norm2(c0) >= norm2(c1) ? c0 : c1);
    e.left[a] = detail::tidy(norm2(r0) >= norm2(r1) ? r0 : r1);
  }
  return e;
}

/// Scales left covectors so <L_a|R_a> = 1.
inline EigensystemInstant biorthonormalize(EigensystemInstant e) {
  for (int a = 0; a < 2; ++a) {
    const cplx o = pair(e.left[a], e.right[a]);
    if (std::abs(o) < 1e-8 * norm2(e.left[a]) * norm2(e.right[a]))
      throw NearEP("left/right overlap vanishes: too close to an exceptional point");
    e.left[a] = {e.left[a][0] / o, e.left[a][1] / o};
  }
  e.biorthonormal = true;
  return e;
}

struct BerryOptions {
  int steps = 8192;
  bool richardson = true;
  /// Record EPs on the path and keep going instead of throwing EPOnPath.
  bool flag_and_continue = false;
  double gap_tolerance = 1e-6;
  double link_tolerance = 1e-8;
};

/// Outcome of one discrete biorthogonal Wilson loop.
struct WilsonLoop {
  std::array<cplx, 2> theta{};
  std::vector<int> skipped_frames;  // EP frames bridged over in flag mode
  bool band_exchange = false;       // bands swap on going once around
  bool gauge_fallback = false;      // no usable anchor component; parallel transport used
  bool certified = true;
};

namespace detail {

inline double normalized_overlap(const CVec2& l, const CVec2& r) {
  return std::abs(pair(l, r)) / (norm2(l) * norm2(r));
}

}  // namespace detail

/**
 * @brief theta_a = i sum_k Log <L_a(s_k)|R_a(s_{k+1})> around the closed loop,
 * with each link symmetrized against its reverse.
 *
 * Bands keep the labels of frames[0] and are followed by maximal normalized
 * overlap. Each band is gauge-fixed to a unit anchor component (component a
 * for band a unless it nearly vanishes on the loop), which makes the result
 * independent of how the input vectors were scaled.
 * Frames with `valid[k] == false` are bridged over.
 */
inline WilsonLoop wilson_loop_phases(const std::vector<EigensystemInstant>& frames, std::vector<bool> valid,
                                     const BerryOptions& opts = {}) {
  const int n = static_cast<int>(frames.size());
  if (n < 3) throw ConfigError("Wilson loop needs at least 3 frames");
  if (valid.empty()) valid.assign(n, true);
  WilsonLoop w;
  std::vector<int> live;
  for (int k = 0; k < n; ++k) {
    if (valid[k])
      live.push_back(k);
    else
      w.skipped_frames.push_back(k);
  }
  if (live.size() < 3) throw EPOnPath("too few regular points on the loop");
  if (!w.skipped_frames.empty()) w.certified = false;

  // Band-tracked vectors, one entry per live frame.
  const std::size_t m = live.size();
  std::array<std::vector<CVec2>, 2> R, L;
  std::array<int, 2> slot{0, 1};
  for (std::size_t i = 0; i < m; ++i) {
    const auto& f = frames[live[i]];
    if (i > 0) {
      const auto& prev = frames[live[i - 1]];
      const double keep = detail::normalized_overlap(prev.left[slot[0]], f.right[0]) *
                          detail::normalized_overlap(prev.left[slot[1]], f.right[1]);
      const double swap = detail::normalized_overlap(prev.left[slot[0]], f.right[1]) *
                          detail::normalized_overlap(prev.left[slot[1]], f.right[0]);
      slot = swap > keep ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1};
    }
    for (int a = 0; a < 2; ++a) {
      R[a].push_back(f.right[slot[a]]);
      L[a].push_back(f.left[slot[a]]);
    }
  }
  // Where does each band land when the loop closes?
  std::array<int, 2> closing{0, 1};
  {
    const auto& first = frames[live[0]];
    const double keep = detail::normalized_overlap(L[0].back(), first.right[0]) *
                        detail::normalized_overlap(L[1].back(), first.right[1]);
    const double swap = detail::normalized_overlap(L[0].back(), first.right[1]) *
                        detail::normalized_overlap(L[1].back(), first.right[0]);
    if (swap > keep) {
      closing = {1, 0};
      w.band_exchange = true;
      w.certified = false;
    }
  }

  for (int a = 0; a < 2; ++a) {
    std::array<double, 2> floor{1.0, 1.0};
    for (std::size_t i = 0; i < m; ++i)
      for (int c = 0; c < 2; ++c) floor[c] = std::min(floor[c], std::abs(R[a][i][c]) / norm2(R[a][i]));
    int anchor = floor[a] >= 1e-3 ? a : (floor[1 - a] >= 1e-3 ? 1 - a : -1);
    if (anchor >= 0) {
      for (std::size_t i = 0; i < m; ++i) {
        const cplx z = R[a][i][anchor];
        R[a][i] = {R[a][i][0] / z, R[a][i][1] / z};
        L[a][i] = {L[a][i][0] * z, L[a][i][1] * z};
      }
    } else {
      // Parallel transport: every forward link real positive, so the whole phase
      // (defined mod 2 pi) lands on the closing link.
      w.gauge_fallback = true;
      for (std::size_t i = 1; i < m; ++i) {
        const cplx o = pair(L[a][i - 1], R[a][i]);
        if (o == cplx{}) continue;
        const cplx z = o / std::abs(o);
        R[a][i] = {R[a][i][0] / z, R[a][i][1] / z};
        L[a][i] = {L[a][i][0] * z, L[a][i][1] * z};
      }
    }
  }
  // Symmetrized links: (Log<L_i|R_{i+1}> - Log<L_{i+1}|R_i>) / 2. The product is still a
  // gauge-invariant Wilson loop; the modulus deficit of each overlap cancels for
  // Hermitian loops and the O(h^2) remainders telescope around the loop.
  // The closing link uses the gauge-fixed frame 0 of whichever band it lands on.
  cplx sum[2] = {0.0, 0.0};
  for (int a = 0; a < 2; ++a) {
    for (std::size_t i = 0; i < m; ++i) {
      const bool last = i + 1 == m;
      const CVec2& r = last ? R[closing[a]][0] : R[a][i + 1];
      const CVec2& l = last ? L[closing[a]][0] : L[a][i + 1];
      const cplx fwd = pair(L[a][i], r);
      const cplx bwd = pair(l, R[a][i]);
      if (std::abs(fwd) < opts.link_tolerance * norm2(L[a][i]) * norm2(r) ||
          std::abs(bwd) < opts.link_tolerance * norm2(l) * norm2(R[a][i])) {
        if (!opts.flag_and_continue) throw EPOnPath("Wilson-loop link vanishes: exceptional point on the loop");
        w.certified = false;
        continue;
      }
      sum[a] += 0.5 * (std::log(fwd) - std::log(bwd));
    }
    w.theta[a] = kI * sum[a];
  }
  return w;
}

struct BerryPhaseResult {
  std::array<cplx, 2> theta{};      // reported value (Richardson-extrapolated when enabled)
  std::array<cplx, 2> theta_raw{};  // at `steps`
  int steps = 0;
  bool richardson = false;
  double step_doubling_delta = 0.0;  // max_a |theta_a(2n) - theta_a(n)|; 0 without Richardson
  std::vector<double> degeneracy_flags;  // loop positions s/T with gap < tolerance
  bool band_exchange = false;
  bool certified = true;
  std::optional<double> half_solid_angle;

  /// "ok" or a '|'-joined subset of {degenerate, band_swap, uncertified}.
  [[nodiscard]] std::string flags_string() const {
    std::string s;
    auto add = [&s](const char* f) { s += s.empty() ? f : std::string("|") + f; };
    if (!degeneracy_flags.empty()) add("degenerate");
    if (band_exchange) add("band_swap");
    if (!certified) add("uncertified");
    return s.empty() ? "ok" : s;
  }
};

/**
 * Half of the signed solid angle enclosed by a closed loop of nonzero vectors,
 * summed over spherical triangles (pivot, v_k, v_{k+1}) with
 * E = 2 atan2(p.(a x b), 1 + p.a + a.b + b.p). The value is defined mod 2 pi;
 * the centroid pivot selects the smaller of the two enclosed regions.
 */
inline double half_solid_angle(const std::vector<RVec3>& loop) {
  if (loop.size() < 3) throw ConfigError("half_solid_angle needs at least 3 points");
  auto dot = [](const RVec3& a, const RVec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
  auto cross = [](const RVec3& a, const RVec3& b) {
    return RVec3{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  };
  std::vector<RVec3> u;
  u.reserve(loop.size());
  for (const auto& v : loop) {
    const double n = std::sqrt(dot(v, v));
    if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("half_solid_angle: zero or non-finite vector");
    u.push_back({v[0] / n, v[1] / n, v[2] / n});
  }
  // A repeated closing point adds nothing, so it is harmless either way.
  const std::size_t n = u.size();
  RVec3 c{0, 0, 0}, w{0, 0, 0};
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = u[k];
    const auto& b = u[(k + 1) % n];
    if (dot(a, b) < -1.0 + 1e-12) throw ConfigError("half_solid_angle: antipodal consecutive points");
    for (int i = 0; i < 3; ++i) c[i] += a[i];
    const auto x = cross(a, b);
    for (int i = 0; i < 3; ++i) w[i] += x[i];
  }
  // Centroid pivot picks the smaller enclosed region; a great circle falls back to the area vector.
  RVec3 p = std::sqrt(dot(c, c)) > 1e-8 * n ? c : w;
  const double pn = std::sqrt(dot(p, p));
  if (!(pn > 0.0)) p = {0.0, 0.0, 1.0};
  else
    for (auto& x : p) x /= pn;
  double omega = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& a = u[k];
    const auto& b = u[(k + 1) % n];
    omega += 2.0 * std::atan2(dot(p, cross(a, b)), 1.0 + dot(p, a) + dot(a, b) + dot(b, p));
  }
  return 0.5 * omega;
}

namespace detail {

inline WilsonLoop berry_loop_at(const ModelSpec& model, int steps, const BerryOptions& opts,
                                std::vector<double>* degenerate) {
  const double T = model.period();
  std::vector<EigensystemInstant> frames(steps);
  std::vector<bool> valid(steps, true);
  for (int k = 0; k < steps; ++k) {
    const double s = static_cast<double>(k) / steps;
    try {
      frames[k] = biorthonormalize(instantaneous_eigensystem(hamiltonian_at(model, s * T)));
      if (frames[k].gap < opts.gap_tolerance && degenerate) degenerate->push_back(s);
    } catch (const NumericalError&) {
      if (!opts.flag_and_continue)
        throw EPOnPath("exceptional point on the Berry loop at s/T = " + std::to_string(s));
      valid[k] = false;
      if (degenerate) degenerate->push_back(s);
    }
  }
  // Band labels at s = 0: descending (Re eps, Im eps).
  if (valid[0]) {
    auto& f = frames[0];
    const auto e0 = f.eigenvalues[0], e1 = f.eigenvalues[1];
    if (e1.real() > e0.real() || (e1.real() == e0.real() && e1.imag() > e0.imag())) {
      std::swap(f.eigenvalues[0], f.eigenvalues[1]);
      std::swap(f.right[0], f.right[1]);
      std::swap(f.left[0], f.left[1]);
    }
  }
  return wilson_loop_phases(frames, valid, opts);
}

}  // namespace detail

/**
 * @brief Complex biorthogonal Berry phase of both instantaneous bands over one period.
 *
 * With Richardson enabled the loop is also evaluated at 2*steps and
 * theta = (4 theta(2n) - theta(n)) / 3.
 */
inline BerryPhaseResult berry_phase_loop(const ModelSpec& model, const BerryOptions& opts = {}) {
  model.validate();
  if (opts.steps < 256) throw ConfigError("berry_phase_loop needs at least 256 steps");
  BerryPhaseResult r;
  r.steps = opts.steps;
  const auto coarse = detail::berry_loop_at(model, opts.steps, opts, &r.degeneracy_flags);
  r.theta_raw = coarse.theta;
  r.theta = coarse.theta;
  r.band_exchange = coarse.band_exchange;
  r.certified = coarse.certified;
  if (opts.richardson) {
    const auto fine = detail::berry_loop_at(model, 2 * opts.steps, opts, nullptr);
    r.richardson = true;
    r.certified = r.certified && fine.certified;
    r.band_exchange = r.band_exchange || fine.band_exchange;
    for (int a = 0; a < 2; ++a) {
      r.theta[a] = (4.0 * fine.theta[a] - coarse.theta[a]) / 3.0;
      r.step_doubling_delta = std::max(r.step_doubling_delta, std::abs(fine.theta[a] - coarse.theta[a]));
    }
  }
  if (model.is_hermitian()) {
    std::vector<RVec3> path;
    const double T = model.period();
    bool usable = true;
    for (int k = 0; k < opts.steps && usable; ++k) {
      const auto a = bloch_decompose(hamiltonian_at(model, T * k / opts.steps)).hermitian_field();
      usable = a[0] != 0.0 || a[1] != 0.0 || a[2] != 0.0;
      path.push_back(a);
    }
    if (usable) {
      try {
        r.half_solid_angle = half_solid_angle(path);
      } catch (const ConfigError&) {
      }
    }
  }
  return r;
}

enum class SpectrumRegion { AllReal, SomeComplex, AllImaginaryWindow, Mixed };

inline const char* to_string(SpectrumRegion r) {
  switch (r) {
    case SpectrumRegion::AllReal: return "AllReal";
    case SpectrumRegion::SomeComplex: return "SomeComplex";
    case SpectrumRegion::AllImaginaryWindow: return "AllImaginaryWindow";
    case SpectrumRegion::Mixed: return "Mixed";
  }
  return "AllReal";
}

/**
 * Class of the instantaneous spectrum eps(s) = d0 +- sqrt(d.d) over one period.
 * A sample is real when |Im| < tol or d.d vanishes to rounding, purely
 * imaginary when |Re| < tol instead, otherwise generic complex.
 * AllReal: every sample real. AllImaginaryWindow: every sample purely imaginary.
 * Mixed: real and purely imaginary windows alternate. SomeComplex: at least one
 * generic complex sample.
 */
inline SpectrumRegion classify_instantaneous_spectrum(const ModelSpec& model, int samples, double tol = 1e-10) {
  if (samples < 64) throw ConfigError("spectrum scan needs at least 64 samples per period");
  const double T = model.period();
  bool real = false, imaginary = false, complex = false;
  for (int k = 0; k < samples; ++k) {
    const auto b = bloch_decompose(hamiltonian_at(model, T * k / samples));
    const cplx dd = bilinear_square(b.d);
    const cplx mu = std::sqrt(dd);
    const double scale = euclidean_norm(b.d);
    // d.d at rounding level is an exceptional point: eps = d0, real.
    if (std::abs(mu.imag()) < tol || std::abs(dd) <= 1e-12 * scale * scale)
      real = true;
    else if (std::abs(mu.real()) < tol)
      imaginary = true;
    else
      complex = true;
  }
  if (complex) return SpectrumRegion::SomeComplex;
  if (imaginary) return real ? SpectrumRegion::Mixed : SpectrumRegion::AllImaginaryWindow;
  return SpectrumRegion::AllReal;
}

struct SpectrumRegionScan {
  std::vector<double> gammas;
  std::vector<SpectrumRegion> regions;
  std::vector<double> thresholds;  // gamma_c, located by bisection
};

/**
 * Classifies the instantaneous spectrum at `count` evenly spaced gammas and
 * bisects every class change to within `bisect_tol`. omega only sets the
 * period, so any positive value gives the same classification.
 */
inline SpectrumRegionScan spectrum_region_scan(const ModelTemplate& tmpl, double gamma_min, double gamma_max,
                                               int count, int samples = 1024, double bisect_tol = 1e-9) {
  if (count < 2 || !(gamma_max > gamma_min)) throw ConfigError("spectrum scan needs a non-degenerate gamma range");
  SpectrumRegionScan out;
  auto region = [&](double g) { return classify_instantaneous_spectrum(tmpl.at(g, 1.0), samples); };
  for (int i = 0; i < count; ++i) {
    const double g = gamma_min + (gamma_max - gamma_min) * i / (count - 1);
    out.gammas.push_back(g);
    out.regions.push_back(region(g));
  }
  for (int i = 0; i + 1 < count; ++i) {
    if (out.regions[i] == out.regions[i + 1]) continue;
    double lo = out.gammas[i], hi = out.gammas[i + 1];
    const auto left = out.regions[i];
    while (hi - lo > bisect_tol) {
      const double mid = 0.5 * (lo + hi);
      (region(mid) == left ? lo : hi) = mid;
    }
    out.thresholds.push_back(0.5 * (lo + hi));
  }
  return out;
}

}  // namespace floquet_ep
