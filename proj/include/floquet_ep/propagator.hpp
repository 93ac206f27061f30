#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "floquet_ep/complex2x2.hpp"
#include "floquet_ep/errors.hpp"
#include "floquet_ep/model.hpp"

namespace floquet_ep {

/**
 * @brief exp(-i H tau) for a 2x2 matrix in closed form.
 *
 * With H = d0 I + d.sigma and z^2 = (d.d) tau^2 the propagator is
 * e^{-i d0 tau} [cos z I - i tau sinc(z) d.sigma]. Both cos and sinc are even
 * in z so the square-root branch never matters; below |z| = 1e-4 they are
 * evaluated by their Taylor series, which keeps the nilpotent limit
 * (d.d = 0, H defective) exact.
 */
inline Complex2x2 expm_two_level(const Complex2x2& h, double tau) {
  const auto b = bloch_decompose(h);
  const cplx z2 = bilinear_square(b.d) * (tau * tau);
  cplx cz;
  cplx sinc;
  if (std::abs(z2) < 1e-8) {
    const cplx z4 = z2 * z2;
    cz = 1.0 - z2 / 2.0 + z4 / 24.0 - z4 * z2 / 720.0 + z4 * z4 / 40320.0;
    sinc = 1.0 - z2 / 6.0 + z4 / 120.0 - z4 * z2 / 5040.0 + z4 * z4 / 362880.0;
  } else {
    const cplx z = std::sqrt(z2);
    cz = std::cos(z);
    sinc = std::sin(z) / z;
  }
  Complex2x2 u = pauli_combination(b.d) * (-kI * tau * sinc);
  u(0, 0) += cz;
  u(1, 1) += cz;
  if (b.d0 != cplx{}) u *= std::exp(-kI * b.d0 * tau);
  return u;
}

struct Segment {
  Complex2x2 hamiltonian;
  double duration = 0.0;
};

/// Piecewise-constant Hamiltonian over one period; segments are applied in order.
struct SegmentSequence {
  std::vector<Segment> segments;
  double period = 0.0;
};

/**
 * Splits a square-family model into 4 * lcm(multipliers) equal segments. Each
 * segment's Hamiltonian is the model sampled at the segment midpoint, which
 * reproduces the +-1 sign patterns of the step drives (4*beta segments for
 * every preset).
 */
inline SegmentSequence segment_hamiltonians(const ModelSpec& model) {
  model.validate();
  if (model.has_smooth_terms())
    throw ConfigError("segment_hamiltonians requires a square-family model");
  const int count = 4 * model.multiplier_lcm();
  const double period = model.period();
  const double tau = period / count;
  SegmentSequence seq;
  seq.period = period;
  seq.segments.reserve(count);
  for (int l = 0; l < count; ++l)
    seq.segments.push_back({hamiltonian_at(model, (l + 0.5) * tau), tau});
  return seq;
}

enum class Engine { Piecewise, Integrate };

struct MonodromyOptions {
  Engine engine = Engine::Piecewise;
  /// RK4 steps per period for the integrate engine.
  int integrate_steps = 200000;
};

/**
 * @brief One-period propagator G(T) and the quasienergy it encodes.
 *
 * G is stored as exp(log_scale) * G_scaled so that strongly unstable points
 * never overflow; half_trace and defectiveness are unscaled and may be inf.
 */
struct MonodromyResult {
  Complex2x2 G_scaled;
  double log_scale = 0.0;
  double period = 0.0;
  cplx half_trace;       // c = tr G / 2
  cplx eps_F;            // Im >= 0, Re folded to (-w/2, w/2]
  CVec3 n_F{};           // zero when sin(eps_F T) vanishes
  double max_im_eps = 0.0;
  double defectiveness = 0.0;  // ||G - c I||_F

  [[nodiscard]] Complex2x2 G() const { return G_scaled * cplx{std::exp(log_scale), 0.0}; }
};

/// eps = arccos(c)/T on the principal branch, then the band sign with Im >= 0.
inline cplx quasienergy_from_trace(cplx c, double period) {
  if (!(period > 0.0)) throw ConfigError("period must be positive");
  cplx w = std::acos(c);
  if (w.imag() < 0.0) w = -w;
  if (w.real() <= -std::numbers::pi) w += kTwoPi;
  return w / period;
}

namespace detail {

// Rescales only once entries grow large, so ordinary propagators stay unscaled.
inline void renormalize(Complex2x2& g, double& log_scale) {
  const double m = g.max_abs();
  if (m > 1e32 && std::isfinite(m)) {
    g *= cplx{1.0 / m, 0.0};
    log_scale += std::log(m);
  }
}

// Fills the derived fields of `r` from G_scaled and log_scale.
inline void analyse_monodromy(MonodromyResult& r, bool hermitian) {
  const Complex2x2& g = r.G_scaled;
  const double T = r.period;
  const double scale = std::exp(r.log_scale);
  const cplx c_s = 0.5 * g.trace();
  const cplx half_diff = 0.5 * (g(0, 0) - g(1, 1));
  // Eigenvalues from the discriminant built out of the traceless part, which
  // stays accurate when G is close to a multiple of the identity.
  const cplx root = std::sqrt(half_diff * half_diff + g(0, 1) * g(1, 0));
  cplx big = c_s + root;
  cplx small = c_s - root;
  if (std::abs(small) > std::abs(big)) std::swap(big, small);
  const double mb = std::abs(big);
  if (mb > 0.0) small = g.det() / big;
  const double ms = std::abs(small);
  if (std::abs(mb - ms) <= 1e-12 * mb && std::arg(big) > 0.0) std::swap(big, small);

  cplx eps{-std::arg(big) / T, (std::log(std::abs(big)) + r.log_scale) / T};
  if (hermitian) eps.imag(0.0);
  const double half_zone = std::numbers::pi / T;
  if (eps.real() <= -half_zone) eps.real(eps.real() + 2.0 * half_zone);
  r.eps_F = eps;
  r.max_im_eps = std::abs(eps.imag());
  r.half_trace = c_s * scale;

  Complex2x2 traceless = g;
  traceless(0, 0) -= c_s;
  traceless(1, 1) -= c_s;
  r.defectiveness = traceless.frobenius_norm() * scale;

  const cplx split = big - small;
  if (std::abs(split) > 1e-12 * std::max(1.0, mb)) {
    const auto v = bloch_decompose(g).d;
    for (int k = 0; k < 3; ++k) r.n_F[k] = 2.0 * v[k] / split;
  } else {
    r.n_F = {};
  }
}

inline void check_finite(const Complex2x2& g, int segment) {
  if (!g.is_finite())
    throw NumericalError("non-finite propagator in segment " + std::to_string(segment), segment);
}

inline Complex2x2 rk4_step(const Complex2x2& g, const Complex2x2& h0, const Complex2x2& hm,
                           const Complex2x2& h1, double h) {
  const cplx mi{0.0, -1.0};
  const Complex2x2 k1 = mi * (h0 * g);
  const Complex2x2 k2 = mi * (hm * (g + (0.5 * h) * k1));
  const Complex2x2 k3 = mi * (hm * (g + (0.5 * h) * k2));
  const Complex2x2 k4 = mi * (h1 * (g + h * k3));
  return g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void integrate_constant(Complex2x2& g, double& log_scale, const Complex2x2& h, double duration,
                               int steps, int segment) {
  const double dt = duration / steps;
  for (int k = 0; k < steps; ++k) {
    g = rk4_step(g, h, h, h, dt);
    if ((k & 63) == 63) renormalize(g, log_scale);
  }
  check_finite(g, segment);
  renormalize(g, log_scale);
}

inline void integrate_smooth(Complex2x2& g, double& log_scale, const ModelSpec& model, int steps) {
  const double dt = model.period() / steps;
  Complex2x2 h0 = hamiltonian_at(model, 0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Complex2x2 hm = hamiltonian_at(model, t + 0.5 * dt);
    const Complex2x2 h1 = hamiltonian_at(model, (k + 1) * dt);
    g = rk4_step(g, h0, hm, h1, dt);
    h0 = h1;
    if ((k & 63) == 63) {
      check_finite(g, k);
      renormalize(g, log_scale);
    }
  }
  check_finite(g, steps - 1);
  renormalize(g, log_scale);
}

}  // namespace detail

/**
 * @brief Monodromy matrix G(T) = T exp(-i int_0^T H dt).
 *
 * Piecewise: ordered product of closed-form segment exponentials, later
 * segments on the left. Integrate: fixed-step RK4 on G' = -i H G; square
 * models are integrated segment by segment so no step straddles a jump.
 */
inline MonodromyResult monodromy(const ModelSpec& model, const MonodromyOptions& opts = {}) {
  model.validate();
  MonodromyResult r;
  r.period = model.period();
  Complex2x2 g = Complex2x2::identity();
  double log_scale = 0.0;
  const bool square = model.has_square_terms();

  if (opts.engine == Engine::Piecewise) {
    const auto seq = segment_hamiltonians(model);
    for (std::size_t l = 0; l < seq.segments.size(); ++l) {
      const auto& s = seq.segments[l];
      const Complex2x2 u = expm_two_level(s.hamiltonian, s.duration);
      detail::check_finite(u, static_cast<int>(l));
      g = u * g;
      detail::check_finite(g, static_cast<int>(l));
      detail::renormalize(g, log_scale);
    }
  } else {
    if (opts.integrate_steps < 1) throw ConfigError("integrate_steps must be positive");
    if (square) {
      if (model.has_smooth_terms())
        throw ConfigError("integrate engine cannot mix square and smooth waveforms");
      const auto seq = segment_hamiltonians(model);
      const int n = static_cast<int>(seq.segments.size());
      const int per_segment = std::max(1, (opts.integrate_steps + n - 1) / n);
      for (int l = 0; l < n; ++l)
        detail::integrate_constant(g, log_scale, seq.segments[l].hamiltonian, seq.segments[l].duration,
                                   per_segment, l);
    } else {
      detail::integrate_smooth(g, log_scale, model, opts.integrate_steps);
    }
  }
  r.G_scaled = g;
  r.log_scale = log_scale;
  detail::analyse_monodromy(r, model.is_hermitian());
  return r;
}

enum class DegeneracyKind { EP, Diabolic, None };

inline const char* to_string(DegeneracyKind k) {
  switch (k) {
    case DegeneracyKind::EP: return "EP";
    case DegeneracyKind::Diabolic: return "Diabolic";
    case DegeneracyKind::None: return "None";
  }
  return "None";
}

struct EPIndicator {
  double f = 0.0;
  DegeneracyKind kind = DegeneracyKind::None;
};

struct EPOptions {
  /// |f| below this counts as sitting on a root.
  double root_tolerance = 1e-6;
  /// ||G - cI||_F above this marks a root as an exceptional point.
  double defect_threshold = 1e-6;
};

/**
 * f = |Re c| - 1 while c is real (|Im c| < 1e-9), otherwise |Im c|. f <= 0 is
 * the stable side; roots of f are exceptional or diabolic points.
 */
inline EPIndicator ep_indicator(const MonodromyResult& r, const EPOptions& opts = {}) {
  const cplx c = r.half_trace;
  EPIndicator out;
  if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
    out.f = std::numeric_limits<double>::infinity();
    return out;
  }
  out.f = std::abs(c.imag()) < 1e-9 ? std::abs(c.real()) - 1.0 : std::abs(c.imag());
  if (std::abs(out.f) < opts.root_tolerance)
    out.kind = r.defectiveness > opts.defect_threshold ? DegeneracyKind::EP : DegeneracyKind::Diabolic;
  return out;
}

}  // namespace floquet_ep
