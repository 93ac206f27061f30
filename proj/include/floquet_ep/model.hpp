#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "floquet_ep/complex2x2.hpp"
#include "floquet_ep/errors.hpp"

namespace floquet_ep {

enum class Axis { X, Y, Z };
enum class Waveform { Constant, Cos, Sin, SquareCos, SquareSin };
enum class Hermiticity { Hermitian, AntiHermitian };
enum class WaveformFamily { Smooth, Square };

inline const char* to_string(WaveformFamily f) { return f == WaveformFamily::Square ? "square" : "smooth"; }

inline WaveformFamily parse_family(std::string_view s) {
  if (s == "square") return WaveformFamily::Square;
  if (s == "smooth") return WaveformFamily::Smooth;
  throw ConfigError("unknown waveform family: " + std::string(s));
}

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Complex2x2 pauli(Axis axis) {
  switch (axis) {
    case Axis::X: return Complex2x2::pauli_x();
    case Axis::Y: return Complex2x2::pauli_y();
    case Axis::Z: return Complex2x2::pauli_z();
  }
  return {};
}

// Square waves take the right-limit value exactly at a zero crossing.
inline double square_cos(double phase) {
  const double c = std::cos(phase);
  if (c != 0.0) return c > 0.0 ? 1.0 : -1.0;
  return -std::sin(phase) > 0.0 ? 1.0 : -1.0;
}

inline double square_sin(double phase) {
  const double s = std::sin(phase);
  if (s != 0.0) return s > 0.0 ? 1.0 : -1.0;
  return std::cos(phase) > 0.0 ? 1.0 : -1.0;
}

inline double waveform_value(Waveform w, double phase) {
  switch (w) {
    case Waveform::Constant: return 1.0;
    case Waveform::Cos: return std::cos(phase);
    case Waveform::Sin: return std::sin(phase);
    case Waveform::SquareCos: return square_cos(phase);
    case Waveform::SquareSin: return square_sin(phase);
  }
  return 0.0;
}

inline bool is_square(Waveform w) { return w == Waveform::SquareCos || w == Waveform::SquareSin; }
inline bool is_smooth(Waveform w) { return w == Waveform::Cos || w == Waveform::Sin; }

/**
 * @brief One term amplitude * f(multiplier * omega * t) * P, where P is the
 * Pauli matrix on `axis` (Hermitian) or i times it (anti-Hermitian).
 */
struct DriveTerm {
  Axis axis = Axis::X;
  double amplitude = 0.0;
  Waveform waveform = Waveform::Constant;
  int multiplier = 1;
  Hermiticity hermiticity = Hermiticity::Hermitian;

  /// amplitude times the Pauli matrix (or i times it); the time-independent factor.
  [[nodiscard]] Complex2x2 coefficient_matrix() const {
    const cplx scale = hermiticity == Hermiticity::Hermitian ? cplx{amplitude, 0.0}
                                                             : cplx{0.0, amplitude};
    return scale * pauli(axis);
  }

  [[nodiscard]] double value(double omega, double t) const {
    return waveform_value(waveform, multiplier * omega * t);
  }
};

struct ModelSpec {
  std::vector<DriveTerm> terms;
  double base_omega = 1.0;
  std::string label;

  [[nodiscard]] double period() const { return kTwoPi / base_omega; }

  [[nodiscard]] bool has_square_terms() const {
    return std::any_of(terms.begin(), terms.end(), [](const DriveTerm& d) { return is_square(d.waveform); });
  }
  [[nodiscard]] bool has_smooth_terms() const {
    return std::any_of(terms.begin(), terms.end(), [](const DriveTerm& d) { return is_smooth(d.waveform); });
  }
  /// True when every anti-Hermitian term has zero amplitude.
  [[nodiscard]] bool is_hermitian() const {
    return std::all_of(terms.begin(), terms.end(), [](const DriveTerm& d) {
      return d.hermiticity == Hermiticity::Hermitian || d.amplitude == 0.0;
    });
  }
  [[nodiscard]] int max_multiplier() const {
    int m = 0;
    for (const auto& d : terms)
      if (d.waveform != Waveform::Constant) m = std::max(m, d.multiplier);
    return m;
  }
  /// Least common multiple of the multipliers of all time-dependent terms (1 if static).
  [[nodiscard]] int multiplier_lcm() const {
    int l = 1;
    for (const auto& d : terms)
      if (d.waveform != Waveform::Constant) l = std::lcm(l, d.multiplier);
    return l;
  }

  void validate() const {
    if (!(base_omega > 0.0) || !std::isfinite(base_omega))
      throw ConfigError("base_omega must be positive and finite");
    for (const auto& d : terms) {
      if (d.multiplier < 1) throw ConfigError("drive multiplier must be >= 1");
      if (!std::isfinite(d.amplitude)) throw ConfigError("drive amplitude must be finite");
    }
  }
};

inline Complex2x2 hamiltonian_at(const ModelSpec& model, double t) {
  Complex2x2 h{};
  for (const auto& term : model.terms) {
    const double f = term.value(model.base_omega, t);
    if (f == 0.0 || term.amplitude == 0.0) continue;
    h += term.coefficient_matrix() * cplx{f, 0.0};
  }
  return h;
}

/// Parameters shared by all presets. J sets the energy scale of the static term.
struct ModelParams {
  double J = 1.0;
  double gamma = 0.0;
  double omega = 1.0;
  int beta = 1;
  WaveformFamily family = WaveformFamily::Smooth;
};

inline constexpr std::array<std::string_view, 5> kPresetNames = {
    "pt-cosy-cosz", "pt-cosy-sinz", "apt-cosx-cosy", "apt-cosx-siny", "hermitian-cosx-siny"};

inline bool is_known_preset(std::string_view name) {
  return std::find(kPresetNames.begin(), kPresetNames.end(), name) != kPresetNames.end();
}

/**
 * @brief Builds one of the named two-level models.
 *
 * - pt-cosy-cosz:        J X + g [cos(wt) Y - i cos(b w t) Z]
 * - pt-cosy-sinz:        J X + g [cos(wt) Y + i sin(b w t) Z]
 * - apt-cosx-cosy:       i g [cos(wt) X + cos(b w t) Y] + J Z
 * - apt-cosx-siny:       i g [cos(wt) X + sin(b w t) Y] + J Z
 * - hermitian-cosx-siny: g [cos(wt) X + sin(b w t) Y] + J Z  (Hermitian reference loop)
 *
 * The square family replaces each sinusoid by its sign.
 */
inline ModelSpec preset(std::string_view name, const ModelParams& p) {
  if (p.beta < 1) throw ConfigError("beta must be an integer >= 1");
  if (!(p.omega > 0.0) || !std::isfinite(p.omega)) throw ConfigError("omega must be positive");
  if (!std::isfinite(p.gamma) || !std::isfinite(p.J)) throw ConfigError("J and gamma must be finite");

  const bool sq = p.family == WaveformFamily::Square;
  const Waveform cosw = sq ? Waveform::SquareCos : Waveform::Cos;
  const Waveform sinw = sq ? Waveform::SquareSin : Waveform::Sin;
  constexpr auto H = Hermiticity::Hermitian;
  constexpr auto A = Hermiticity::AntiHermitian;

  ModelSpec m;
  m.base_omega = p.omega;
  m.label = std::string(name);
  if (name == "pt-cosy-cosz") {
    m.terms = {{Axis::X, p.J, Waveform::Constant, 1, H},
               {Axis::Y, p.gamma, cosw, 1, H},
               {Axis::Z, -p.gamma, cosw, p.beta, A}};
  } else if (name == "pt-cosy-sinz") {
    m.terms = {{Axis::X, p.J, Waveform::Constant, 1, H},
               {Axis::Y, p.gamma, cosw, 1, H},
               {Axis::Z, p.gamma, sinw, p.beta, A}};
  } else if (name == "apt-cosx-cosy") {
    m.terms = {{Axis::X, p.gamma, cosw, 1, A},
               {Axis::Y, p.gamma, cosw, p.beta, A},
               {Axis::Z, p.J, Waveform::Constant, 1, H}};
  } else if (name == "apt-cosx-siny") {
    m.terms = {{Axis::X, p.gamma, cosw, 1, A},
               {Axis::Y, p.gamma, sinw, p.beta, A},
               {Axis::Z, p.J, Waveform::Constant, 1, H}};
  } else if (name == "hermitian-cosx-siny") {
    m.terms = {{Axis::X, p.gamma, cosw, 1, H},
               {Axis::Y, p.gamma, sinw, p.beta, H},
               {Axis::Z, p.J, Waveform::Constant, 1, H}};
  } else {
    throw ConfigError("unknown preset: " + std::string(name));
  }
  return m;
}

/// A preset with fixed J, beta and family; gamma and omega are filled in per evaluation.
struct ModelTemplate {
  std::string name = "pt-cosy-cosz";
  double J = 1.0;
  int beta = 1;
  WaveformFamily family = WaveformFamily::Square;

  [[nodiscard]] ModelSpec at(double gamma, double omega) const {
    return preset(name, {J, gamma, omega, beta, family});
  }
  void validate() const { (void)at(0.0, 1.0); }
};

/// max over sampled t in [0, T) of |A(t).B(t)|, where H = A.sigma + i B.sigma.
inline double orthogonality_check(const ModelSpec& model, int samples) {
  if (samples < 2) throw ConfigError("orthogonality_check needs at least 2 samples");
  const double period = model.period();
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const auto b = bloch_decompose(hamiltonian_at(model, period * k / samples));
    const auto A = b.hermitian_field();
    const auto B = b.anti_hermitian_field();
    worst = std::max(worst, std::abs(A[0] * B[0] + A[1] * B[1] + A[2] * B[2]));
  }
  return worst;
}

}  // namespace floquet_ep
