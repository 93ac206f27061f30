#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "floquet_ep/complex2x2.hpp"
#include "floquet_ep/errors.hpp"
#include "floquet_ep/model.hpp"

namespace floquet_ep {

/// Harmonic index k -> H^(k) = (1/T) int_0^T H(t) e^{-i k w t} dt.
using FourierComponents = std::map<int, Complex2x2>;

/**
 * Exact Fourier coefficients of a smooth-family model:
 * a cos(m w t) M -> (a/2) M at k = +-m; a sin(m w t) M -> +-(a/2i) M at k = +-m.
 */
inline FourierComponents fourier_components(const ModelSpec& model) {
  model.validate();
  if (model.has_square_terms())
    throw ConfigError("fourier_components requires a smooth-family model; use the monodromy engine");
  FourierComponents out;
  auto add = [&out](int k, const Complex2x2& m) {
    auto [it, inserted] = out.try_emplace(k, m);
    if (!inserted) it->second += m;
  };
  for (const auto& d : model.terms) {
    const Complex2x2 c = d.coefficient_matrix();
    switch (d.waveform) {
      case Waveform::Constant:
        add(0, c);
        break;
      case Waveform::Cos:
        add(d.multiplier, 0.5 * c);
        add(-d.multiplier, 0.5 * c);
        break;
      case Waveform::Sin:
        add(d.multiplier, cplx{0.0, -0.5} * c);  // 1/(2i)
        add(-d.multiplier, cplx{0.0, 0.5} * c);
        break;
      default:
        break;
    }
  }
  return out;
}

struct FloquetMatrix {
  int cutoff = 0;
  double base_omega = 0.0;
  Eigen::MatrixXcd matrix;

  [[nodiscard]] Eigen::Index dim() const { return matrix.rows(); }
};

/**
 * @brief Truncated frequency-space H_F = H(t) - i d/dt on harmonics -N..N.
 *
 * Harmonic m occupies rows 2(m+N), 2(m+N)+1. Block (m,n) = H^(m-n) + m w I delta_mn,
 * so for N = 20 the matrix is 82 x 82.
 */
inline FloquetMatrix build_floquet_matrix(const ModelSpec& model, int N) {
  const auto comps = fourier_components(model);
  if (N < std::max(1, model.max_multiplier()))
    throw ConfigError("Floquet cutoff " + std::to_string(N) + " is below the largest drive multiplier");
  FloquetMatrix f;
  f.cutoff = N;
  f.base_omega = model.base_omega;
  const Eigen::Index dim = 2 * (2 * N + 1);
  f.matrix = Eigen::MatrixXcd::Zero(dim, dim);
  for (int m = -N; m <= N; ++m) {
    const Eigen::Index r = 2 * (m + N);
    for (const auto& [k, h] : comps) {
      const int n = m - k;
      if (n < -N || n > N) continue;
      const Eigen::Index c = 2 * (n + N);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) f.matrix(r + i, c + j) += h(i, j);
    }
    f.matrix(r, r) += m * model.base_omega;
    f.matrix(r + 1, r + 1) += m * model.base_omega;
  }
  return f;
}

/// All eigenvalues by Hessenberg reduction and shifted QR (complex Schur form).
inline std::vector<cplx> complex_eigenvalues(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) throw ConfigError("complex_eigenvalues needs a square matrix");
  if (!m.allFinite()) throw NumericalError("complex_eigenvalues: non-finite matrix entries");
  if (m.rows() == 0) return {};
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver;
  solver.setMaxIterations(30 * static_cast<Eigen::Index>(m.rows()));
  solver.compute(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw NumericalError("complex_eigenvalues: QR iteration did not converge within 30*dim iterations");
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// One folded band: every surviving ladder rung that maps onto the same quasienergy.
struct FoldedBand {
  cplx epsilon;    // representative from the rung closest to the centre of the ladder
  int members = 0;
  double spread = 0.0;  // max distance of a member from the representative
};

struct QuasienergySpectrum {
  std::vector<cplx> folded;      // every central-third eigenvalue, folded
  std::vector<FoldedBand> bands; // at most two clusters, largest first
  double ladder_residual = 0.0;
  double max_im = 0.0;
  double omega = 0.0;
};

namespace detail {

// Rung index n such that e - n w has real part in (-w/2, w/2].
inline int ladder_index(cplx e, double omega) {
  return static_cast<int>(std::ceil((e.real() - 0.5 * omega) / omega));
}

// Real-part distance on the circle of circumference w.
inline double zone_distance(double a, double b, double omega) {
  const double d = std::fmod(std::abs(a - b), omega);
  return std::min(d, omega - d);
}

}  // namespace detail

/**
 * Folds eigenvalues into (-w/2, w/2], keeps rungs with |n| <= N/3, and clusters
 * them (1e-4 w in Re and Im jointly). Clusters are ranked by size, then by
 * smaller |Im|; the first two are the bands.
 */
inline QuasienergySpectrum fold_spectrum(const std::vector<cplx>& eigs, double omega, int N) {
  if (!(omega > 0.0)) throw ConfigError("fold_spectrum: omega must be positive");
  struct Item {
    cplx e;
    int n;
  };
  std::vector<Item> kept;
  for (const cplx& e : eigs) {
    const int n = detail::ladder_index(e, omega);
    if (3 * std::abs(n) > N) continue;
    kept.push_back({e - static_cast<double>(n) * omega, n});
  }
  if (kept.size() < 2)
    throw NumericalError("fold_spectrum: fewer than 2 eigenvalues survive central-third filtering");
  std::sort(kept.begin(), kept.end(), [](const Item& a, const Item& b) {
    if (a.e.real() != b.e.real()) return a.e.real() < b.e.real();
    if (a.e.imag() != b.e.imag()) return a.e.imag() < b.e.imag();
    return a.n < b.n;
  });

  const double tol = 1e-4 * omega;
  struct Cluster {
    std::vector<Item> items;
  };
  std::vector<Cluster> clusters;
  for (const auto& it : kept) {
    Cluster* home = nullptr;
    for (auto& c : clusters) {
      const bool near = std::any_of(c.items.begin(), c.items.end(), [&](const Item& o) {
        return detail::zone_distance(o.e.real(), it.e.real(), omega) < tol &&
               std::abs(o.e.imag() - it.e.imag()) < tol;
      });
      if (near) {
        home = &c;
        break;
      }
    }
    if (home)
      home->items.push_back(it);
    else
      clusters.push_back({{it}});
  }

  QuasienergySpectrum s;
  s.omega = omega;
  for (const auto& it : kept) {
    s.folded.push_back(it.e);
    s.max_im = std::max(s.max_im, std::abs(it.e.imag()));
  }
  std::vector<FoldedBand> bands;
  for (const auto& c : clusters) {
    const auto rep = std::min_element(c.items.begin(), c.items.end(), [](const Item& a, const Item& b) {
      if (std::abs(a.n) != std::abs(b.n)) return std::abs(a.n) < std::abs(b.n);
      return a.n > b.n;
    });
    FoldedBand b{rep->e, static_cast<int>(c.items.size()), 0.0};
    for (const auto& it : c.items) {
      const double dr = detail::zone_distance(it.e.real(), rep->e.real(), omega);
      b.spread = std::max(b.spread, std::hypot(dr, it.e.imag() - rep->e.imag()));
    }
    bands.push_back(b);
  }
  std::stable_sort(bands.begin(), bands.end(), [](const FoldedBand& a, const FoldedBand& b) {
    if (a.members != b.members) return a.members > b.members;
    return std::abs(a.epsilon.imag()) < std::abs(b.epsilon.imag());
  });
  if (bands.size() > 2) bands.resize(2);
  for (const auto& b : bands) s.ladder_residual = std::max(s.ladder_residual, b.spread);
  s.bands = std::move(bands);
  return s;
}

/// Hermitian H_F (Hermitian model) goes through the self-adjoint solver, so its spectrum is exactly real.
inline QuasienergySpectrum floquet_spectrum(const ModelSpec& model, int N) {
  const auto f = build_floquet_matrix(model, N);
  std::vector<cplx> eigs;
  if (model.is_hermitian()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(f.matrix, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) eigs.emplace_back(solver.eigenvalues()[i], 0.0);
  } else {
    eigs = complex_eigenvalues(f.matrix);
  }
  return fold_spectrum(eigs, model.base_omega, N);
}

/// Largest |Im eps| of the folded central-third spectrum.
inline double max_im_quasienergy(const ModelSpec& model, int N = 20) {
  return floquet_spectrum(model, N).max_im;
}

struct ConvergenceReport {
  bool converged = false;
  double delta = 0.0;
  double max_im_n = 0.0;
  double max_im_2n = 0.0;
};

/// Compares cutoff N against 2N; converged when |max_im(N) - max_im(2N)| < tolerance.
inline ConvergenceReport convergence_check(const ModelSpec& model, int N, double tolerance = 1e-6) {
  ConvergenceReport r;
  r.max_im_n = max_im_quasienergy(model, N);
  r.max_im_2n = max_im_quasienergy(model, 2 * N);
  r.delta = std::abs(r.max_im_n - r.max_im_2n);
  r.converged = r.delta < tolerance;
  return r;
}

}  // namespace floquet_ep
