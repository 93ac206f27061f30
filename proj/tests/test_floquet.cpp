#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "floquet_ep/floquet.hpp"
#include "floquet_ep/propagator.hpp"

using namespace floquet_ep;

namespace {

ModelSpec smooth(const char* name, double gamma, double omega, int beta = 3) {
  return preset(name, {1.0, gamma, omega, beta, WaveformFamily::Smooth});
}

Eigen::MatrixXcd random_matrix(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

// Largest distance from any element of `a` to its greedily matched partner in `b`.
double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
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

std::vector<cplx> conjugated(std::vector<cplx> v) {
  for (auto& z : v) z = std::conj(z);
  return v;
}

}  // namespace

TEST(FourierComponents, CosYHalfAmplitude) {
  ModelSpec m;
  m.terms = {{Axis::Y, 0.7, Waveform::Cos, 1, Hermiticity::Hermitian}};
  const auto c = fourier_components(m);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at(1), 0.35 * Complex2x2::pauli_y());
  EXPECT_EQ(c.at(-1), 0.35 * Complex2x2::pauli_y());
}

TEST(FourierComponents, PtAntiHermitianZTerm) {
  const double g = 0.4;
  const auto c = fourier_components(smooth("pt-cosy-cosz", g, 1.0));
  const Complex2x2 expect = cplx(0.0, -g / 2) * Complex2x2::pauli_z();
  EXPECT_EQ(c.at(3), expect);
  EXPECT_EQ(c.at(-3), expect);
  EXPECT_EQ(c.at(0), Complex2x2::pauli_x());
}

TEST(FourierComponents, AntiHermitianSinY) {
  const double g = 0.6;
  ModelSpec m;
  m.terms = {{Axis::Y, g, Waveform::Sin, 3, Hermiticity::AntiHermitian}};
  const auto c = fourier_components(m);
  EXPECT_LT(max_abs_diff(c.at(3), (g / 2) * Complex2x2::pauli_y()), 1e-16);
  EXPECT_LT(max_abs_diff(c.at(-3), (-g / 2) * Complex2x2::pauli_y()), 1e-16);
}

TEST(FourierComponents, RejectsSquareFamily) {
  EXPECT_THROW(fourier_components(preset("pt-cosy-cosz", {1, 0.3, 1, 3, WaveformFamily::Square})), ConfigError);
}

TEST(FloquetMatrix, PaperSizeAndCutoffGuard) {
  EXPECT_EQ(build_floquet_matrix(smooth("pt-cosy-cosz", 0.3, 1.0), 20).dim(), 82);
  EXPECT_THROW(build_floquet_matrix(smooth("pt-cosy-cosz", 0.3, 1.0), 2), ConfigError);
}

TEST(FloquetMatrix, OffDiagonalPartIsBlockToeplitz) {
  const int N = 6;
  const double w = 0.9;
  const auto m = smooth("apt-cosx-siny", 0.8, w);
  const auto f = build_floquet_matrix(m, N);
  const auto comps = fourier_components(m);
  for (int r = -N; r <= N; ++r)
    for (int c = -N; c <= N; ++c) {
      Eigen::Matrix2cd expect = Eigen::Matrix2cd::Zero();
      if (auto it = comps.find(r - c); it != comps.end())
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) expect(i, j) = it->second(i, j);
      if (r == c) expect += r * w * Eigen::Matrix2cd::Identity();
      EXPECT_EQ((f.matrix.block<2, 2>(2 * (r + N), 2 * (c + N)) - expect).norm(), 0.0) << r << "," << c;
    }
}

TEST(FloquetMatrix, HermitianLimitIsBlockDiagonalLadder) {
  const double w = 0.8;
  const auto f = build_floquet_matrix(smooth("pt-cosy-cosz", 0.0, w), 5);
  auto eigs = complex_eigenvalues(f.matrix);
  std::vector<cplx> expect;
  for (int n = -5; n <= 5; ++n) {
    expect.emplace_back(1.0 + n * w, 0.0);
    expect.emplace_back(-1.0 + n * w, 0.0);
  }
  EXPECT_LT(multiset_distance(eigs, expect), 1e-12);
}

TEST(ComplexEigenvalues, Diagonal) {
  Eigen::VectorXcd d(4);
  d << cplx(1, 2), cplx(-3, 0), cplx(0, -1), cplx(5, 5);
  const auto e = complex_eigenvalues(d.asDiagonal().toDenseMatrix());
  EXPECT_LT(multiset_distance(e, {d.data(), d.data() + 4}), 1e-14);
}

TEST(ComplexEigenvalues, Companion) {
  Eigen::MatrixXcd c(2, 2);
  c << 3.0, -2.0, 1.0, 0.0;  // z^2 - 3z + 2
  EXPECT_LT(multiset_distance(complex_eigenvalues(c), {1.0, 2.0}), 1e-14);
}

TEST(ComplexEigenvalues, SimilarityInvariance82) {
  std::mt19937_64 rng(82);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXcd m = random_matrix(rng, 82);
    const Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(82, 82) + 0.05 * random_matrix(rng, 82);
    const Eigen::MatrixXcd similar = p.partialPivLu().solve(m * p);
    EXPECT_LT(multiset_distance(complex_eigenvalues(m), complex_eigenvalues(similar)), 1e-8);
  }
}

TEST(ComplexEigenvalues, BackwardErrorOnRandomMatrices) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXcd m = random_matrix(rng, 60);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> full(m);
    const auto eigs = complex_eigenvalues(m);
    const double norm = m.norm();
    for (Eigen::Index k = 0; k < m.rows(); ++k) {
      const Eigen::VectorXcd v = full.eigenvectors().col(k);
      const double r = (m * v - full.eigenvalues()[k] * v).norm() / (norm * v.norm());
      EXPECT_LT(r, 1e-10);
    }
    EXPECT_LT(multiset_distance(eigs, {full.eigenvalues().data(), full.eigenvalues().data() + m.rows()}), 1e-10);
  }
}

TEST(ComplexEigenvalues, RejectsNonFinite) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(3, 3);
  m(1, 2) = cplx(NAN, 0);
  EXPECT_THROW(complex_eigenvalues(m), NumericalError);
}

TEST(FoldSpectrum, LadderCollapsesToOneValue) {
  const auto s = fold_spectrum({0.3, 1.3, -0.7}, 1.0, 20);
  ASSERT_EQ(s.bands.size(), 1u);
  EXPECT_NEAR(s.bands[0].epsilon.real(), 0.3, 1e-15);
  EXPECT_EQ(s.bands[0].members, 3);
  for (const auto& e : s.folded) EXPECT_NEAR(e.real(), 0.3, 1e-15);
}

TEST(FoldSpectrum, StaticXAtOmegaPointEight) {
  const auto s = floquet_spectrum(smooth("pt-cosy-cosz", 0.0, 0.8), 20);
  ASSERT_EQ(s.bands.size(), 2u);
  std::vector<double> re{s.bands[0].epsilon.real(), s.bands[1].epsilon.real()};
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -0.2, 1e-12);
  EXPECT_NEAR(re[1], 0.2, 1e-12);
  EXPECT_EQ(s.max_im, 0.0);
}

TEST(FoldSpectrum, ZoneBoundaryIsHalfOpen) {
  const auto s = fold_spectrum({cplx(-0.5, 0.0), cplx(0.25, 0.0)}, 1.0, 3);
  std::vector<double> re{s.bands[0].epsilon.real(), s.bands[1].epsilon.real()};
  std::sort(re.begin(), re.end());
  EXPECT_DOUBLE_EQ(re[1], 0.5);
  EXPECT_DOUBLE_EQ(re[0], 0.25);
}

TEST(FoldSpectrum, TooFewSurvivorsThrows) {
  EXPECT_THROW(fold_spectrum({cplx(10.0, 0.0), cplx(0.1, 0.0)}, 1.0, 20), NumericalError);
}

TEST(FoldSpectrum, MatchesMonodromyOracle) {
  const auto m = smooth("pt-cosy-cosz", 0.3, 1.5);
  const auto s = floquet_spectrum(m, 20);
  const auto r = monodromy(m, {Engine::Integrate, 200000});
  ASSERT_FALSE(s.bands.empty());
  for (const auto& b : s.bands) {
    EXPECT_NEAR(std::abs(b.epsilon.real()), std::abs(r.eps_F.real()), 1e-6);
    EXPECT_NEAR(std::abs(b.epsilon.imag()), std::abs(r.eps_F.imag()), 1e-6);
  }
  EXPECT_LT(s.ladder_residual, 1e-6);
}

TEST(MaxImQuasienergy, HermitianIsZero) {
  for (double w : {0.3, 0.8, 2.0}) EXPECT_EQ(max_im_quasienergy(smooth("apt-cosx-cosy", 0.0, w)), 0.0);
}

TEST(MaxImQuasienergy, PrimaryResonanceIsUnstable) {
  EXPECT_GT(max_im_quasienergy(smooth("pt-cosy-cosz", 0.05, 2.0 / 3.0)), 1e-8);
}

TEST(MaxImQuasienergy, LargeGammaAptIsUnstable) {
  EXPECT_GT(max_im_quasienergy(smooth("apt-cosx-cosy", 5.0, 1.0)), 1e-8);
}

TEST(MaxImQuasienergy, AgreesWithIntegrateEngine) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ug(0.0, 1.5), uw(0.5, 3.0);
  for (int i = 0; i < 6; ++i) {
    const double g = ug(rng), w = uw(rng);
    const auto m = smooth("pt-cosy-cosz", g, w);
    const double f = max_im_quasienergy(m, 20);
    const double r = monodromy(m, {Engine::Integrate, 200000}).max_im_eps;
    EXPECT_NEAR(f, r, 1e-5);
  }
}

TEST(ConvergenceCheck, HermitianDeltaIsZero) {
  const auto r = convergence_check(smooth("pt-cosy-cosz", 0.0, 0.7), 20);
  EXPECT_EQ(r.delta, 0.0);
  EXPECT_TRUE(r.converged);
}

TEST(ConvergenceCheck, PaperCutoffConvergesOnSampledPoints) {
  for (auto [g, w] : {std::pair{0.5, 1.0}, {1.0, 2.0}, {0.05, 2.0 / 3.0}, {1.5, 0.8}})
    EXPECT_TRUE(convergence_check(smooth("pt-cosy-cosz", g, w), 20).converged) << g << "," << w;
}

TEST(ConvergenceCheck, TinyCutoffIsNotConverged) {
  const auto r = convergence_check(smooth("pt-cosy-cosz", 1.5, 0.5), 3);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.delta, 1e-6);
}

TEST(FloquetProperties, SpectrumClosedUnderConjugation) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ug(0.0, 2.0), uw(0.3, 3.0);
  const char* names[] = {"pt-cosy-cosz", "apt-cosx-cosy", "apt-cosx-siny"};
  for (int i = 0; i < 15; ++i) {
    const double g = ug(rng), w = uw(rng);
    const auto m = smooth(names[i % 3], g, w);
    const auto eigs = complex_eigenvalues(build_floquet_matrix(m, 20).matrix);
    EXPECT_LT(multiset_distance(eigs, conjugated(eigs)), 1e-8) << m.label;
  }
}

TEST(FloquetProperties, LadderResidualSmallAtPaperCutoff) {
  for (auto [g, w] : {std::pair{0.3, 1.2}, {0.8, 2.5}, {0.1, 0.9}}) {
    const auto s = floquet_spectrum(smooth("pt-cosy-cosz", g, w), 20);
    EXPECT_LT(s.ladder_residual, 1e-6) << g << "," << w;
  }
}
