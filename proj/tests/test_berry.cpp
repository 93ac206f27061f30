#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "floquet_ep/berry.hpp"

using namespace floquet_ep;

namespace {

constexpr double kPi = std::numbers::pi;

ModelSpec smooth(const char* name, double J, double gamma, int beta) {
  return preset(name, {J, gamma, 1.0, beta, WaveformFamily::Smooth});
}

CVec2 mat_vec(const Complex2x2& h, const CVec2& v) {
  return {h(0, 0) * v[0] + h(0, 1) * v[1], h(1, 0) * v[0] + h(1, 1) * v[1]};
}

CVec2 vec_mat(const CVec2& l, const Complex2x2& h) {
  return {l[0] * h(0, 0) + l[1] * h(1, 0), l[0] * h(0, 1) + l[1] * h(1, 1)};
}

double residual(const CVec2& a, const CVec2& b) { return norm2({a[0] - b[0], a[1] - b[1]}); }

// Closed form for Eq. (20) at beta = 1: theta = -+pi (1 - J / sqrt(J^2 - g^2)).
cplx eq20_theta_plus(double J, double g) {
  const cplx cos_theta = J / std::sqrt(cplx(J * J - g * g));
  return -kPi * (1.0 - cos_theta);
}

std::vector<RVec3> circle(double polar, int n) {
  std::vector<RVec3> loop;
  for (int k = 0; k < n; ++k) {
    const double phi = 2 * kPi * k / n;
    loop.push_back({std::sin(polar) * std::cos(phi), std::sin(polar) * std::sin(phi), std::cos(polar)});
  }
  return loop;
}

}  // namespace

TEST(InstantaneousEigensystem, JZ) {
  const auto e = instantaneous_eigensystem(2.0 * Complex2x2::pauli_z());
  EXPECT_EQ(e.eigenvalues[0], cplx(2.0));
  EXPECT_EQ(e.eigenvalues[1], cplx(-2.0));
  EXPECT_LT(residual(e.right[0], {1.0, 0.0}), 1e-15);
  EXPECT_LT(residual(e.right[1], {0.0, 1.0}), 1e-15);
  EXPECT_DOUBLE_EQ(e.gap, 4.0);
}

TEST(InstantaneousEigensystem, Eq17BetaOneEigenvalues) {
  const auto m = smooth("pt-cosy-sinz", 1.0, 0.8, 1);
  const double T = m.period();
  for (int k = 0; k < 16; ++k) {
    const double s = T * k / 16;
    const auto e = instantaneous_eigensystem(hamiltonian_at(m, s));
    const cplx expect = std::sqrt(cplx(1.0 + 0.64 * std::cos(4 * kPi * s / T)));
    EXPECT_LT(std::abs(e.eigenvalues[0] - expect), 1e-14) << k;
    EXPECT_LT(std::abs(e.eigenvalues[1] + expect), 1e-14) << k;
  }
}

TEST(InstantaneousEigensystem, QuadraticOracleAndResiduals) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 1000; ++i) {
    Complex2x2 h;
    for (auto& z : h.a) z = {u(rng), u(rng)};
    const auto e = biorthonormalize(instantaneous_eigensystem(h));
    const double scale = h.frobenius_norm();
    for (int a = 0; a < 2; ++a) {
      const cplx z = e.eigenvalues[a];
      EXPECT_LT(std::abs(z * z - h.trace() * z + h.det()), 1e-12 * std::max(1.0, scale * scale)) << i;
      const CVec2 hr = mat_vec(h, e.right[a]);
      EXPECT_LT(residual(hr, {z * e.right[a][0], z * e.right[a][1]}), 1e-10 * scale * norm2(e.right[a])) << i;
      const CVec2 lh = vec_mat(e.left[a], h);
      EXPECT_LT(residual(lh, {z * e.left[a][0], z * e.left[a][1]}), 1e-10 * scale * norm2(e.left[a])) << i;
    }
  }
}

TEST(InstantaneousEigensystem, DefectiveThrows) {
  const Complex2x2 h = Complex2x2::pauli_y() + cplx(0, -1) * Complex2x2::pauli_z();
  EXPECT_THROW(instantaneous_eigensystem(h), DefectivePoint);
  EXPECT_NO_THROW(instantaneous_eigensystem(Complex2x2::identity()));
}

TEST(Biorthonormalize, HermitianLeftIsAdjointOfRight) {
  const Complex2x2 h = Complex2x2::pauli_x() + 0.3 * Complex2x2::pauli_y() - 0.7 * Complex2x2::pauli_z();
  const auto e = biorthonormalize(instantaneous_eigensystem(h));
  for (int a = 0; a < 2; ++a) {
    EXPECT_LT(std::abs(e.left[a][0] - std::conj(e.right[a][0])), 1e-14);
    EXPECT_LT(std::abs(e.left[a][1] - std::conj(e.right[a][1])), 1e-14);
  }
}

TEST(Biorthonormalize, ZPlusHalfIX) {
  const Complex2x2 h = Complex2x2::pauli_z() + cplx(0, 0.5) * Complex2x2::pauli_x();
  const auto e = biorthonormalize(instantaneous_eigensystem(h));
  EXPECT_TRUE(e.biorthonormal);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) EXPECT_LT(std::abs(pair(e.left[a], e.right[b]) - (a == b ? 1.0 : 0.0)), 1e-10);
}

TEST(Biorthonormalize, NearEPThrows) {
  // sqrt(d.d) = 1e-9: above the defective cut, but left and right nearly orthogonal.
  EigensystemInstant e;
  e.right = {CVec2{1.0, 0.0}, CVec2{0.0, 1.0}};
  e.left = {CVec2{1e-12, 1.0}, CVec2{0.0, 1.0}};
  EXPECT_THROW(biorthonormalize(e), NearEP);
  const Complex2x2 h = Complex2x2::pauli_y() + cplx(0, -std::sqrt(1 - 1e-18)) * Complex2x2::pauli_z();
  EXPECT_THROW(biorthonormalize(instantaneous_eigensystem(h)), NumericalError);
}

TEST(HalfSolidAngle, Examples) {
  EXPECT_NEAR(half_solid_angle(circle(kPi / 2, 360)), kPi, 1e-12);
  for (double polar : {0.3, 1.0, 2.0}) {
    // Omega/2 is defined mod 2 pi; past the equator the smaller (southern) region is reported.
    const double d = std::remainder(half_solid_angle(circle(polar, 4096)) - kPi * (1 - std::cos(polar)), 2 * kPi);
    EXPECT_LT(std::abs(d), 1e-5) << polar;
  }
  EXPECT_NEAR(half_solid_angle(circle(0.3, 4096)), kPi * (1 - std::cos(0.3)), 1e-5);
  EXPECT_NEAR(half_solid_angle({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), kPi / 4, 1e-14);
  EXPECT_NEAR(half_solid_angle({{1, 0, 0}, {0, 0, 1}, {0, 1, 0}}), -kPi / 4, 1e-14);
}

TEST(HalfSolidAngle, ScaleInvariantAndErrors) {
  auto loop = circle(0.8, 500);
  for (std::size_t k = 0; k < loop.size(); ++k)
    for (auto& x : loop[k]) x *= 1.0 + 0.5 * std::sin(0.1 * static_cast<double>(k));
  EXPECT_NEAR(half_solid_angle(loop), half_solid_angle(circle(0.8, 500)), 1e-12);
  EXPECT_THROW(half_solid_angle({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}}), ConfigError);
  EXPECT_THROW(half_solid_angle({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}), ConfigError);
}

TEST(BerryPhaseLoop, HermitianEquator) {
  const auto r = berry_phase_loop(smooth("hermitian-cosx-siny", 0.0, 1.0, 1));
  for (int a = 0; a < 2; ++a) {
    EXPECT_NEAR(std::abs(r.theta[a].real()), kPi, 1e-4);
    EXPECT_LT(std::abs(r.theta[a].imag()), 1e-8);
  }
  ASSERT_TRUE(r.half_solid_angle.has_value());
  EXPECT_NEAR(*r.half_solid_angle, kPi, 1e-10);
  EXPECT_EQ(r.flags_string(), "ok");
}

TEST(BerryPhaseLoop, HermitianCapsMatchHalfSolidAngle) {
  for (double g : {0.3, 0.8, 2.5}) {
    BerryOptions o;
    o.steps = 1024;
    o.richardson = false;
    const auto r = berry_phase_loop(smooth("hermitian-cosx-siny", 1.0, g, 1), o);
    ASSERT_TRUE(r.half_solid_angle.has_value());
    // Band + picks up -Omega/2; compare modulo 2 pi.
    const double d = std::remainder(r.theta[0].real() + *r.half_solid_angle, 2 * kPi);
    EXPECT_LT(std::abs(d), 1e-4) << g;
    EXPECT_LT(std::abs(r.theta[0].imag()), 1e-8);
  }
}

TEST(BerryPhaseLoop, Eq20PlateauAtPi) {
  const auto r = berry_phase_loop(smooth("apt-cosx-siny", 1.0, 1.5, 1));
  EXPECT_NEAR(std::abs(r.theta[0].real()), kPi, 1e-3);
  EXPECT_NEAR(std::abs(r.theta[1].real()), kPi, 1e-3);
  EXPECT_LT(r.theta[0].real() * r.theta[1].real(), 0.0);
  EXPECT_LT(std::abs(r.theta[0] - eq20_theta_plus(1.0, 1.5)), 1e-6);
  EXPECT_LT(std::abs(r.theta[1] + eq20_theta_plus(1.0, 1.5)), 1e-6);
}

TEST(BerryPhaseLoop, Eq20RealBelowThreshold) {
  for (double g : {0.2, 0.5, 0.8}) {
    const auto r = berry_phase_loop(smooth("apt-cosx-siny", 1.0, g, 1));
    EXPECT_LT(std::abs(r.theta[0].imag()), 1e-6) << g;
    EXPECT_LT(std::abs(r.theta[1].imag()), 1e-6) << g;
    EXPECT_LT(std::abs(r.theta[0] - eq20_theta_plus(1.0, g)), 1e-6) << g;
  }
}

TEST(BerryPhaseLoop, Eq17BetaThreeStepDoubling) {
  for (double g : {0.2, 0.5, 0.8}) {
    BerryOptions o;
    o.steps = 8192;
    const auto r = berry_phase_loop(smooth("pt-cosy-sinz", 1.0, g, 3), o);
    EXPECT_LT(r.step_doubling_delta, 1e-4) << g;
    EXPECT_TRUE(r.certified);
  }
}

TEST(BerryPhaseLoop, BandSumRule) {
  const std::pair<const char*, double> cases[] = {
      {"hermitian-cosx-siny", 0.7}, {"apt-cosx-siny", 0.5}, {"apt-cosx-siny", 1.7}, {"pt-cosy-sinz", 0.6}};
  for (auto [name, g] : cases) {
    BerryOptions o;
    o.steps = 2048;
    const auto r = berry_phase_loop(smooth(name, 1.0, g, 1), o);
    const cplx sum = r.theta[0] + r.theta[1];
    EXPECT_LT(std::abs(std::remainder(sum.real(), 2 * kPi)), 1e-6) << name << " " << g;
    EXPECT_LT(std::abs(sum.imag()), 1e-6) << name << " " << g;
  }
}

TEST(BerryPhaseLoop, EPOnPathThrowsOrFlags) {
  // Eq. (17) at beta = 1, gamma = sqrt(2): d.d = 1 + 2 cos(4 pi s / T) vanishes at s = T/6.
  const auto m = smooth("pt-cosy-sinz", 1.0, std::sqrt(2.0), 1);
  BerryOptions o;
  o.steps = 3 * 256;
  EXPECT_THROW(berry_phase_loop(m, o), EPOnPath);
  o.flag_and_continue = true;
  const auto r = berry_phase_loop(m, o);
  EXPECT_FALSE(r.certified);
  EXPECT_FALSE(r.degeneracy_flags.empty());
  EXPECT_NE(r.flags_string().find("uncertified"), std::string::npos);
}

TEST(BerryPhaseLoop, RejectsTooFewSteps) {
  BerryOptions o;
  o.steps = 100;
  EXPECT_THROW(berry_phase_loop(smooth("apt-cosx-siny", 1.0, 0.5, 1), o), ConfigError);
}

TEST(WilsonLoop, GaugeInvarianceUnderRandomRescaling) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> mag(0.2, 5.0), ph(-kPi, kPi);
  // EP-free loops at beta = 3: Eq. (20) below gamma_c1 and above gamma_c2, Eq. (17) below 1.
  const std::pair<const char*, double> loops[] = {
      {"apt-cosx-siny", 0.5}, {"apt-cosx-siny", 2.5}, {"pt-cosy-sinz", 0.6}, {"hermitian-cosx-siny", 0.9}};
  for (auto [name, g] : loops) {
    const auto m = smooth(name, 1.0, g, 3);
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
    for (int a = 0; a < 2; ++a) EXPECT_LT(std::abs(moved.theta[a] - ref.theta[a]), 1e-10) << name;
  }
}

TEST(SpectrumRegionScan, Eq17BetaOneThreshold) {
  const auto s = spectrum_region_scan({"pt-cosy-sinz", 1.0, 1, WaveformFamily::Smooth}, 0.0, 3.0, 31);
  ASSERT_EQ(s.thresholds.size(), 1u);
  EXPECT_NEAR(s.thresholds[0], 1.0, 1e-6);
  EXPECT_EQ(s.regions.front(), SpectrumRegion::AllReal);
  EXPECT_EQ(s.regions.back(), SpectrumRegion::Mixed);
}

TEST(SpectrumRegionScan, Eq20BetaOneThreshold) {
  const auto s = spectrum_region_scan({"apt-cosx-siny", 1.0, 1, WaveformFamily::Smooth}, 0.0, 3.0, 31);
  ASSERT_EQ(s.thresholds.size(), 1u);
  EXPECT_NEAR(s.thresholds[0], 1.0, 1e-6);
  EXPECT_EQ(s.regions.back(), SpectrumRegion::AllImaginaryWindow);
}

TEST(SpectrumRegionScan, Eq20BetaThreeHasTwoThresholds) {
  const auto s = spectrum_region_scan({"apt-cosx-siny", 1.0, 3, WaveformFamily::Smooth}, 0.0, 3.0, 31);
  ASSERT_EQ(s.thresholds.size(), 2u);
  EXPECT_LT(s.thresholds[0], 1.0);
  EXPECT_GT(s.thresholds[1], 1.0);
}

TEST(SpectrumRegionScan, HermitianStaysReal) {
  const auto s = spectrum_region_scan({"hermitian-cosx-siny", 1.0, 3, WaveformFamily::Smooth}, 0.0, 3.0, 16);
  EXPECT_TRUE(s.thresholds.empty());
  for (auto r : s.regions) EXPECT_EQ(r, SpectrumRegion::AllReal);
}
