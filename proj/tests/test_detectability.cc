#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "perstab/builtin_systems.h"
#include "perstab/detectability.h"
#include "perstab/heat_example.h"

using namespace perstab;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicSystem scalar(double a, double b) {
  return build_system({1, 1}, 1.0, MatrixXd::Constant(1, 1, a),
                      SamplerSpec::Zero(),
                      b == 0.0 ? SamplerSpec::Zero()
                               : SamplerSpec::Constant(MatrixXd::Constant(1, 1, b)));
}

std::vector<VectorXd> random_vectors(int dim, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<VectorXd> out(count, VectorXd(dim));
  for (auto& v : out) {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  }
  return out;
}

// Random 4-dim system with two controls.
PeriodicSystem random_4d(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  auto draw = [&](int r, int c) {
    MatrixXd m(r, c);
    for (int j = 0; j < c; ++j)
      for (int i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };
  return build_system({4, 2}, 1.3, draw(4, 4),
                      SamplerSpec::TrigSeries(MatrixXd::Zero(4, 4), draw(4, 4),
                                              draw(4, 4)),
                      SamplerSpec::TrigSeries(draw(4, 2), draw(4, 2), draw(4, 2)),
                      "random-4d");
}

// Conjugates the system by an orthogonal R: x = R y.
PeriodicSystem rotate(const PeriodicSystem& sys, const MatrixXd& r) {
  const SamplerSpec& d = *sys.d_sampler().spec();
  const SamplerSpec& b = *sys.b_sampler().spec();
  const MatrixXd rt = r.transpose();
  return build_system(
      {sys.dim_state(), sys.dim_control()}, sys.period(),
      r * sys.a_const() * rt,
      SamplerSpec::TrigSeries(r * d.matrices.at("constant") * rt,
                              r * d.matrices.at("cos") * rt,
                              r * d.matrices.at("sin") * rt),
      SamplerSpec::TrigSeries(r * b.matrices.at("constant"),
                              r * b.matrices.at("cos"), r * b.matrices.at("sin")));
}

}  // namespace

TEST(MinEnergy, ZeroState) {
  const PeriodicSystem sys = random_3d_system(1).sys;
  const MinEnergyResult r = min_energy_control(sys, 1, 0.1, VectorXd::Zero(3));
  EXPECT_TRUE(r.predicted_final.isZero(0.0));
  EXPECT_EQ(r.control.squared_l2_norm(), 0.0);
}

TEST(MinEnergy, ScalarClosedForm) {
  const double q = (std::exp(2.0) - 1.0) / 2.0;
  const MinEnergyResult r =
      min_energy_control(scalar(1.0, 1.0), 1, 0.1, VectorXd::Ones(1));
  EXPECT_NEAR(r.predicted_final(0), 0.1 * std::exp(1.0) / (0.1 + q), 1e-10);
}

TEST(MinEnergy, SimulationMatchesPredictionAndEnergy) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const PeriodicSystem sys = random_4d(seed);
    const int n = 2;
    const double gamma = 1e-2;
    const MinEnergyGenerator gen(sys, n, gamma);
    for (const VectorXd& z : random_vectors(4, 3, seed)) {
      const MinEnergyResult r = gen(z);
      const double horizon = n * sys.period();
      const StateTrajectory tr = simulate(
          sys, z, r.control,
          propagator_grid(0, horizon, sys.period(), kDefaultStepsPerPeriod));
      EXPECT_LE((tr.final_state() - r.predicted_final).norm(), 1e-6 * z.norm());

      const MatrixXd& q = gen.gramian();
      const MatrixXd inv =
          (gamma * MatrixXd::Identity(4, 4) + q).inverse();
      const VectorXd mz = gen.block_transition() * z;
      const double energy = mz.dot(inv * q * inv * mz);
      EXPECT_NEAR(r.control.squared_l2_norm(), energy, 1e-5 * energy);
    }
  }
}

TEST(MinEnergy, SingularSolveRejected) {
  // Q = 0 and γ below the factorization's resolution.
  EXPECT_THROW(MinEnergyGenerator(scalar(1.0, 0.0), 1, 0.0), std::invalid_argument);
  // Exactly rank-one Q: γ = 1e-300 leaves γI + Q singular to working precision.
  const PeriodicSystem sys =
      build_system({2, 1}, 1.0, (MatrixXd(2, 2) << 1, 0, 0, -1).finished(), SamplerSpec::Zero(),
                   SamplerSpec::Constant((MatrixXd(2, 1) << 1, 0).finished()));
  EXPECT_THROW(MinEnergyGenerator(sys, 1, 1e-300), std::runtime_error);
  EXPECT_NO_THROW(MinEnergyGenerator(sys, 1, 1e-3));
}

TEST(CertificateSearch, StableUncontrolled) {
  const auto cert = certificate_search(scalar(-1.0, 0.0), 1);
  ASSERT_TRUE(cert.has_value());
  EXPECT_NEAR(cert->delta, std::exp(-1.0), 1e-10);
  EXPECT_EQ(cert->c, 1e-12);
  for (const GammaPoint& p : gamma_sweep(scalar(-1.0, 0.0), 1, default_gamma_grid())) {
    EXPECT_NEAR(p.delta, std::exp(-1.0), 1e-10);
    EXPECT_EQ(p.c, 0.0);
  }
}

TEST(CertificateSearch, UnstableUncontrolled) {
  EXPECT_FALSE(certificate_search(scalar(1.0, 0.0), 1).has_value());
  for (const GammaPoint& p : gamma_sweep(scalar(1.0, 0.0), 1, default_gamma_grid())) {
    EXPECT_NEAR(p.delta, std::exp(1.0), 1e-9);
  }
}

TEST(CertificateSearch, HeatHasCertificate) {
  const auto cert = certificate_search(build_heat_galerkin({.n_modes = 8}), 1);
  ASSERT_TRUE(cert.has_value());
  EXPECT_LT(cert->delta, 1.0);
  EXPECT_LE(cert->delta, 10.0 * std::exp(-kPi));
  EXPECT_NO_THROW(cert->validate());
}

TEST(CertificateSearch, OrthogonalInvariance) {
  const PeriodicSystem sys = random_4d(7);
  Eigen::HouseholderQR<MatrixXd> qr(MatrixXd::Random(4, 4));
  const MatrixXd r = qr.householderQ() * MatrixXd::Identity(4, 4);
  const PeriodicSystem rot = rotate(sys, r);
  const auto grid = log_spaced(1e-4, 1e1, 7);
  const auto a = gamma_sweep(sys, 1, grid);
  const auto b = gamma_sweep(rot, 1, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(a[i].delta, b[i].delta, 1e-8);
    EXPECT_NEAR(a[i].c, b[i].c, 1e-8);
  }
}

TEST(CheckInequality, Homogeneous) {
  const PeriodicSystem sys = random_3d_system(1).sys;
  const auto cert = certificate_search(sys, 1);
  ASSERT_TRUE(cert.has_value());
  const VectorXd psi = VectorXd::Random(3);
  const double m1 = check_inequality(sys, *cert, 1, {psi}).min_margin;
  const double m3 = check_inequality(sys, *cert, 1, {3.5 * psi}).min_margin;
  EXPECT_NEAR(m3, 3.5 * m1, 1e-10 * std::max(1.0, std::abs(m3)));
}

TEST(CheckInequality, HeatPaperConstants) {
  const PeriodicSystem heat = build_heat_galerkin({.n_modes = 8});
  DetectabilityCertificate cert;
  cert.n = 1;
  cert.delta = std::exp(-kPi);
  cert.c = 2.0 * std::exp(2.0 * kPi);
  const auto psis = random_vectors(8, 1000, 42);
  const InequalityReport k1 = check_inequality(heat, cert, 1, psis);
  EXPECT_GE(k1.min_margin, 0.0);
  EXPECT_EQ(k1.samples, 1000);
  EXPECT_EQ(k1.min_margin, *std::min_element(k1.margins.begin(), k1.margins.end()));
  EXPECT_GE(check_inequality(heat, cert, 3, psis).min_margin, 0.0);
}

TEST(CheckInequality, RejectsBadArguments) {
  const PeriodicSystem sys = scalar(1.0, 1.0);
  DetectabilityCertificate cert{1, 0.9, 1.0, 1.0};
  EXPECT_THROW(check_inequality(sys, cert, 2, {VectorXd::Ones(1)}),
               std::invalid_argument);
  cert.delta = 0.5;
  EXPECT_THROW(check_inequality(sys, cert, 1, {VectorXd::Zero(1)}),
               std::invalid_argument);
  EXPECT_THROW(check_inequality(sys, cert, 0, {VectorXd::Ones(1)}),
               std::invalid_argument);
}

TEST(CheckInequality, TelescopingRederivesCertificate) {
  const PeriodicSystem sys = scalar(-0.1, 0.0);  // δ = e^{-0.1n}
  const auto cert = certificate_search(sys, 1);
  ASSERT_TRUE(cert.has_value());
  const auto tel = certificate_for_telescoping(sys, *cert, 10);
  ASSERT_TRUE(tel.has_value());
  EXPECT_LT(std::sqrt(2.0) * tel->delta, 1.0);
  EXPECT_EQ(tel->n, 4);  // e^{-0.4}·√2 < 1 < e^{-0.3}·√2
}

TEST(CheckInequality, LemmaTwoDirectionOnRandomFamily) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const PeriodicSystem sys = random_3d_system(seed).sys;
    for (const GammaPoint& p : gamma_sweep(sys, 1, log_spaced(1e-6, 1e2, 9))) {
      if (!(p.delta < 1.0)) continue;
      DetectabilityCertificate cert{1, p.delta, std::max(p.c, 1e-12), p.gamma};
      EXPECT_GE(check_inequality(sys, cert, 1, random_vectors(3, 100, seed))
                    .min_margin,
                -1e-6)
          << sys.label() << " gamma=" << p.gamma;
    }
  }
}

TEST(WorstCase, ScalarUncontrolled) {
  EXPECT_NEAR(worst_case_psi(scalar(1.0, 0.0), 1, 3.0).value, std::exp(1.0), 1e-10);
}

TEST(WorstCase, DiagonalUncontrolled) {
  const PeriodicSystem sys = build_system(
      {2, 1}, 1.0, (MatrixXd(2, 2) << 1, 0, 0, -2).finished(), SamplerSpec::Zero(),
      SamplerSpec::Zero());
  const WorstCase w = worst_case_psi(sys, 1, 1.0);
  // Brute force over the unit circle at one-degree resolution.
  const MatrixXd m = transition(sys, 0, 1).matrix;
  double brute = 0.0;
  for (int deg = 0; deg < 360; ++deg) {
    const double th = deg * kPi / 180.0;
    VectorXd psi(2);
    psi << std::cos(th), std::sin(th);
    brute = std::max(brute, (m.transpose() * psi).norm());
  }
  EXPECT_NEAR(w.value, brute, 1e-8);
  EXPECT_NEAR(w.value, std::exp(1.0), 1e-8);
  EXPECT_NEAR(std::abs(w.psi(0)), 1.0, 1e-6);
}

TEST(WorstCase, ScalarControlled) {
  const double q = (std::exp(2.0) - 1.0) / 2.0;
  EXPECT_NEAR(worst_case_psi(scalar(1.0, 1.0), 1, 10.0).value,
              std::exp(1.0) - 10.0 * std::sqrt(q), 1e-9);
}

TEST(WorstCase, BoundedByTransitionNorm) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const PeriodicSystem sys = random_3d_system(seed).sys;
    const GramianBundle g = observability_gramian(sys, 1);
    const WorstCase w = worst_case_psi(g.transition, g.matrix, 0.5, 4, seed);
    EXPECT_LE(w.value, operator_norm(g.transition.transpose()) + 1e-8);
    EXPECT_NEAR(w.psi.norm(), 1.0, 1e-12);
  }
}

TEST(WorstCase, Deterministic) {
  const PeriodicSystem sys = random_3d_system(3).sys;
  const WorstCase a = worst_case_psi(sys, 1, 0.3, 4, 99);
  const WorstCase b = worst_case_psi(sys, 1, 0.3, 4, 99);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.psi, b.psi);
}

TEST(LogSpaced, Endpoints) {
  const auto g = default_gamma_grid();
  ASSERT_EQ(g.size(), 25u);
  EXPECT_NEAR(g.front(), 1e-8, 1e-22);
  EXPECT_NEAR(g.back(), 1e2, 1e-12);
  EXPECT_THROW(log_spaced(0.0, 1.0, 3), std::invalid_argument);
}
