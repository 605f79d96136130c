#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "perstab/builtin_systems.h"
#include "perstab/heat_example.h"
#include "perstab/propagator.h"

using namespace perstab;

namespace {

constexpr double kPi = std::numbers::pi;

PeriodicSystem scalar(double a, double b) {
  return build_system({1, 1}, 1.0, MatrixXd::Constant(1, 1, a),
                      SamplerSpec::Zero(),
                      SamplerSpec::Constant(MatrixXd::Constant(1, 1, b)));
}

// Composite Simpson on a uniform grid with an even number of intervals.
double simpson(const std::vector<double>& t, const std::vector<double>& f) {
  const std::size_t intervals = t.size() - 1;
  EXPECT_EQ(intervals % 2, 0u);
  const double h = (t.back() - t.front()) / intervals;
  double s = f.front() + f.back();
  for (std::size_t i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
  return s * h / 3.0;
}

ControlSignal random_control(std::mt19937_64& rng, int dim, double horizon,
                             int nodes) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> times(nodes);
  std::vector<VectorXd> values(nodes, VectorXd(dim));
  for (int i = 0; i < nodes; ++i) {
    times[i] = horizon * i / (nodes - 1);
    for (int k = 0; k < dim; ++k) values[i](k) = normal(rng);
  }
  return ControlSignal(times, values);
}

}  // namespace

TEST(Transition, IdentityAtEqualTimes) {
  const PeriodicSystem sys = random_3d_system(4).sys;
  EXPECT_EQ(transition(sys, 0.7, 0.7).matrix, MatrixXd::Identity(3, 3));
}

TEST(Transition, RejectsReversedInterval) {
  EXPECT_THROW(transition(scalar(1, 1), 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(transition(scalar(1, 1), 0.0, 1.0, 8), std::invalid_argument);
}

TEST(Transition, ScalarExponential) {
  const PeriodicSystem sys = scalar(-1.0, 0.0);
  const double s = 0.3, t = 2.9;
  EXPECT_NEAR(transition(sys, s, t).matrix(0, 0), std::exp(-(t - s)), 1e-12);
}

TEST(Transition, HeatModeOneClosedForm) {
  const PeriodicSystem heat = build_heat_galerkin({.n_modes = 4});
  for (double t : {0.5, kPi / 3, kPi, 2.5 * kPi}) {
    const double exact = heat_mode1_closed_form(t, 1.0);
    EXPECT_NEAR(transition(heat, 0.0, t).matrix(0, 0) / exact, 1.0, 1e-9);
  }
}

TEST(Transition, CompositionAndPeriodicity) {
  std::vector<PeriodicSystem> systems = {build_heat_galerkin({.n_modes = 8})};
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    systems.push_back(random_3d_system(seed).sys);
  }
  for (const PeriodicSystem& sys : systems) {
    const double T = sys.period();
    const double h = T / kDefaultStepsPerPeriod;
    // Grid-aligned s <= r <= t in [0, 3T].
    const double s = 150 * h, r = 1700 * h + T, t = 3 * T;
    const MatrixXd direct = transition(sys, s, t).matrix;
    const MatrixXd composed =
        transition(sys, r, t).matrix * transition(sys, s, r).matrix;
    EXPECT_LE((direct - composed).norm(), 1e-7 * std::max(1.0, direct.norm()))
        << sys.label();
    const MatrixXd shifted = transition(sys, s + T, r + T).matrix;
    const MatrixXd base = transition(sys, s, r).matrix;
    EXPECT_LE((shifted - base).norm(), 1e-7 * std::max(1.0, base.norm()))
        << sys.label();
  }
}

TEST(Transition, FourthOrderConvergence) {
  const PeriodicSystem sys = random_3d_system(5).sys;
  const MatrixXd m1 = transition(sys, 0, sys.period(), 50).matrix;
  const MatrixXd m2 = transition(sys, 0, sys.period(), 100).matrix;
  const MatrixXd m4 = transition(sys, 0, sys.period(), 200).matrix;
  const double order = std::log2((m1 - m2).norm() / (m2 - m4).norm());
  EXPECT_GT(order, 3.7);
  EXPECT_LT(order, 4.3);
}

TEST(Simulate, ZeroStaysZero) {
  const PeriodicSystem sys = random_3d_system(1).sys;
  const StateTrajectory tr = simulate(
      sys, VectorXd::Zero(3), ControlSignal::Zero(sys.dim_control(), 2.0),
      TimeGrid(0.0, 2.0, 100));
  for (const VectorXd& y : tr.states) EXPECT_TRUE(y.isZero(0.0));
}

TEST(Simulate, ScalarExponentialGrowth) {
  const StateTrajectory tr =
      simulate(scalar(1.0, 1.0), VectorXd::Ones(1), ControlSignal::Zero(1, 1.0),
               propagator_grid(0.0, 1.0, 1.0, kDefaultStepsPerPeriod));
  EXPECT_NEAR(tr.final_state()(0), std::exp(1.0), 1e-8);
  EXPECT_EQ(tr.states.front(), VectorXd::Ones(1));
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    EXPECT_GT(tr.times[i], tr.times[i - 1]);
  }
}

TEST(Simulate, HeatModeTwoIgnoresControl) {
  const PeriodicSystem heat = build_heat_galerkin({.n_modes = 4});
  VectorXd z = VectorXd::Zero(4);
  z(1) = 1.0;
  std::mt19937_64 rng(3);
  const TimeGrid grid = propagator_grid(0.0, kPi, kPi, kDefaultStepsPerPeriod);
  const StateTrajectory tr = simulate(heat, z, random_control(rng, 1, kPi, 17), grid);
  for (std::size_t i = 0; i < tr.times.size(); i += 50) {
    const double t = tr.times[i];
    const double exact = std::exp(-2.5 * t - 0.75 * std::sin(2.0 * t));
    EXPECT_NEAR(tr.states[i](1) / exact, 1.0, 1e-9);
    EXPECT_NE(tr.states[i](1), 0.0);
  }
}

TEST(Simulate, DimensionMismatch) {
  EXPECT_THROW(simulate(scalar(1, 1), VectorXd::Ones(2), ControlSignal::Zero(1, 1),
                        TimeGrid(0, 1, 10)),
               std::invalid_argument);
}

TEST(ControlSignalTest, NormMatchesTrapezoidAndJumps) {
  const ControlSignal u({0.0, 1.0, 1.0, 2.0},
                        {VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 1.0),
                         VectorXd::Constant(1, 3.0), VectorXd::Constant(1, 3.0)});
  EXPECT_DOUBLE_EQ(u.squared_l2_norm(), 1.0 + 9.0);
  EXPECT_DOUBLE_EQ(u.value(1.0, Side::kLeft)(0), 1.0);
  EXPECT_DOUBLE_EQ(u.value(1.0, Side::kRight)(0), 3.0);
  EXPECT_DOUBLE_EQ(u.value(2.5)(0), 0.0);
  EXPECT_DOUBLE_EQ(u.squared_l2_norm_between(0.5, 1.5), 0.5 + 4.5);
}

TEST(Adjoint, ZeroTerminal) {
  const PeriodicSystem sys = random_3d_system(2).sys;
  const AdjointTrajectory adj = adjoint_trajectory(sys, 1, VectorXd::Zero(3));
  for (const VectorXd& p : adj.phi) EXPECT_TRUE(p.isZero(0.0));
  EXPECT_EQ(adj.output_l2_norm, 0.0);
}

TEST(Adjoint, RejectsBadArguments) {
  EXPECT_THROW(adjoint_trajectory(scalar(1, 1), 0, VectorXd::Ones(1)),
               std::invalid_argument);
}

TEST(Adjoint, HeatModeBounds) {
  const PeriodicSystem heat = build_heat_galerkin({.n_modes = 6});
  for (int k = 1; k <= 6; ++k) {
    VectorXd psi = VectorXd::Zero(6);
    psi(k - 1) = 1.0;
    const AdjointTrajectory adj = adjoint_trajectory(heat, 1, psi);
    EXPECT_LE(std::abs(adj.phi.front()(k - 1)), std::exp(-(k * k - 3.0) * kPi));
  }
  VectorXd psi = VectorXd::Zero(6);
  psi(0) = 1.0;
  const AdjointTrajectory adj = adjoint_trajectory(heat, 1, psi);
  // ȧ₁ = (1 - 3sin²t) a₁ backward from π: a₁(0) = e^{π/2} a₁(π).
  EXPECT_NEAR(adj.phi.front()(0) / std::exp(kPi / 2), 1.0, 1e-9);
}

TEST(Adjoint, MatchesTransposedTransitionAndOutput) {
  const PeriodicSystem sys = random_3d_system(9).sys;
  const VectorXd psi = VectorXd::Random(3);
  const int n = 2;
  const AdjointTrajectory adj = adjoint_trajectory(sys, n, psi);
  EXPECT_EQ(adj.phi.back(), psi);
  const double horizon = n * sys.period();
  for (std::size_t i = 0; i < adj.times.size(); i += 250) {
    const MatrixXd phi = transition(sys, adj.times[i], horizon).matrix;
    EXPECT_LE((adj.phi[i] - phi.transpose() * psi).norm(), 1e-7);
    EXPECT_LE((adj.output[i] - sys.B(adj.times[i]).transpose() * adj.phi[i]).norm(),
              1e-14);
  }
}

TEST(Adjoint, DualityIdentity) {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed : {1u, 3u, 6u}) {
    const PeriodicSystem sys = random_3d_system(seed).sys;
    const int n = 2;
    const double horizon = n * sys.period();
    const VectorXd z = VectorXd::Random(3), psi = VectorXd::Random(3);
    const ControlSignal u = random_control(rng, sys.dim_control(), horizon, 41);
    const StateTrajectory tr =
        simulate(sys, z, u, propagator_grid(0, horizon, sys.period(),
                                            kDefaultStepsPerPeriod));
    const AdjointTrajectory adj = adjoint_trajectory(sys, n, psi);
    std::vector<double> integrand(adj.times.size());
    for (std::size_t i = 0; i < adj.times.size(); ++i) {
      integrand[i] = u.value(adj.times[i]).dot(adj.output[i]);
    }
    const double lhs = tr.final_state().dot(psi) - z.dot(adj.phi.front());
    EXPECT_NEAR(lhs, simpson(adj.times, integrand), 1e-6) << sys.label();
  }
}

TEST(TrajectoryCsv, Columns) {
  const PeriodicSystem sys = random_3d_system(3).sys;
  const StateTrajectory tr = simulate(sys, VectorXd::Ones(3),
                                      ControlSignal::Zero(sys.dim_control(), 1.0),
                                      TimeGrid(0, 1, 4));
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::string header;
  std::istringstream in(os.str());
  std::getline(in, header);
  std::string expected = "time,state_1,state_2,state_3";
  for (int i = 1; i <= sys.dim_control(); ++i) {
    expected += ",control_" + std::to_string(i);
  }
  EXPECT_EQ(header, expected);
}
