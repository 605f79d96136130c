#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "perstab/system_model.h"

namespace perstab {

inline constexpr int kDefaultStepsPerPeriod = 2000;

/// Which one-sided limit to take when a piecewise signal jumps at a node.
/// Integration stages at the start of a step read the right limit, stages at
/// the end of a step read the left limit.
enum class Side { kRight, kLeft };

/// Sampled evolution operator Φ(t, s) of y' = A(τ) y.
struct TransitionMatrix {
  MatrixXd matrix;
  double s{0.0};
  double t{0.0};
  int grid_steps{0};
};

/// Piecewise-linear control u: [t0, t1] → R^m, zero outside its horizon.
/// Repeated times encode a jump: the earlier sample is the left limit and
/// the later sample the right limit.
class ControlSignal {
 public:
  ControlSignal(std::vector<double> times, std::vector<VectorXd> values);

  /// u ≡ 0 on [0, horizon].
  static ControlSignal Zero(int dim_control, double horizon);

  VectorXd value(double t, Side side = Side::kRight) const;

  int dim() const { return dim_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<VectorXd>& values() const { return values_; }

  /// Trapezoid quadrature of ‖u(t)‖² on the stored nodes.
  double squared_l2_norm() const { return squared_l2_norm_; }
  /// Trapezoid quadrature of ‖u‖² restricted to [a, b] (zero extension).
  double squared_l2_norm_between(double a, double b) const;

  /// Copy with every time shifted by `offset`.
  ControlSignal shifted(double offset) const;

 private:
  std::vector<double> times_;
  std::vector<VectorXd> values_;
  int dim_{0};
  double squared_l2_norm_{0.0};
};

struct StateTrajectory {
  std::vector<double> times;
  std::vector<VectorXd> states;
  std::optional<ControlSignal> control_used;

  const VectorXd& final_state() const { return states.back(); }
};

/// Solution φ_n(t; ψ) of φ' = -A(t)ᵀ φ on [0, nT] with φ(nT) = ψ, together
/// with the observed output w(t) = B(t)ᵀ φ(t).
struct AdjointTrajectory {
  std::vector<double> times;
  std::vector<VectorXd> phi;
  std::vector<VectorXd> output;
  VectorXd terminal;
  double output_l2_norm{0.0};
};

/// Φ(t, s) by classical RK4 with step ≈ period / steps_per_period.
/// Requires 0 <= s <= t and steps_per_period >= 16.
TransitionMatrix transition(const PeriodicSystem& sys, double s, double t,
                            int steps_per_period = kDefaultStepsPerPeriod);

/// Integrates y' = A(t) y + B(t) u(t), y(t_start) = z on `grid`. Controls are
/// read by linear interpolation (zero outside their horizon).
StateTrajectory simulate(const PeriodicSystem& sys, const VectorXd& z,
                         const ControlSignal& u, const TimeGrid& grid);

/// Gain-driven closed loop y' = (A(t) + B(t) K(t)) y.
using GainSchedule = std::function<MatrixXd(double, Side)>;
StateTrajectory simulate_closed_loop(const PeriodicSystem& sys,
                                     const VectorXd& z,
                                     const GainSchedule& gain,
                                     const TimeGrid& grid);

/// Backward solve of the adjoint equation from φ(nT) = ψ, by running the
/// forward integrator on the time-reversed system.
AdjointTrajectory adjoint_trajectory(
    const PeriodicSystem& sys, int n, const VectorXd& psi,
    int steps_per_period = kDefaultStepsPerPeriod);

/// CSV with columns time, state_1..state_d[, control_1..control_m].
void write_trajectory_csv(std::ostream& os, const StateTrajectory& traj);

/// Trapezoid quadrature of f sampled at (possibly repeated) ascending times.
double trapezoid(const std::vector<double>& times,
                 const std::vector<double>& values);

}  // namespace perstab
