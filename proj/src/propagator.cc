#include "perstab/propagator.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <stdexcept>
#include <utility>

namespace perstab {

double trapezoid(const std::vector<double>& times,
                 const std::vector<double>& values) {
  double sum = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    sum += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
  }
  return sum;
}

ControlSignal::ControlSignal(std::vector<double> times,
                             std::vector<VectorXd> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.empty() || times_.size() != values_.size()) {
    throw std::invalid_argument(
        "ControlSignal: need at least one node and one value per node");
  }
  dim_ = static_cast<int>(values_.front().size());
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (values_[i].size() != dim_) {
      throw std::invalid_argument("ControlSignal: inconsistent value sizes");
    }
    if (!values_[i].allFinite() || !std::isfinite(times_[i])) {
      throw std::invalid_argument("ControlSignal: non-finite entries");
    }
    if (i > 0 && times_[i] < times_[i - 1]) {
      throw std::invalid_argument("ControlSignal: times must be ascending");
    }
  }
  std::vector<double> sq(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    sq[i] = values_[i].squaredNorm();
  }
  squared_l2_norm_ = trapezoid(times_, sq);
}

ControlSignal ControlSignal::Zero(int dim_control, double horizon) {
  return ControlSignal({0.0, horizon}, {VectorXd::Zero(dim_control),
                                        VectorXd::Zero(dim_control)});
}

VectorXd ControlSignal::value(double t, Side side) const {
  const double slack = 1e-12 * (1.0 + std::abs(times_.back()));
  if (t < times_.front() - slack || t > times_.back() + slack) {
    return VectorXd::Zero(dim_);
  }
  t = std::clamp(t, times_.front(), times_.back());
  if (side == Side::kRight) {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = std::distance(times_.begin(), it) - 1;
    if (i + 1 >= times_.size()) return values_.back();
    const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
    if (w == 0.0) return values_[i];
    return (1.0 - w) * values_[i] + w * values_[i + 1];
  }
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  const std::size_t i = std::distance(times_.begin(), it);
  if (times_[i] == t || i == 0) return values_[i];
  const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return (1.0 - w) * values_[i - 1] + w * values_[i];
}

double ControlSignal::squared_l2_norm_between(double a, double b) const {
  double sum = 0.0;
  for (std::size_t i = 1; i < times_.size(); ++i) {
    const double lo = std::max(a, times_[i - 1]);
    const double hi = std::min(b, times_[i]);
    if (!(hi > lo)) continue;
    const double span = times_[i] - times_[i - 1];
    const double wl = (lo - times_[i - 1]) / span;
    const double wh = (hi - times_[i - 1]) / span;
    const VectorXd ul = (1.0 - wl) * values_[i - 1] + wl * values_[i];
    const VectorXd uh = (1.0 - wh) * values_[i - 1] + wh * values_[i];
    sum += 0.5 * (hi - lo) * (ul.squaredNorm() + uh.squaredNorm());
  }
  return sum;
}

ControlSignal ControlSignal::shifted(double offset) const {
  std::vector<double> t = times_;
  for (double& x : t) x += offset;
  return ControlSignal(std::move(t), values_);
}

namespace {

// One classical RK4 step for y' = f(t, y, side).
template <typename State, typename Rhs>
State rk4_step(const Rhs& f, double t, double h, const State& y) {
  const State k1 = f(t, y, Side::kRight);
  const State k2 = f(t + 0.5 * h, y + (0.5 * h) * k1, Side::kRight);
  const State k3 = f(t + 0.5 * h, y + (0.5 * h) * k2, Side::kRight);
  const State k4 = f(t + h, y + h * k3, Side::kLeft);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename Rhs>
StateTrajectory integrate_vector(const Rhs& f, const VectorXd& z,
                                 const TimeGrid& grid) {
  StateTrajectory traj;
  traj.times.reserve(grid.steps + 1);
  traj.states.reserve(grid.steps + 1);
  traj.times.push_back(grid.t_start);
  traj.states.push_back(z);
  const double h = grid.step();
  VectorXd y = z;
  for (int j = 0; j < grid.steps; ++j) {
    y = rk4_step<VectorXd>(f, grid.node(j), h, y);
    traj.times.push_back(j + 1 == grid.steps ? grid.t_end : grid.node(j + 1));
    traj.states.push_back(y);
  }
  return traj;
}

}  // namespace

TransitionMatrix transition(const PeriodicSystem& sys, double s, double t,
                            int steps_per_period) {
  if (s < 0.0) throw std::invalid_argument("transition: s must be >= 0");
  if (t < s) throw std::invalid_argument("transition: requires t >= s");
  if (steps_per_period < 16) {
    throw std::invalid_argument("transition: steps_per_period must be >= 16");
  }
  const int d = sys.dim_state();
  if (t == s) return {MatrixXd::Identity(d, d), s, t, 0};
  const TimeGrid grid = propagator_grid(s, t, sys.period(), steps_per_period);
  const double h = grid.step();
  auto f = [&sys](double tau, const MatrixXd& m, Side) -> MatrixXd {
    return sys.A(tau) * m;
  };
  MatrixXd m = MatrixXd::Identity(d, d);
  for (int j = 0; j < grid.steps; ++j) {
    m = rk4_step<MatrixXd>(f, grid.node(j), h, m);
  }
  return {m, s, t, grid.steps};
}

StateTrajectory simulate(const PeriodicSystem& sys, const VectorXd& z,
                         const ControlSignal& u, const TimeGrid& grid) {
  if (z.size() != sys.dim_state()) {
    throw std::invalid_argument("simulate: initial state dimension mismatch");
  }
  if (u.dim() != sys.dim_control()) {
    throw std::invalid_argument("simulate: control dimension mismatch");
  }
  const bool no_input = sys.b_sampler().is_zero();
  auto f = [&](double t, const VectorXd& y, Side side) -> VectorXd {
    VectorXd dy = sys.A(t) * y;
    if (!no_input) dy.noalias() += sys.B(t) * u.value(t, side);
    return dy;
  };
  StateTrajectory traj = integrate_vector(f, z, grid);
  traj.control_used = u;
  return traj;
}

StateTrajectory simulate_closed_loop(const PeriodicSystem& sys,
                                     const VectorXd& z,
                                     const GainSchedule& gain,
                                     const TimeGrid& grid) {
  if (z.size() != sys.dim_state()) {
    throw std::invalid_argument(
        "simulate_closed_loop: initial state dimension mismatch");
  }
  auto f = [&](double t, const VectorXd& y, Side side) -> VectorXd {
    return (sys.A(t) + sys.B(t) * gain(t, side)) * y;
  };
  return integrate_vector(f, z, grid);
}

AdjointTrajectory adjoint_trajectory(const PeriodicSystem& sys, int n,
                                     const VectorXd& psi,
                                     int steps_per_period) {
  if (n < 1) throw std::invalid_argument("adjoint_trajectory: n must be >= 1");
  if (psi.size() != sys.dim_state()) {
    throw std::invalid_argument("adjoint_trajectory: psi dimension mismatch");
  }
  const double horizon = n * sys.period();
  // Reversed time σ = nT - t turns the backward solve into a forward one:
  // χ'(σ) = A(nT - σ)ᵀ χ(σ), χ(0) = ψ.
  const TimeGrid grid(0.0, horizon, n * steps_per_period);
  auto f = [&](double sigma, const VectorXd& x, Side) -> VectorXd {
    return sys.A(std::max(0.0, horizon - sigma)).transpose() * x;
  };
  StateTrajectory rev = integrate_vector(f, psi, grid);

  AdjointTrajectory out;
  const std::size_t count = rev.times.size();
  out.times.resize(count);
  out.phi.resize(count);
  out.output.resize(count);
  std::vector<double> sq(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = count - 1 - i;
    out.times[i] = (i == 0) ? 0.0 : horizon - rev.times[r];
    out.phi[i] = rev.states[r];
    out.output[i] = sys.B(out.times[i]).transpose() * out.phi[i];
    sq[i] = out.output[i].squaredNorm();
  }
  out.times.back() = horizon;
  out.terminal = psi;
  out.output_l2_norm = std::sqrt(std::max(0.0, trapezoid(out.times, sq)));
  return out;
}

void write_trajectory_csv(std::ostream& os, const StateTrajectory& traj) {
  const int d = traj.states.empty() ? 0 : traj.states.front().size();
  const int m = traj.control_used ? traj.control_used->dim() : 0;
  os << "time";
  for (int i = 0; i < d; ++i) os << ",state_" << (i + 1);
  for (int i = 0; i < m; ++i) os << ",control_" << (i + 1);
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (int i = 0; i < d; ++i) os << ',' << traj.states[k](i);
    if (m > 0) {
      const VectorXd u = traj.control_used->value(traj.times[k]);
      for (int i = 0; i < m; ++i) os << ',' << u(i);
    }
    os << '\n';
  }
}

}  // namespace perstab
