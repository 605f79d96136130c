#include "perstab/stabilizer.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "perstab/gramian.h"

namespace perstab {
namespace {

constexpr double kRiccatiEscapeNorm = 1e12;
constexpr double kTailShare = 0.01;
constexpr int kCostBoundMaxNodes = 200;

double interpolate_index(const std::vector<double>& times, double t,
                         std::size_t* i) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = std::distance(times.begin(), it);
  k = std::clamp<std::size_t>(k, 1, times.size() - 1) - 1;
  *i = k;
  return (t - times[k]) / (times[k + 1] - times[k]);
}

// One RK4 step matrix for y' = A(t) y over [t, t + h].
MatrixXd rk4_step_matrix(const PeriodicSystem& sys, double t, double h) {
  const int d = sys.dim_state();
  const MatrixXd eye = MatrixXd::Identity(d, d);
  const MatrixXd a0 = sys.A(t);
  const MatrixXd am = sys.A(t + 0.5 * h);
  const MatrixXd a1 = sys.A(t + h);
  const MatrixXd k1 = a0;
  const MatrixXd k2 = am * (eye + 0.5 * h * k1);
  const MatrixXd k3 = am * (eye + 0.5 * h * k2);
  const MatrixXd k4 = a1 * (eye + h * k3);
  return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double squared_norm_trapezoid(const StateTrajectory& traj, std::size_t first,
                              std::size_t last) {
  double sum = 0.0;
  for (std::size_t i = first + 1; i <= last; ++i) {
    sum += 0.5 * (traj.times[i] - traj.times[i - 1]) *
           (traj.states[i].squaredNorm() + traj.states[i - 1].squaredNorm());
  }
  return sum;
}

}  // namespace

MatrixXd PeriodicFeedback::gain(double t, Side side) const {
  const double p = block_period;
  double tau = t - p * std::floor(t / p);
  const double snap = 1e-9 * p;
  if (tau < snap || tau > p - snap) {
    tau = (side == Side::kLeft && t > snap) ? p : 0.0;
  }
  std::size_t i = 0;
  const double w = interpolate_index(times, tau, &i);
  if (w <= 0.0) return gains[i];
  if (w >= 1.0) return gains[i + 1];
  return (1.0 - w) * gains[i] + w * gains[i + 1];
}

GainSchedule PeriodicFeedback::schedule() const {
  return [fb = *this](double t, Side side) { return fb.gain(t, side); };
}

ControlSignal BlockRun::concatenated_control() const {
  std::vector<double> times;
  std::vector<VectorXd> values;
  for (std::size_t j = 0; j < block_controls.size(); ++j) {
    const ControlSignal& u = block_controls[j];
    for (std::size_t i = 0; i < u.times().size(); ++i) {
      // Offsets can round below the previous block's end; clamp so the
      // block seam stays a repeated time.
      double t = u.times()[i] + j * block_period;
      if (!times.empty()) t = std::max(t, times.back());
      times.push_back(t);
      values.push_back(u.values()[i]);
    }
  }
  return ControlSignal(std::move(times), std::move(values));
}

BlockRun block_concatenation(const PeriodicSystem& sys,
                             const DetectabilityCertificate& cert,
                             const VectorXd& z, int k_max) {
  if (k_max < 1) {
    throw std::invalid_argument("block_concatenation: k_max must be >= 1");
  }
  if (z.size() != sys.dim_state()) {
    throw std::invalid_argument("block_concatenation: state dimension mismatch");
  }
  const MinEnergyGenerator generator(sys, cert.n, cert.gamma,
                                     cert.steps_per_period);
  const double block = cert.n * sys.period();

  BlockRun run;
  run.block_period = block;
  run.block_states.push_back(z);
  double control_sq = 0.0;
  double trajectory_sq = 0.0;
  for (int j = 0; j < k_max; ++j) {
    const VectorXd& start = run.block_states.back();
    MinEnergyResult step = generator(start);
    const double offset = j * block;
    const TimeGrid grid = propagator_grid(offset, offset + block, sys.period(),
                                          cert.steps_per_period);
    StateTrajectory piece =
        simulate(sys, start, step.control.shifted(offset), grid);
    trajectory_sq += squared_norm_trapezoid(piece, 0, piece.times.size() - 1);
    control_sq += step.control.squared_l2_norm();
    const std::size_t skip = run.trajectory.times.empty() ? 0 : 1;
    run.trajectory.times.insert(run.trajectory.times.end(),
                                piece.times.begin() + skip, piece.times.end());
    run.trajectory.states.insert(run.trajectory.states.end(),
                                 piece.states.begin() + skip,
                                 piece.states.end());
    run.block_states.push_back(piece.final_state());
    run.block_controls.push_back(std::move(step.control));
  }
  run.concatenated_control_l2 = std::sqrt(control_sq);
  run.trajectory_l2 = std::sqrt(trajectory_sq);
  run.trajectory.control_used = run.concatenated_control();
  return run;
}

LqCost lq_cost(const PeriodicSystem& sys, const VectorXd& z,
               const ControlSignal& u, double horizon, int steps_per_period) {
  const double ratio = horizon / sys.period();
  const double periods = std::round(ratio);
  if (periods < 1.0 || std::abs(ratio - periods) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument(
        "lq_cost: horizon must be a positive multiple of the period");
  }
  const int p = static_cast<int>(periods);
  const TimeGrid grid(0.0, horizon, p * steps_per_period);
  const StateTrajectory traj = simulate(sys, z, u, grid);
  const std::size_t last = traj.times.size() - 1;
  const std::size_t tail_start = last - steps_per_period;
  const double state_total = squared_norm_trapezoid(traj, 0, last);
  const double state_tail = squared_norm_trapezoid(traj, tail_start, last);
  const double control_total = u.squared_l2_norm_between(0.0, horizon);
  const double control_tail =
      u.squared_l2_norm_between(horizon - sys.period(), horizon);

  LqCost out;
  out.cost = state_total + control_total;
  const double tail = state_tail + control_tail;
  out.tail_decaying = out.cost == 0.0 || tail < kTailShare * out.cost;
  out.final_state = traj.final_state();
  return out;
}

CostBoundConstants cost_bound_constants(const PeriodicSystem& sys,
                                        const DetectabilityCertificate& cert) {
  const int steps = cert.n * cert.steps_per_period;
  const double block = cert.n * sys.period();
  const double h = block / steps;

  std::vector<MatrixXd> step_maps(steps);
  for (int j = 0; j < steps; ++j) {
    step_maps[j] = rk4_step_matrix(sys, j * h, h);
  }

  // max over 0 <= τ <= t <= nT of ‖Φ(t,τ)‖, with τ and t on a strided
  // subgrid and the propagation itself on the full grid.
  const int stride = std::max(1, (steps + kCostBoundMaxNodes - 1) /
                                     kCostBoundMaxNodes);
  double max_norm = 1.0;
  for (int i = 0; i < steps; i += stride) {
    MatrixXd phi = MatrixXd::Identity(sys.dim_state(), sys.dim_state());
    for (int j = i; j < steps; ++j) {
      phi = step_maps[j] * phi;
      if ((j + 1 - i) % stride == 0 || j + 1 == steps) {
        max_norm = std::max(max_norm, operator_norm(phi));
      }
    }
  }

  double b_sup = 0.0;
  if (!sys.b_sampler().is_zero()) {
    const int samples = sys.b_sampler().is_constant() ? 1 : 2 * steps;
    for (int j = 0; j < samples; ++j) {
      b_sup = std::max(b_sup, operator_norm(sys.B(0.5 * j * h)));
    }
  }

  CostBoundConstants out;
  out.max_transition_norm = max_norm;
  out.b_sup_norm = b_sup;
  out.factor = 2.0 * block * max_norm * max_norm *
               (1.0 + block * b_sup * b_sup) * (1.0 + cert.c * cert.c);
  return out;
}

double cost_bound(const CostBoundConstants& constants, const BlockRun& run) {
  double sum = 0.0;
  for (const VectorXd& zk : run.block_states) sum += zk.squaredNorm();
  return constants.factor * sum;
}

double cost_bound(const PeriodicSystem& sys,
                  const DetectabilityCertificate& cert, const VectorXd& z,
                  int k_max) {
  cert.validate();
  if (z.isZero(0.0)) return 0.0;
  const BlockRun run = block_concatenation(sys, cert, z, k_max);
  return cost_bound(cost_bound_constants(sys, cert), run);
}

PeriodicFeedback periodic_feedback_from_gramian(const PeriodicSystem& sys,
                                                int n, double gamma,
                                                int steps_per_period) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("periodic feedback: gamma must be positive");
  }
  const GramianSweep sweep = gramian_sweep(sys, n, 0.0, steps_per_period);
  const int d = sys.dim_state();
  const MatrixXd eye = MatrixXd::Identity(d, d);

  PeriodicFeedback fb;
  fb.block_period = sweep.horizon;
  fb.gamma = gamma;
  fb.times = sweep.times;
  fb.gains.reserve(sweep.times.size());
  for (std::size_t i = 0; i < sweep.times.size(); ++i) {
    const MatrixXd& phi = sweep.phi_to_end[i];
    Eigen::LLT<MatrixXd> factor(gamma * eye + sweep.tail[i]);
    if (factor.info() != Eigen::Success ||
        factor.rcond() < std::numeric_limits<double>::epsilon()) {
      throw std::runtime_error(
          "periodic feedback: gamma*I + Q(t) is numerically singular");
    }
    const MatrixXd b = sys.B(sweep.times[i]);
    fb.gains.push_back(-(b.transpose() * phi.transpose()) * factor.solve(phi));
  }
  return fb;
}

double feedback_gamma_floor(const PeriodicSystem& sys, int steps_per_period) {
  if (sys.b_sampler().is_zero()) return 0.0;
  const double h = sys.period() / steps_per_period;
  double b_sq = 0.0;
  for (int j = 0; j < 64; ++j) {
    const double t = sys.period() * j / 64.0;
    b_sq = std::max(b_sq, std::pow(operator_norm(sys.B(t)), 2));
  }
  return 10.0 * h * b_sq;
}

DecayFit closed_loop_decay(const PeriodicSystem& sys,
                           const std::optional<PeriodicFeedback>& fb,
                           const std::vector<VectorXd>& z_samples,
                           double horizon, int steps_per_period) {
  const double block = fb ? fb->block_period : sys.period();
  if (horizon < 5.0 * block * (1.0 - 1e-9)) {
    throw std::invalid_argument(
        "closed_loop_decay: horizon must cover at least 5 block periods");
  }
  const int blocks = static_cast<int>(std::floor(horizon / block + 1e-9));
  const TimeGrid grid =
      propagator_grid(0.0, blocks * block, sys.period(), steps_per_period);
  const int per_block = grid.steps / blocks;

  std::vector<double> xs, ys;
  for (const VectorXd& z : z_samples) {
    const double z_norm = z.norm();
    if (!(z_norm > 0.0)) continue;
    const StateTrajectory traj =
        fb ? simulate_closed_loop(sys, z, fb->schedule(), grid)
           : simulate(sys, z, ControlSignal::Zero(sys.dim_control(),
                                                  blocks * block),
                      grid);
    for (int j = 0; j <= blocks; ++j) {
      const double norm = traj.states[j * per_block].norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) break;
      xs.push_back(j * block);
      ys.push_back(std::log(norm / z_norm));
    }
  }

  DecayFit fit;
  fit.horizon = blocks * block;
  if (xs.size() < 2) return fit;
  const double count = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const double intercept = my - slope * mx;
  fit.omega = -slope;
  double rss = 0.0;
  double log_m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + slope * xs[i]);
    rss += r * r;
    log_m = std::max(log_m, ys[i] + fit.omega * xs[i]);
  }
  fit.residual = std::sqrt(rss / count);
  fit.m_const = std::exp(log_m);
  return fit;
}

double RiccatiResult::w_estimate(const VectorXd& z) const {
  if (p_schedule.empty()) return std::numeric_limits<double>::infinity();
  return z.dot(p_schedule.front() * z);
}

RiccatiResult riccati_periodic(const PeriodicSystem& sys, int periods_max,
                               double tol, int steps_per_period) {
  if (periods_max < 2) {
    throw std::invalid_argument("riccati_periodic: periods_max must be >= 2");
  }
  const int d = sys.dim_state();
  const double period = sys.period();
  const double h = period / steps_per_period;
  const MatrixXd eye = MatrixXd::Identity(d, d);

  // Reversed time σ = -t: dP/dσ = AᵀP + PA - PBBᵀP + I, P(σ=0) = 0.
  auto rhs = [&](double sigma, const MatrixXd& p) -> MatrixXd {
    const double t = -sigma;
    const MatrixXd a = sys.A(t);
    const MatrixXd pb = p * sys.B(t);
    return a.transpose() * p + p * a - pb * pb.transpose() + eye;
  };

  RiccatiResult out;
  MatrixXd p = MatrixXd::Zero(d, d);
  std::vector<MatrixXd> previous, current(steps_per_period + 1);
  for (int k = 1; k <= periods_max; ++k) {
    current[0] = p;
    for (int i = 0; i < steps_per_period; ++i) {
      const double s0 = (k - 1) * period + i * h;
      const MatrixXd k1 = rhs(s0, p);
      const MatrixXd k2 = rhs(s0 + 0.5 * h, p + 0.5 * h * k1);
      const MatrixXd k3 = rhs(s0 + 0.5 * h, p + 0.5 * h * k2);
      const MatrixXd k4 = rhs(s0 + h, p + h * k3);
      p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      p = 0.5 * (p + p.transpose());
      if (!p.allFinite() || p.norm() > kRiccatiEscapeNorm) {
        out.status = RiccatiStatus::kEscape;
        out.periods_used = k;
        return out;
      }
      current[i + 1] = p;
    }
    out.periods_used = k;
    if (!previous.empty()) {
      double diff = 0.0;
      for (int i = 0; i <= steps_per_period; ++i) {
        diff = std::max(diff, (current[i] - previous[i]).norm());
      }
      if (diff < tol) {
        out.status = RiccatiStatus::kConverged;
        break;
      }
    }
    previous = current;
  }
  if (out.status != RiccatiStatus::kConverged) return out;

  // current[i] sits at σ = i·h into the period, i.e. t = T - i·h.
  out.times.resize(steps_per_period + 1);
  out.p_schedule.resize(steps_per_period + 1);
  out.feedback.block_period = period;
  out.feedback.gamma = 0.0;
  out.feedback.times.resize(steps_per_period + 1);
  out.feedback.gains.resize(steps_per_period + 1);
  for (int j = 0; j <= steps_per_period; ++j) {
    const double t = j == steps_per_period ? period : j * h;
    out.times[j] = t;
    out.p_schedule[j] = current[steps_per_period - j];
    out.feedback.times[j] = t;
    out.feedback.gains[j] = -sys.B(t).transpose() * out.p_schedule[j];
  }
  return out;
}

void write_feedback_csv(std::ostream& os, const PeriodicFeedback& fb) {
  const int rows = fb.gains.empty() ? 0 : fb.gains.front().rows();
  const int cols = fb.gains.empty() ? 0 : fb.gains.front().cols();
  os << "time";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) os << ",k_" << (r + 1) << '_' << (c + 1);
  }
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < fb.times.size(); ++i) {
    os << fb.times[i];
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) os << ',' << fb.gains[i](r, c);
    }
    os << '\n';
  }
}

}  // namespace perstab
