#include "perstab/gramian.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perstab {

GramianSweep gramian_sweep(const PeriodicSystem& sys, int n, double t_start,
                           int steps_per_period) {
  if (n < 1) throw std::invalid_argument("gramian: n must be >= 1");
  if (steps_per_period < 16) {
    throw std::invalid_argument("gramian: steps_per_period must be >= 16");
  }
  const double horizon = n * sys.period();
  if (!(t_start >= 0.0) || !(t_start < horizon)) {
    throw std::invalid_argument("gramian: requires 0 <= t_start < nT");
  }
  const int d = sys.dim_state();
  const TimeGrid coarse =
      propagator_grid(t_start, horizon, sys.period(), steps_per_period);
  const int steps = 2 * coarse.steps;
  const double length = horizon - t_start;
  const double hs = length / steps;

  // In reversed time σ = nT - t:
  //   X' = A(nT-σ)ᵀ X,            X(0) = I       (X = Φ(nT, nT-σ)ᵀ)
  //   G' = Xᵀ B(nT-σ) B(nT-σ)ᵀ X,  G(0) = 0       (G = tail Gramian)
  // integrated jointly by RK4 so the quadrature inherits fourth order.
  const bool no_input = sys.b_sampler().is_zero();
  auto rhs = [&](double sigma, const MatrixXd& x, MatrixXd& dx, MatrixXd& dg) {
    const double t = std::max(0.0, horizon - sigma);
    dx.noalias() = sys.A(t).transpose() * x;
    if (no_input) {
      dg.setZero(d, d);
    } else {
      const MatrixXd bx = sys.B(t).transpose() * x;
      dg.noalias() = bx.transpose() * bx;
    }
  };

  std::vector<MatrixXd> xs(steps + 1), gs(steps + 1);
  MatrixXd x = MatrixXd::Identity(d, d);
  MatrixXd g = MatrixXd::Zero(d, d);
  xs[0] = x;
  gs[0] = g;
  MatrixXd kx1(d, d), kx2(d, d), kx3(d, d), kx4(d, d);
  MatrixXd kg1(d, d), kg2(d, d), kg3(d, d), kg4(d, d);
  for (int k = 0; k < steps; ++k) {
    const double s0 = k * hs;
    rhs(s0, x, kx1, kg1);
    rhs(s0 + 0.5 * hs, x + (0.5 * hs) * kx1, kx2, kg2);
    rhs(s0 + 0.5 * hs, x + (0.5 * hs) * kx2, kx3, kg3);
    rhs(s0 + hs, x + hs * kx3, kx4, kg4);
    x += (hs / 6.0) * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    g += (hs / 6.0) * (kg1 + 2.0 * kg2 + 2.0 * kg3 + kg4);
    xs[k + 1] = x;
    gs[k + 1] = g;
  }

  GramianSweep out;
  out.horizon = horizon;
  out.times.resize(steps + 1);
  out.phi_to_end.resize(steps + 1);
  out.tail.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    const int r = steps - i;
    out.times[i] = (r == 0) ? horizon : (i == 0 ? t_start : horizon - r * hs);
    out.phi_to_end[i] = xs[r].transpose();
    out.tail[i] = 0.5 * (gs[r] + gs[r].transpose());
  }
  return out;
}

GramianBundle observability_gramian(const PeriodicSystem& sys, int n,
                                    double t_start, int steps_per_period) {
  const GramianSweep sweep = gramian_sweep(sys, n, t_start, steps_per_period);
  GramianBundle out;
  out.matrix = sweep.tail.front();
  out.transition =
      transition(sys, t_start, sweep.horizon, steps_per_period).matrix;
  out.t_start = t_start;
  out.n = n;
  out.quadrature_nodes = static_cast<int>(sweep.times.size());
  return out;
}

VectorXd control_to_state(const PeriodicSystem& sys, int n,
                          const ControlSignal& u, int steps_per_period) {
  if (u.dim() != sys.dim_control()) {
    throw std::invalid_argument("control_to_state: control dimension mismatch");
  }
  const double horizon = n * sys.period();
  const double tol = 1e-9 * horizon;
  if (u.t_begin() > tol || u.t_end() < horizon - tol) {
    throw std::invalid_argument(
        "control_to_state: control horizon does not cover [0, nT]");
  }
  const GramianSweep sweep = gramian_sweep(sys, n, 0.0, steps_per_period);
  // Composite Simpson over panels [t_2k, t_2k+2] of the half-step sweep.
  VectorXd acc = VectorXd::Zero(sys.dim_state());
  auto integrand = [&](std::size_t i, Side side) -> VectorXd {
    const double t = sweep.times[i];
    return sweep.phi_to_end[i] * (sys.B(t) * u.value(t, side));
  };
  for (std::size_t i = 0; i + 2 < sweep.times.size(); i += 2) {
    const double width = sweep.times[i + 2] - sweep.times[i];
    acc += (width / 6.0) * (integrand(i, Side::kRight) +
                            4.0 * integrand(i + 1, Side::kRight) +
                            integrand(i + 2, Side::kLeft));
  }
  return acc;
}

MatrixXd psd_sqrt(const MatrixXd& q) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (q + q.transpose()));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("psd_sqrt: eigendecomposition failed");
  }
  VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10 * scale) {
      throw std::domain_error("psd_sqrt: matrix is not positive semidefinite");
    }
    ev(i) = std::sqrt(std::max(0.0, ev(i)));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double operator_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace perstab
