#pragma once

#include <vector>

#include <Eigen/Dense>

#include "perstab/propagator.h"
#include "perstab/system_model.h"

namespace perstab {

/// Q = ∫_{t_start}^{nT} Φ(nT,t) B(t) B(t)ᵀ Φ(nT,t)ᵀ dt, so that
/// ψᵀ Q ψ = ‖B(·)ᵀ φ_n(·; ψ)‖² on (t_start, nT).
struct GramianBundle {
  MatrixXd matrix;
  /// Φ(nT, t_start) on the propagator grid.
  MatrixXd transition;
  double t_start{0.0};
  int n{1};
  int quadrature_nodes{0};
};

/// Backward sweep over [t_start, nT] on a grid with half the propagator step.
/// Node i stores Φ(nT, t_i) and the tail Gramian Q(t_i) over [t_i, nT].
/// Times ascend; the last node is nT where Φ = I and Q = 0.
struct GramianSweep {
  std::vector<double> times;
  std::vector<MatrixXd> phi_to_end;
  std::vector<MatrixXd> tail;
  double horizon{0.0};
};

GramianSweep gramian_sweep(const PeriodicSystem& sys, int n, double t_start,
                           int steps_per_period);

/// Throws std::invalid_argument unless 0 <= t_start < nT.
GramianBundle observability_gramian(
    const PeriodicSystem& sys, int n, double t_start = 0.0,
    int steps_per_period = kDefaultStepsPerPeriod);

/// ∫_0^{nT} Φ(nT,τ) B(τ) u(τ) dτ. `u` must cover [0, nT].
VectorXd control_to_state(const PeriodicSystem& sys, int n,
                          const ControlSignal& u,
                          int steps_per_period = kDefaultStepsPerPeriod);

/// Symmetric square root with eigenvalues above -1e-10 clamped to zero.
/// Throws std::domain_error for more negative eigenvalues.
MatrixXd psd_sqrt(const MatrixXd& q);

/// Largest singular value.
double operator_norm(const MatrixXd& m);

}  // namespace perstab
