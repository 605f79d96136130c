#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "perstab/detectability.h"
#include "perstab/propagator.h"
#include "perstab/system_model.h"

namespace perstab {

/// Gain schedule K(t) sampled on [0, block_period] and extended
/// block_period-periodically. The node at block_period holds the left limit
/// at the end of a block, which may differ from K(0).
struct PeriodicFeedback {
  std::vector<double> times;
  std::vector<MatrixXd> gains;
  double block_period{0.0};
  double gamma{0.0};

  MatrixXd gain(double t, Side side = Side::kRight) const;
  GainSchedule schedule() const;
};

/// Fit of ‖y(t)‖ <= M e^{-ω t} ‖z‖ from block-boundary samples.
struct DecayFit {
  double m_const{1.0};
  double omega{0.0};
  /// Root-mean-square residual of the log-linear least-squares fit.
  double residual{0.0};
  double horizon{0.0};
};

struct BlockRun {
  std::vector<VectorXd> block_states;
  /// Block j's control on its own local window [0, nT].
  std::vector<ControlSignal> block_controls;
  double concatenated_control_l2{0.0};
  double trajectory_l2{0.0};
  double block_period{0.0};
  StateTrajectory trajectory;

  /// ũ(j·nT + t) = u_{j+1}(t), jumps encoded by repeated times.
  ControlSignal concatenated_control() const;
};

/// Applies the certificate's minimum-energy block control afresh on each
/// block [j·nT, (j+1)·nT], simulating the true time-shifted system.
BlockRun block_concatenation(const PeriodicSystem& sys,
                             const DetectabilityCertificate& cert,
                             const VectorXd& z, int k_max);

struct LqCost {
  double cost{0.0};
  bool tail_decaying{true};
  VectorXd final_state;
};

/// ∫_0^horizon ‖y‖² + ‖u‖² dt by trapezoid; tail_decaying means the last
/// period contributes less than 1% of the total. `horizon` must be a
/// multiple of the period (std::invalid_argument otherwise).
LqCost lq_cost(const PeriodicSystem& sys, const VectorXd& z,
               const ControlSignal& u, double horizon,
               int steps_per_period = kDefaultStepsPerPeriod);

/// Block-independent factor of the energy bound:
/// 2nT · max‖Φ(t,τ)‖² · (1 + nT‖B‖²_∞) · (1 + C²).
struct CostBoundConstants {
  double max_transition_norm{0.0};
  double b_sup_norm{0.0};
  double factor{0.0};
};

CostBoundConstants cost_bound_constants(const PeriodicSystem& sys,
                                        const DetectabilityCertificate& cert);

/// factor · Σ_{k=0}^{k_max} ‖z_k‖² for the block states of `run`.
double cost_bound(const CostBoundConstants& constants, const BlockRun& run);

double cost_bound(const PeriodicSystem& sys,
                  const DetectabilityCertificate& cert, const VectorXd& z,
                  int k_max);

/// K(t) = -B(t)ᵀ Φ(nT,t)ᵀ (γI + Q(t))⁻¹ Φ(nT,t) with Q(t) the tail Gramian
/// over [t, nT]. Nodes are spaced at half the propagator step so RK4 stages
/// read exact samples.
PeriodicFeedback periodic_feedback_from_gramian(
    const PeriodicSystem& sys, int n, double gamma,
    int steps_per_period = kDefaultStepsPerPeriod);

/// Smallest γ for which the closed loop under the Gramian feedback stays
/// resolved by the fixed-step integrator: near a block end the gain behaves
/// like ‖B‖²/γ, which is kept below 0.1 / h.
double feedback_gamma_floor(const PeriodicSystem& sys,
                            int steps_per_period = kDefaultStepsPerPeriod);

/// Simulates y' = (A + B K) y (K ≡ 0 without feedback) for each sample and
/// fits log(‖y(j·P)‖/‖z‖) ≈ log M - ω j·P over block boundaries, P the block
/// period (or T). M is the smallest constant dominating every sample under
/// the fitted ω. Requires horizon >= 5·P.
DecayFit closed_loop_decay(const PeriodicSystem& sys,
                           const std::optional<PeriodicFeedback>& fb,
                           const std::vector<VectorXd>& z_samples,
                           double horizon,
                           int steps_per_period = kDefaultStepsPerPeriod);

enum class RiccatiStatus { kConverged, kNotConverged, kEscape };

struct RiccatiResult {
  RiccatiStatus status{RiccatiStatus::kNotConverged};
  int periods_used{0};
  /// P(t) on one period's grid [0, T] (last swept period).
  std::vector<double> times;
  std::vector<MatrixXd> p_schedule;
  PeriodicFeedback feedback;

  /// zᵀ P(0) z.
  double w_estimate(const VectorXd& z) const;
};

/// Backward sweep of P' = -AᵀP - PA + PBBᵀP - I from P = 0 until P repeats
/// over a period within `tol`. ‖P‖ > 1e12 is reported as an escape.
RiccatiResult riccati_periodic(const PeriodicSystem& sys, int periods_max,
                               double tol,
                               int steps_per_period = kDefaultStepsPerPeriod);

/// CSV: time, k_1_1, k_1_2, ... (row-major gain entries).
void write_feedback_csv(std::ostream& os, const PeriodicFeedback& fb);

}  // namespace perstab
