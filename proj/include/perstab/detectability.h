#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "perstab/gramian.h"
#include "perstab/propagator.h"
#include "perstab/system_model.h"

namespace perstab {

/// Witness (n, δ, C) of ‖φ_n(0;ψ)‖ <= δ‖ψ‖ + C‖B(·)ᵀφ_n(·;ψ)‖_{L²(0,nT)}.
struct DetectabilityCertificate {
  int n{1};
  double delta{0.0};
  double c{0.0};
  /// Tikhonov weight of the minimum-energy family that produced (δ, C).
  double gamma{1.0};
  int steps_per_period{kDefaultStepsPerPeriod};
  std::string system_label;

  /// Throws std::invalid_argument unless 0 < δ < 1, C > 0, γ > 0, n >= 1.
  void validate() const;
};

struct InequalityReport {
  std::vector<double> margins;
  double min_margin{0.0};
  int samples{0};
  VectorXd worst_psi;
};

struct MinEnergyResult {
  ControlSignal control;
  VectorXd predicted_final;
};

/// Regularized minimum-energy steering over one block [0, nT]:
///   u_z(t) = -B(t)ᵀ Φ(nT,t)ᵀ (γI + Q)⁻¹ Φ(nT,0) z,
///   y(nT; 0, z, u_z) = γ (γI + Q)⁻¹ Φ(nT,0) z.
/// Precomputes the sweep and factorization so repeated calls are cheap.
class MinEnergyGenerator {
 public:
  /// Throws std::runtime_error when γI + Q is numerically singular.
  MinEnergyGenerator(const PeriodicSystem& sys, int n, double gamma,
                     int steps_per_period = kDefaultStepsPerPeriod);

  MinEnergyResult operator()(const VectorXd& z) const;

  const MatrixXd& gramian() const { return q_; }
  const MatrixXd& block_transition() const { return m_; }
  double gamma() const { return gamma_; }
  int n() const { return n_; }

 private:
  int n_;
  double gamma_;
  GramianSweep sweep_;
  std::vector<MatrixXd> b_at_nodes_;
  MatrixXd q_;
  MatrixXd m_;
  Eigen::LLT<MatrixXd> factor_;
};

MinEnergyResult min_energy_control(
    const PeriodicSystem& sys, int n, double gamma, const VectorXd& z,
    int steps_per_period = kDefaultStepsPerPeriod);

struct GammaPoint {
  double gamma{0.0};
  double delta{0.0};
  double c{0.0};
};

/// 25 log-spaced points in [1e-8, 1e2].
std::vector<double> default_gamma_grid();
std::vector<double> log_spaced(double lo, double hi, int points);

/// δ(γ) = ‖γ(γI+Q)⁻¹Φ(nT,0)‖ and C(γ) = ‖Q^{1/2}(γI+Q)⁻¹Φ(nT,0)‖ per γ.
std::vector<GammaPoint> gamma_sweep(
    const PeriodicSystem& sys, int n, const std::vector<double>& gamma_grid,
    int steps_per_period = kDefaultStepsPerPeriod);

/// Certificate with the smallest δ(γ) over the grid, if that δ < 1 - 1e-6.
/// A zero C is reported as 1e-12.
std::optional<DetectabilityCertificate> certificate_search(
    const PeriodicSystem& sys, int n,
    const std::vector<double>& gamma_grid = default_gamma_grid(),
    int steps_per_period = kDefaultStepsPerPeriod);

/// Margins RHS - LHS of the detectability inequality. For k = 1 the
/// certificate constants are used directly; for k > 1 the telescoped form
/// ‖φ_{kn}(0;ψ)‖ <= (√2δ)^k‖ψ‖ + √2·C·‖B(·)ᵀφ_{kn}(·;ψ)‖_{L²(0,knT)} is checked,
/// which needs 2δ² < 1 (std::invalid_argument otherwise).
InequalityReport check_inequality(const PeriodicSystem& sys,
                                  const DetectabilityCertificate& cert, int k,
                                  const std::vector<VectorXd>& psi_samples);

/// Re-derives a certificate valid for the telescoped inequality by
/// searching multiples of cert.n until √2·δ < 1. Returns nullopt when no
/// multiple up to n_max works.
std::optional<DetectabilityCertificate> certificate_for_telescoping(
    const PeriodicSystem& sys, const DetectabilityCertificate& cert,
    int n_max, const std::vector<double>& gamma_grid = default_gamma_grid());

struct WorstCase {
  VectorXd psi;
  double value{0.0};
};

/// Multistart projected gradient ascent of
/// f(ψ) = ‖Φ(nT,0)ᵀψ‖ - c·sqrt(ψᵀQ_nψ) on the unit sphere.
WorstCase worst_case_psi(const PeriodicSystem& sys, int n, double c,
                         int restarts = 8, std::uint64_t seed = 0,
                         int steps_per_period = kDefaultStepsPerPeriod);

/// Same search on precomputed block data (transition Φ(nT,0) and Q_n).
WorstCase worst_case_psi(const MatrixXd& block_transition,
                         const MatrixXd& gramian, double c, int restarts,
                         std::uint64_t seed);

}  // namespace perstab
