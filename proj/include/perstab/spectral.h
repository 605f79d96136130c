#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "perstab/propagator.h"
#include "perstab/system_model.h"

namespace perstab {

struct EigenCluster {
  std::complex<double> value;
  int multiplicity{1};
};

/// Floquet data of the one-period map Φ(T, 0).
struct SpectralSummary {
  MatrixXd monodromy;
  /// Sorted by modulus, descending; repeated per algebraic multiplicity.
  std::vector<std::complex<double>> eigenvalues;
  /// Eigenvalues grouped at relative distance 1e-6.
  std::vector<EigenCluster> clusters;
  /// Largest modulus below the unit circle; absent if every |λ| >= 1.
  std::optional<double> delta_bar;
  /// Number of eigenvalues (with multiplicity) with |λ| >= 1.
  int n_unstable_dim{0};
  /// Spectral projector onto the unstable invariant subspace.
  MatrixXd projector;
  /// Orthonormal columns spanning the unstable invariant subspace.
  MatrixXd unstable_basis;
  /// Some |λ| lies within 1e-9 of 1 or a cluster straddles the circle.
  bool borderline{false};
};

SpectralSummary poincare_spectrum(
    const PeriodicSystem& sys, int steps_per_period = kDefaultStepsPerPeriod);

/// Same analysis for an explicitly given one-period map.
SpectralSummary spectrum_of_monodromy(const MatrixXd& monodromy);

/// I - (1/2πi)∮_{|λ|=rho} (λI - M)⁻¹ dλ by the trapezoid rule in angle.
/// Requires δ̄ < rho < 1 and contour_nodes >= 64.
MatrixXd kato_projection(const PeriodicSystem& sys, double rho,
                         int contour_nodes,
                         int steps_per_period = kDefaultStepsPerPeriod);
MatrixXd kato_projection(const MatrixXd& monodromy, double rho,
                         int contour_nodes);

struct UniqueContinuationResult {
  bool detectable{true};
  /// Smallest eigenvalue of the Gramian restricted to PᵀY_u over ‖Q‖;
  /// +inf when n₀ = 0.
  double margin{0.0};
  int n0{0};
  bool borderline{false};
};

/// Positive definiteness of ξ ↦ ξᵀ Q_{n₀} ξ on PᵀY_u, with Q_{n₀} the
/// observability Gramian over [0, n₀T].
UniqueContinuationResult unique_continuation_test(
    const PeriodicSystem& sys, double tol,
    int steps_per_period = kDefaultStepsPerPeriod);

/// PBH test: for each eigenvalue λ of `a` with Re λ >= 0 the stacked matrix
/// [a - λI; bᵀ] must have full column rank (singular values above
/// tol · max(1, σ_max)). Pass a = Aᵀ, b = B to test z' = Aᵀz, w = Bᵀz.
bool hautus_detectability(const MatrixXd& a, const MatrixXd& b, double tol);

}  // namespace perstab
