#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "perstab/detectability.h"
#include "perstab/propagator.h"
#include "perstab/system_model.h"

namespace perstab {

/// Coordinates of a state y(x) = Σ c_k e_k(x) on (0, π).
///   kOrthonormal: e_k = √(2/π) sin kx, Euclidean norm = L² norm.
///   kPaperSin:    e_k = sin kx, L² norm² = (π/2) Σ c_k².
enum class HeatNormalization { kOrthonormal, kPaperSin };

struct HeatConfig {
  int n_modes{8};
  int steps_per_period{kDefaultStepsPerPeriod};
  HeatNormalization normalization{HeatNormalization::kOrthonormal};
  /// The control enters through sin(control_mode · x).
  int control_mode{1};
};

/// Galerkin truncation of y_t = (Δ + 3 sin²t) y + u(t) sin(mx) on (0, π)
/// with Dirichlet data: T = π, A = diag(-k²), D(t) = 3 sin²t · I. The
/// control column is √(π/2) e_m (orthonormal) or e_m (paper_sin).
/// Throws std::invalid_argument unless n_modes >= 2 and
/// 1 <= control_mode <= n_modes.
PeriodicSystem build_heat_galerkin(const HeatConfig& cfg);

/// Conversions between the two coordinate systems.
VectorXd heat_sin_to_orthonormal(const VectorXd& a);
VectorXd heat_orthonormal_to_sin(const VectorXd& c);
/// ∫₀^π y(x)² dx for y = Σ a_k sin kx.
double heat_sin_l2_norm_sq(const VectorXd& a);

/// a(t) = e^{t/2 - (3/4) sin 2t} a(0): uncontrolled mode-1 coefficient.
double heat_mode1_closed_form(double t, double a0);

struct HeatCheck {
  std::string name;
  bool pass{false};
  /// Headline number for the check, described by `evidence_label`.
  double evidence{0.0};
  std::string evidence_label;
  std::string detail;
};

struct HeatReport {
  HeatConfig config;
  HeatCheck mode1_growth;
  HeatCheck mode2_invariance;
  HeatCheck paper_certificate;
  HeatCheck bounds_54;
  HeatCheck bounds_55_56;
  /// Fitted rate of the uncontrolled system; about -1/2.
  double uncontrolled_omega{0.0};
  /// Best certificate from the default γ grid at n = 1, if any.
  std::optional<DetectabilityCertificate> found_certificate;
  /// Uncontrolled run from e_1 over [0, 3π].
  StateTrajectory uncontrolled_trace;

  std::vector<HeatCheck> checks() const;
  bool all_pass() const;
};

/// Runs the five example checks. Failures are report entries, not errors.
HeatReport heat_reference_report(const HeatConfig& cfg = HeatConfig{});

/// One line per check: PASS|FAIL name evidence_label=value.
void write_heat_table(std::ostream& os, const HeatReport& report);

/// CSV: time, closed_form_mode1, mode_1..mode_n of the uncontrolled trace.
void write_heat_trace_csv(std::ostream& os, const HeatReport& report);

}  // namespace perstab
