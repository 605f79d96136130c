#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace perstab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// How a matrix-valued function of time is represented.
enum class SamplerKind { kClosedFormRegistered, kTabulatedLinear };

/// Serializable description of a matrix-valued, period-wrapped function.
///
/// Registered closed forms (all with angular frequency 2π/period where
/// relevant):
///   - "zero":                         0
///   - "constant":                     matrices["value"]
///   - "scaled_identity_sin_squared":  scale · sin²(t) · I
///   - "trig_series":                  matrices["constant"]
///                                     + matrices["cos"] · cos(2πt/T)
///                                     + matrices["sin"] · sin(2πt/T)
///
/// Tabulated specs carry ascending `times` covering [0, period] and one
/// matrix per time; values in between are linearly interpolated.
struct SamplerSpec {
  SamplerKind kind{SamplerKind::kClosedFormRegistered};
  std::string name;
  double scale{0.0};
  std::map<std::string, MatrixXd> matrices;
  std::vector<double> times;
  std::vector<MatrixXd> samples;

  static SamplerSpec Zero();
  static SamplerSpec Constant(const MatrixXd& value);
  static SamplerSpec ScaledIdentitySinSquared(double scale);
  static SamplerSpec TrigSeries(const MatrixXd& constant, const MatrixXd& cos,
                                const MatrixXd& sin);
  static SamplerSpec Tabulated(std::vector<double> times,
                               std::vector<MatrixXd> samples);
};

/// A validated, immutable matrix-valued function of time with periodic
/// extension. Evaluation accepts any real t and wraps it into [0, period).
class MatrixSampler {
 public:
  MatrixSampler(SamplerSpec spec, int rows, int cols, double period);

  /// Wraps an arbitrary evaluator. The result is not serializable.
  MatrixSampler(std::string name, int rows, int cols, double period,
                std::function<MatrixXd(double)> fn);

  MatrixXd operator()(double t) const;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  SamplerKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  /// Null for derived samplers built from an evaluator.
  const SamplerSpec* spec() const { return spec_.get(); }
  /// True when the sampler is identically zero by construction.
  bool is_zero() const { return is_zero_; }
  /// True when the sampler does not depend on t by construction.
  bool is_constant() const { return is_constant_; }

 private:
  int rows_;
  int cols_;
  double period_;
  SamplerKind kind_;
  std::string name_;
  std::shared_ptr<const SamplerSpec> spec_;
  std::function<MatrixXd(double)> fn_;
  bool is_zero_{false};
  bool is_constant_{false};
};

/// Finite-dimensional realization of y' = (A + D(t)) y + B(t) u with
/// D and B periodic of period T.
class PeriodicSystem {
 public:
  PeriodicSystem(int dim_state, int dim_control, double period,
                 MatrixXd a_const, MatrixSampler d, MatrixSampler b,
                 std::string label);

  int dim_state() const { return dim_state_; }
  int dim_control() const { return dim_control_; }
  double period() const { return period_; }
  const MatrixXd& a_const() const { return a_const_; }
  const MatrixSampler& d_sampler() const { return d_; }
  const MatrixSampler& b_sampler() const { return b_; }
  const std::string& label() const { return label_; }

  /// A(t) = A + D(t); t is wrapped periodically.
  MatrixXd A(double t) const;
  MatrixXd D(double t) const { return d_(t); }
  MatrixXd B(double t) const { return b_(t); }

 private:
  int dim_state_;
  int dim_control_;
  double period_;
  MatrixXd a_const_;
  MatrixSampler d_;
  MatrixSampler b_;
  std::string label_;
};

struct Dims {
  int state{0};
  int control{0};
};

/// Validates and assembles a system. Throws std::invalid_argument on
/// dimension mismatch, non-positive period, tabulations not covering
/// [0, period], non-finite entries or unknown closed-form names.
PeriodicSystem build_system(Dims dims, double period, const MatrixXd& a_const,
                            const SamplerSpec& d_spec,
                            const SamplerSpec& b_spec, std::string label = "");

enum class OperatorPart { kAFull, kDOnly, kB };

/// Evaluates A(t), D(t) or B(t). Throws std::invalid_argument for t < 0.
MatrixXd sample_operator(const PeriodicSystem& sys, OperatorPart which,
                         double t);

/// The output-injection system z' = [A(t)ᵀ + L(t)B(t)ᵀ] z with zero control
/// matrix. L must be dim_state × dim_control and T-periodic; periodicity is
/// spot-checked on a fixed set of times.
PeriodicSystem adjoint_injection_system(
    const PeriodicSystem& sys, std::function<MatrixXd(double)> l_sampler);

/// Uniform grid on [t_start, t_end].
struct TimeGrid {
  double t_start{0.0};
  double t_end{1.0};
  int steps{1};

  TimeGrid(double t_start, double t_end, int steps);
  double step() const { return (t_end - t_start) / steps; }
  double node(int j) const { return t_start + j * step(); }
};

/// Grid on [t_start, t_end] whose step is (approximately) period /
/// steps_per_period; the step count is rounded up so the step never exceeds
/// that value.
TimeGrid propagator_grid(double t_start, double t_end, double period,
                         int steps_per_period);

}  // namespace perstab
