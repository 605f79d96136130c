#include "perstab/system_model.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace perstab {
namespace {

double wrap_time(double t, double period) {
  double r = t - period * std::floor(t / period);
  if (r >= period || r < 0.0) r = 0.0;
  return r;
}

void require_finite(const MatrixXd& m, const std::string& what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(what + ": non-finite entries");
  }
}

void require_shape(const MatrixXd& m, int rows, int cols,
                   const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument(
        what + ": dimension mismatch (expected " + std::to_string(rows) +
        "x" + std::to_string(cols) + ", got " + std::to_string(m.rows()) +
        "x" + std::to_string(m.cols()) + ")");
  }
}

const MatrixXd& require_matrix(const SamplerSpec& spec, const std::string& key,
                               int rows, int cols) {
  auto it = spec.matrices.find(key);
  if (it == spec.matrices.end()) {
    throw std::invalid_argument("closed form '" + spec.name +
                                "' requires matrix '" + key + "'");
  }
  require_shape(it->second, rows, cols, spec.name + "." + key);
  require_finite(it->second, spec.name + "." + key);
  return it->second;
}

}  // namespace

SamplerSpec SamplerSpec::Zero() {
  SamplerSpec s;
  s.name = "zero";
  return s;
}

SamplerSpec SamplerSpec::Constant(const MatrixXd& value) {
  SamplerSpec s;
  s.name = "constant";
  s.matrices["value"] = value;
  return s;
}

SamplerSpec SamplerSpec::ScaledIdentitySinSquared(double scale) {
  SamplerSpec s;
  s.name = "scaled_identity_sin_squared";
  s.scale = scale;
  return s;
}

SamplerSpec SamplerSpec::TrigSeries(const MatrixXd& constant,
                                    const MatrixXd& cos, const MatrixXd& sin) {
  SamplerSpec s;
  s.name = "trig_series";
  s.matrices["constant"] = constant;
  s.matrices["cos"] = cos;
  s.matrices["sin"] = sin;
  return s;
}

SamplerSpec SamplerSpec::Tabulated(std::vector<double> times,
                                   std::vector<MatrixXd> samples) {
  SamplerSpec s;
  s.kind = SamplerKind::kTabulatedLinear;
  s.name = "tabulated";
  s.times = std::move(times);
  s.samples = std::move(samples);
  return s;
}

MatrixSampler::MatrixSampler(SamplerSpec spec, int rows, int cols,
                             double period)
    : rows_(rows), cols_(cols), period_(period), kind_(spec.kind),
      name_(spec.name) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("period must be positive and finite");
  }
  auto shared = std::make_shared<const SamplerSpec>(std::move(spec));
  spec_ = shared;
  const SamplerSpec& s = *shared;

  if (s.kind == SamplerKind::kTabulatedLinear) {
    if (s.times.size() < 2 || s.times.size() != s.samples.size()) {
      throw std::invalid_argument(
          "tabulated sampler needs >= 2 nodes and one matrix per node");
    }
    for (std::size_t i = 1; i < s.times.size(); ++i) {
      if (!(s.times[i] > s.times[i - 1])) {
        throw std::invalid_argument("tabulation times must be ascending");
      }
    }
    const double tol = 1e-9 * period;
    if (std::abs(s.times.front()) > tol ||
        std::abs(s.times.back() - period) > tol) {
      throw std::invalid_argument("tabulation does not cover [0, period]");
    }
    for (const auto& m : s.samples) {
      require_shape(m, rows, cols, "tabulated sample");
      require_finite(m, "tabulated sample");
    }
    fn_ = [shared, period](double t) -> MatrixXd {
      const auto& times = shared->times;
      const double tw = wrap_time(t, period);
      auto it = std::upper_bound(times.begin(), times.end(), tw);
      std::ptrdiff_t i = std::distance(times.begin(), it) - 1;
      i = std::clamp<std::ptrdiff_t>(i, 0,
                                     static_cast<std::ptrdiff_t>(times.size()) - 2);
      const double w = (tw - times[i]) / (times[i + 1] - times[i]);
      if (w == 0.0) return shared->samples[i];
      return (1.0 - w) * shared->samples[i] + w * shared->samples[i + 1];
    };
    return;
  }

  if (s.name == "zero") {
    is_zero_ = true;
    is_constant_ = true;
    fn_ = [rows, cols](double) -> MatrixXd {
      return MatrixXd::Zero(rows, cols);
    };
  } else if (s.name == "constant") {
    MatrixXd value = require_matrix(s, "value", rows, cols);
    is_zero_ = value.isZero(0.0);
    is_constant_ = true;
    fn_ = [value](double) -> MatrixXd { return value; };
  } else if (s.name == "scaled_identity_sin_squared") {
    if (rows != cols) {
      throw std::invalid_argument(
          "scaled_identity_sin_squared requires a square operator");
    }
    if (!std::isfinite(s.scale)) {
      throw std::invalid_argument("scaled_identity_sin_squared: non-finite scale");
    }
    const double scale = s.scale;
    is_zero_ = scale == 0.0;
    is_constant_ = is_zero_;
    fn_ = [rows, scale](double t) -> MatrixXd {
      const double st = std::sin(t);
      return (scale * st * st) * MatrixXd::Identity(rows, rows);
    };
  } else if (s.name == "trig_series") {
    MatrixXd c0 = require_matrix(s, "constant", rows, cols);
    MatrixXd cc = require_matrix(s, "cos", rows, cols);
    MatrixXd ss = require_matrix(s, "sin", rows, cols);
    const double omega = 2.0 * std::numbers::pi / period;
    is_constant_ = cc.isZero(0.0) && ss.isZero(0.0);
    is_zero_ = is_constant_ && c0.isZero(0.0);
    fn_ = [c0, cc, ss, omega](double t) -> MatrixXd {
      return c0 + std::cos(omega * t) * cc + std::sin(omega * t) * ss;
    };
  } else {
    throw std::invalid_argument("unknown closed-form sampler '" + s.name + "'");
  }
}

MatrixSampler::MatrixSampler(std::string name, int rows, int cols,
                             double period, std::function<MatrixXd(double)> fn)
    : rows_(rows), cols_(cols), period_(period),
      kind_(SamplerKind::kClosedFormRegistered), name_(std::move(name)),
      fn_(std::move(fn)) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("period must be positive and finite");
  }
}

MatrixXd MatrixSampler::operator()(double t) const {
  // Closed forms are already periodic; wrapping them as well keeps t and
  // t + period bit-identical.
  return fn_(wrap_time(t, period_));
}

PeriodicSystem::PeriodicSystem(int dim_state, int dim_control, double period,
                               MatrixXd a_const, MatrixSampler d,
                               MatrixSampler b, std::string label)
    : dim_state_(dim_state), dim_control_(dim_control), period_(period),
      a_const_(std::move(a_const)), d_(std::move(d)), b_(std::move(b)),
      label_(std::move(label)) {
  if (dim_state <= 0 || dim_control <= 0) {
    throw std::invalid_argument("dimensions must be positive");
  }
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("period must be positive and finite");
  }
  require_shape(a_const_, dim_state, dim_state, "a_const");
  require_finite(a_const_, "a_const");
  if (d_.rows() != dim_state || d_.cols() != dim_state) {
    throw std::invalid_argument("d sampler: dimension mismatch");
  }
  if (b_.rows() != dim_state || b_.cols() != dim_control) {
    throw std::invalid_argument("b sampler: dimension mismatch");
  }
}

MatrixXd PeriodicSystem::A(double t) const { return a_const_ + d_(t); }

PeriodicSystem build_system(Dims dims, double period, const MatrixXd& a_const,
                            const SamplerSpec& d_spec,
                            const SamplerSpec& b_spec, std::string label) {
  if (dims.state <= 0 || dims.control <= 0) {
    throw std::invalid_argument("dimensions must be positive");
  }
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("period must be positive and finite");
  }
  require_shape(a_const, dims.state, dims.state, "a_const");
  require_finite(a_const, "a_const");
  MatrixSampler d(d_spec, dims.state, dims.state, period);
  MatrixSampler b(b_spec, dims.state, dims.control, period);
  // Probe the evaluators once so a closed form with a bad shape fails here.
  for (double t : {0.0, 0.37 * period}) {
    require_shape(d(t), dims.state, dims.state, "d_spec");
    require_finite(d(t), "d_spec");
    require_shape(b(t), dims.state, dims.control, "b_spec");
    require_finite(b(t), "b_spec");
  }
  return PeriodicSystem(dims.state, dims.control, period, a_const,
                        std::move(d), std::move(b), std::move(label));
}

MatrixXd sample_operator(const PeriodicSystem& sys, OperatorPart which,
                         double t) {
  if (t < 0.0 || !std::isfinite(t)) {
    throw std::invalid_argument("sample_operator: t must be finite and >= 0");
  }
  switch (which) {
    case OperatorPart::kAFull:
      return sys.A(t);
    case OperatorPart::kDOnly:
      return sys.D(t);
    case OperatorPart::kB:
      return sys.B(t);
  }
  throw std::invalid_argument("sample_operator: unknown operator part");
}

PeriodicSystem adjoint_injection_system(
    const PeriodicSystem& sys, std::function<MatrixXd(double)> l_sampler) {
  const int n = sys.dim_state();
  const int m = sys.dim_control();
  const double period = sys.period();
  for (int i = 0; i < 8; ++i) {
    const double t = period * (0.03 + 0.117 * i);
    const MatrixXd l0 = l_sampler(t);
    require_shape(l0, n, m, "injection gain L");
    require_finite(l0, "injection gain L");
    const MatrixXd l1 = l_sampler(t + period);
    if ((l0 - l1).norm() > 1e-9 * (1.0 + l0.norm())) {
      throw std::invalid_argument("injection gain L is not period-periodic");
    }
  }
  const PeriodicSystem base = sys;
  MatrixSampler d("output_injection_adjoint", n, n, period,
                  [base, l_sampler](double t) -> MatrixXd {
                    return base.D(t).transpose() +
                           l_sampler(t) * base.B(t).transpose();
                  });
  MatrixSampler b(SamplerSpec::Zero(), n, m, period);
  return PeriodicSystem(n, m, period, sys.a_const().transpose(), std::move(d),
                        std::move(b), sys.label() + ":adjoint_injection");
}

TimeGrid::TimeGrid(double t_start, double t_end, int steps)
    : t_start(t_start), t_end(t_end), steps(steps) {
  if (!(t_end > t_start)) {
    throw std::invalid_argument("TimeGrid: t_end must exceed t_start");
  }
  if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
}

TimeGrid propagator_grid(double t_start, double t_end, double period,
                         int steps_per_period) {
  const double h = period / steps_per_period;
  const double ratio = (t_end - t_start) / h;
  int steps = static_cast<int>(std::ceil(ratio - 1e-9));
  steps = std::max(steps, 1);
  return TimeGrid(t_start, t_end, steps);
}

}  // namespace perstab
