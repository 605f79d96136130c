#include "perstab/detectability.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace perstab {
namespace {

constexpr double kMinCertificateC = 1e-12;
constexpr double kCertificateSlack = 1e-6;

}  // namespace

void DetectabilityCertificate::validate() const {
  if (n < 1) throw std::invalid_argument("certificate: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("certificate: delta must lie in (0, 1)");
  }
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("certificate: c must be positive");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("certificate: gamma must be positive");
  }
}

MinEnergyGenerator::MinEnergyGenerator(const PeriodicSystem& sys, int n,
                                       double gamma, int steps_per_period)
    : n_(n), gamma_(gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("min_energy_control: gamma must be positive");
  }
  sweep_ = gramian_sweep(sys, n, 0.0, steps_per_period);
  q_ = sweep_.tail.front();
  m_ = transition(sys, 0.0, sweep_.horizon, steps_per_period).matrix;
  b_at_nodes_.reserve(sweep_.times.size());
  for (double t : sweep_.times) b_at_nodes_.push_back(sys.B(t));
  const int d = sys.dim_state();
  factor_.compute(gamma * MatrixXd::Identity(d, d) + q_);
  if (factor_.info() != Eigen::Success ||
      factor_.rcond() < std::numeric_limits<double>::epsilon()) {
    throw std::runtime_error(
        "min_energy_control: gamma*I + Q is numerically singular; increase "
        "gamma");
  }
}

MinEnergyResult MinEnergyGenerator::operator()(const VectorXd& z) const {
  if (z.size() != m_.rows()) {
    throw std::invalid_argument("min_energy_control: state dimension mismatch");
  }
  const VectorXd w = factor_.solve(m_ * z);
  std::vector<VectorXd> values(sweep_.times.size());
  for (std::size_t i = 0; i < sweep_.times.size(); ++i) {
    values[i] = -(b_at_nodes_[i].transpose() *
                  (sweep_.phi_to_end[i].transpose() * w));
  }
  return {ControlSignal(sweep_.times, std::move(values)), gamma_ * w};
}

MinEnergyResult min_energy_control(const PeriodicSystem& sys, int n,
                                   double gamma, const VectorXd& z,
                                   int steps_per_period) {
  return MinEnergyGenerator(sys, n, gamma, steps_per_period)(z);
}

std::vector<double> log_spaced(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) {
    throw std::invalid_argument("log_spaced: need 0 < lo <= hi, points >= 1");
  }
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * i / (points - 1));
  }
  return out;
}

std::vector<double> default_gamma_grid() { return log_spaced(1e-8, 1e2, 25); }

std::vector<GammaPoint> gamma_sweep(const PeriodicSystem& sys, int n,
                                    const std::vector<double>& gamma_grid,
                                    int steps_per_period) {
  if (gamma_grid.empty()) {
    throw std::invalid_argument("gamma_sweep: gamma grid is empty");
  }
  const GramianBundle bundle =
      observability_gramian(sys, n, 0.0, steps_per_period);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(bundle.matrix);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("gamma_sweep: eigendecomposition failed");
  }
  const MatrixXd& v = es.eigenvectors();
  const VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  const MatrixXd vt_m = v.transpose() * bundle.transition;

  std::vector<GammaPoint> out;
  out.reserve(gamma_grid.size());
  for (double gamma : gamma_grid) {
    if (!(gamma > 0.0)) {
      throw std::invalid_argument("gamma_sweep: gamma values must be positive");
    }
    VectorXd residual(lambda.size()), effort(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      residual(i) = gamma / (gamma + lambda(i));
      effort(i) = std::sqrt(lambda(i)) / (gamma + lambda(i));
    }
    // Left factor V is orthogonal and drops out of the operator norm.
    const double delta = operator_norm(residual.asDiagonal() * vt_m);
    const double c = operator_norm(effort.asDiagonal() * vt_m);
    out.push_back({gamma, delta, c});
  }
  return out;
}

std::optional<DetectabilityCertificate> certificate_search(
    const PeriodicSystem& sys, int n, const std::vector<double>& gamma_grid,
    int steps_per_period) {
  const std::vector<GammaPoint> sweep =
      gamma_sweep(sys, n, gamma_grid, steps_per_period);
  auto best = std::min_element(
      sweep.begin(), sweep.end(),
      [](const GammaPoint& a, const GammaPoint& b) { return a.delta < b.delta; });
  if (!(best->delta < 1.0 - kCertificateSlack)) return std::nullopt;
  DetectabilityCertificate cert;
  cert.n = n;
  cert.delta = best->delta;
  cert.c = std::max(best->c, kMinCertificateC);
  cert.gamma = best->gamma;
  cert.steps_per_period = steps_per_period;
  cert.system_label = sys.label();
  // δ can underflow to exactly zero for a nilpotent-like block map.
  cert.delta = std::max(cert.delta, std::numeric_limits<double>::min());
  return cert;
}

InequalityReport check_inequality(const PeriodicSystem& sys,
                                  const DetectabilityCertificate& cert, int k,
                                  const std::vector<VectorXd>& psi_samples) {
  cert.validate();
  if (k < 1) throw std::invalid_argument("check_inequality: k must be >= 1");
  const double root2 = std::sqrt(2.0);
  if (k > 1 && !(root2 * cert.delta < 1.0)) {
    throw std::invalid_argument(
        "check_inequality: k > 1 requires 2*delta^2 < 1");
  }
  const GramianBundle bundle =
      observability_gramian(sys, k * cert.n, 0.0, cert.steps_per_period);
  const double delta_k = (k == 1) ? cert.delta : std::pow(root2 * cert.delta, k);
  const double c_k = (k == 1) ? cert.c : root2 * cert.c;

  InequalityReport report;
  report.samples = static_cast<int>(psi_samples.size());
  report.margins.reserve(psi_samples.size());
  report.min_margin = std::numeric_limits<double>::infinity();
  for (const VectorXd& psi : psi_samples) {
    if (psi.size() != sys.dim_state()) {
      throw std::invalid_argument("check_inequality: psi dimension mismatch");
    }
    if (psi.isZero(0.0)) {
      throw std::invalid_argument("check_inequality: psi must be nonzero");
    }
    const double lhs = (bundle.transition.transpose() * psi).norm();
    const double observed =
        std::sqrt(std::max(0.0, psi.dot(bundle.matrix * psi)));
    const double margin = delta_k * psi.norm() + c_k * observed - lhs;
    report.margins.push_back(margin);
    if (margin < report.min_margin) {
      report.min_margin = margin;
      report.worst_psi = psi;
    }
  }
  return report;
}

std::optional<DetectabilityCertificate> certificate_for_telescoping(
    const PeriodicSystem& sys, const DetectabilityCertificate& cert,
    int n_max, const std::vector<double>& gamma_grid) {
  if (std::sqrt(2.0) * cert.delta < 1.0) return cert;
  for (int n = 2 * cert.n; n <= n_max; n += cert.n) {
    auto candidate =
        certificate_search(sys, n, gamma_grid, cert.steps_per_period);
    if (candidate && std::sqrt(2.0) * candidate->delta < 1.0) return candidate;
  }
  return std::nullopt;
}

WorstCase worst_case_psi(const MatrixXd& block_transition,
                         const MatrixXd& gramian, double c, int restarts,
                         std::uint64_t seed) {
  if (restarts < 1) {
    throw std::invalid_argument("worst_case_psi: restarts must be >= 1");
  }
  constexpr double kStep = 0.1;
  constexpr int kIterations = 500;
  const Eigen::Index d = block_transition.rows();
  const MatrixXd mmt = block_transition * block_transition.transpose();

  auto objective = [&](const VectorXd& psi) {
    const double obs = std::sqrt(std::max(0.0, psi.dot(gramian * psi)));
    return (block_transition.transpose() * psi).norm() - c * obs;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  WorstCase best;
  best.value = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    VectorXd psi(d);
    for (Eigen::Index i = 0; i < d; ++i) psi(i) = normal(rng);
    if (psi.norm() == 0.0) psi(0) = 1.0;
    psi.normalize();
    for (int it = 0; it <= kIterations; ++it) {
      const double value = objective(psi);
      if (value > best.value) {
        best.value = value;
        best.psi = psi;
      }
      if (it == kIterations) break;
      VectorXd grad = VectorXd::Zero(d);
      const double lhs = (block_transition.transpose() * psi).norm();
      if (lhs > 0.0) grad += mmt * psi / lhs;
      const double obs = std::sqrt(std::max(0.0, psi.dot(gramian * psi)));
      if (obs > 0.0) grad -= (c / obs) * (gramian * psi);
      VectorXd next = psi + kStep * grad;
      const double norm = next.norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) break;
      psi = next / norm;
    }
  }
  return best;
}

WorstCase worst_case_psi(const PeriodicSystem& sys, int n, double c,
                         int restarts, std::uint64_t seed,
                         int steps_per_period) {
  const GramianBundle bundle =
      observability_gramian(sys, n, 0.0, steps_per_period);
  return worst_case_psi(bundle.transition, bundle.matrix, c, restarts, seed);
}

}  // namespace perstab
