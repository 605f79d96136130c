#include "perstab/spectral.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <lapacke.h>

#include "perstab/gramian.h"

namespace perstab {
namespace {

constexpr double kUnitCircleSlack = 1e-9;
constexpr double kClusterGap = 1e-6;

lapack_logical select_unstable(const double* re, const double* im) {
  return std::hypot(*re, *im) >= 1.0 - kUnitCircleSlack;
}

bool is_unstable(std::complex<double> z) {
  return std::abs(z) >= 1.0 - kUnitCircleSlack;
}

}  // namespace

SpectralSummary spectrum_of_monodromy(const MatrixXd& monodromy) {
  if (monodromy.rows() != monodromy.cols() || monodromy.rows() == 0) {
    throw std::invalid_argument("spectrum: monodromy must be square");
  }
  if (!monodromy.allFinite()) {
    throw std::invalid_argument("spectrum: monodromy has non-finite entries");
  }
  const lapack_int d = static_cast<lapack_int>(monodromy.rows());
  MatrixXd t = monodromy;
  MatrixXd z(d, d);
  VectorXd wr(d), wi(d);
  lapack_int sdim = 0;
  const lapack_int info =
      LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'S', select_unstable, d, t.data(),
                    d, &sdim, wr.data(), wi.data(), z.data(), d);
  SpectralSummary out;
  if (info < 0 || (info > 0 && info <= d)) {
    throw std::runtime_error("spectrum: Schur decomposition failed");
  }
  // info == d+1 or d+2: reordering was ill-conditioned or rounding changed
  // the selection; the result is usable but sits on the boundary.
  if (info > d) out.borderline = true;

  out.monodromy = monodromy;
  for (lapack_int i = 0; i < d; ++i) {
    out.eigenvalues.emplace_back(wr(i), wi(i));
  }
  std::stable_sort(out.eigenvalues.begin(), out.eigenvalues.end(),
                   [](std::complex<double> a, std::complex<double> b) {
                     return std::abs(a) > std::abs(b);
                   });

  std::vector<bool> assigned(out.eigenvalues.size(), false);
  for (std::size_t i = 0; i < out.eigenvalues.size(); ++i) {
    if (assigned[i]) continue;
    EigenCluster cluster{out.eigenvalues[i], 0};
    bool any_unstable = false, any_stable = false;
    for (std::size_t j = i; j < out.eigenvalues.size(); ++j) {
      if (assigned[j]) continue;
      const double scale = std::max({std::abs(out.eigenvalues[i]),
                                     std::abs(out.eigenvalues[j]),
                                     std::numeric_limits<double>::min()});
      if (std::abs(out.eigenvalues[i] - out.eigenvalues[j]) <=
          kClusterGap * scale) {
        assigned[j] = true;
        ++cluster.multiplicity;
        (is_unstable(out.eigenvalues[j]) ? any_unstable : any_stable) = true;
      }
    }
    if (any_unstable && any_stable) out.borderline = true;
    out.clusters.push_back(cluster);
  }

  for (const auto& ev : out.eigenvalues) {
    const double mod = std::abs(ev);
    if (std::abs(mod - 1.0) <= kUnitCircleSlack) out.borderline = true;
    if (is_unstable(ev)) {
      ++out.n_unstable_dim;
    } else {
      out.delta_bar = std::max(out.delta_bar.value_or(0.0), mod);
    }
  }

  const int k = static_cast<int>(sdim);
  out.n_unstable_dim = k;
  out.unstable_basis = z.leftCols(k);
  MatrixXd pi = MatrixXd::Zero(d, d);
  pi.topLeftCorner(k, k).setIdentity();
  if (k > 0 && k < d) {
    // T11 X - X T22 = T12 block-diagonalizes the Schur form; the projector
    // in Schur coordinates is [[I, X], [0, 0]].
    MatrixXd t11 = t.topLeftCorner(k, k);
    MatrixXd t22 = t.bottomRightCorner(d - k, d - k);
    MatrixXd x = t.topRightCorner(k, d - k);
    double scale = 1.0;
    const lapack_int sinfo = LAPACKE_dtrsyl(
        LAPACK_COL_MAJOR, 'N', 'N', -1, k, d - k, t11.data(), k, t22.data(),
        d - k, x.data(), k, &scale);
    if (sinfo < 0) throw std::runtime_error("spectrum: Sylvester solve failed");
    if (sinfo == 1) out.borderline = true;
    pi.topRightCorner(k, d - k) = x / scale;
  }
  out.projector = z * pi * z.transpose();
  return out;
}

SpectralSummary poincare_spectrum(const PeriodicSystem& sys,
                                  int steps_per_period) {
  return spectrum_of_monodromy(
      transition(sys, 0.0, sys.period(), steps_per_period).matrix);
}

MatrixXd kato_projection(const MatrixXd& monodromy, double rho,
                         int contour_nodes) {
  if (contour_nodes < 64) {
    throw std::invalid_argument("kato_projection: contour_nodes must be >= 64");
  }
  const SpectralSummary summary = spectrum_of_monodromy(monodromy);
  const double lower = summary.delta_bar.value_or(0.0);
  if (!(rho > lower && rho < 1.0)) {
    throw std::invalid_argument(
        "kato_projection: rho must lie strictly between delta_bar and 1");
  }
  const Eigen::Index d = monodromy.rows();
  const Eigen::MatrixXcd m = monodromy.cast<std::complex<double>>();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(d, d);
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
  // λ = ρe^{iθ}, dλ = iλ dθ, so (1/2πi)∮ R(λ) dλ = (1/2π)∫ λ R(λ) dθ.
  for (int j = 0; j < contour_nodes; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / contour_nodes;
    const std::complex<double> lambda = std::polar(rho, theta);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(lambda * eye - m);
    if (!(lu.rcond() > 1e-14)) {
      throw std::runtime_error(
          "kato_projection: resolvent is singular on the contour");
    }
    acc += lambda * lu.solve(eye);
  }
  acc /= static_cast<double>(contour_nodes);
  const double scale = std::max(1.0, acc.cwiseAbs().maxCoeff());
  if (acc.imag().cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::runtime_error(
        "kato_projection: contour integral has a non-negligible imaginary "
        "part");
  }
  return MatrixXd::Identity(d, d) - acc.real();
}

MatrixXd kato_projection(const PeriodicSystem& sys, double rho,
                         int contour_nodes, int steps_per_period) {
  return kato_projection(
      transition(sys, 0.0, sys.period(), steps_per_period).matrix, rho,
      contour_nodes);
}

UniqueContinuationResult unique_continuation_test(const PeriodicSystem& sys,
                                                  double tol,
                                                  int steps_per_period) {
  const SpectralSummary summary = poincare_spectrum(sys, steps_per_period);
  UniqueContinuationResult out;
  out.n0 = summary.n_unstable_dim;
  out.borderline = summary.borderline;
  if (out.n0 == 0) {
    out.detectable = true;
    out.margin = std::numeric_limits<double>::infinity();
    return out;
  }
  const GramianBundle bundle =
      observability_gramian(sys, out.n0, 0.0, steps_per_period);
  const double q_norm = operator_norm(bundle.matrix);
  if (!(q_norm > 0.0)) {
    out.detectable = false;
    out.margin = 0.0;
    return out;
  }
  const MatrixXd span = summary.projector.transpose() * summary.unstable_basis;
  Eigen::HouseholderQR<MatrixXd> qr(span);
  const MatrixXd basis =
      qr.householderQ() * MatrixXd::Identity(span.rows(), span.cols());
  const MatrixXd restricted = basis.transpose() * bundle.matrix * basis;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      0.5 * (restricted + restricted.transpose()), Eigen::EigenvaluesOnly);
  out.margin = es.eigenvalues().minCoeff() / q_norm;
  out.detectable = out.margin > tol;
  return out;
}

bool hautus_detectability(const MatrixXd& a, const MatrixXd& b, double tol) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("hautus_detectability: a must be square");
  }
  if (b.rows() != a.rows()) {
    throw std::invalid_argument("hautus_detectability: b rows must match a");
  }
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("hautus_detectability: eigensolver failed");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (lambda.real() < 0.0) continue;
    Eigen::MatrixXcd stacked(n + b.cols(), n);
    stacked.topRows(n) = a.cast<std::complex<double>>() -
                         lambda * Eigen::MatrixXcd::Identity(n, n);
    stacked.bottomRows(b.cols()) = b.transpose().cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked);
    const auto& sv = svd.singularValues();
    const double threshold = tol * std::max(1.0, sv(0));
    if (sv(n - 1) <= threshold) return false;
  }
  return true;
}

}  // namespace perstab
