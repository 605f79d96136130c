#include "perstab/builtin_systems.h"

#include <random>

#include "perstab/heat_example.h"

namespace perstab {
namespace {

constexpr std::string_view kPrefix = "builtin:";

PeriodicSystem scalar_system(double a, double b, const std::string& label) {
  return build_system({1, 1}, 1.0, MatrixXd::Constant(1, 1, a),
                      SamplerSpec::Zero(),
                      b == 0.0 ? SamplerSpec::Zero()
                               : SamplerSpec::Constant(MatrixXd::Constant(1, 1, b)),
                      label);
}

MatrixXd normal_matrix(std::mt19937_64& rng, int rows, int cols, double sd) {
  std::normal_distribution<double> normal(0.0, sd);
  MatrixXd m(rows, cols);
  // Fill column by column so the draw order is fixed.
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"heat8",         "heat16",          "heat8-sin2x",
          "scalar-unstable", "scalar-stable", "unstable-uncontrolled",
          "random-3d"};
}

std::optional<PeriodicSystem> builtin_system(const std::string& name_in,
                                             std::uint64_t seed) {
  std::string name = name_in;
  if (name.starts_with(kPrefix)) name = name.substr(kPrefix.size());
  if (name == "heat8") return build_heat_galerkin({.n_modes = 8});
  if (name == "heat16") return build_heat_galerkin({.n_modes = 16});
  if (name == "heat8-sin2x") {
    return build_heat_galerkin({.n_modes = 8, .control_mode = 2});
  }
  if (name == "scalar-unstable") return scalar_system(1.0, 1.0, name);
  if (name == "scalar-stable") return scalar_system(-1.0, 1.0, name);
  if (name == "unstable-uncontrolled") return scalar_system(1.0, 0.0, name);
  if (name == "random-3d") return random_3d_system(seed).sys;
  return std::nullopt;
}

RandomSystem random_3d_system(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double period = 0.5 + 1.5 * unit(rng);
  const int m = unit(rng) < 0.5 ? 1 : 2;
  const std::string label = "random-3d-" + std::to_string(seed);

  RandomKind kind = RandomKind::kGeneric;
  if (seed % 4 == 2) kind = RandomKind::kHiddenUnstable;
  if (seed % 4 == 3) kind = RandomKind::kHiddenStable;

  if (kind == RandomKind::kGeneric) {
    const MatrixXd a = normal_matrix(rng, 3, 3, 0.6);
    const MatrixXd dc = normal_matrix(rng, 3, 3, 0.5);
    const MatrixXd ds = normal_matrix(rng, 3, 3, 0.5);
    const MatrixXd b0 = normal_matrix(rng, 3, m, 1.0);
    const MatrixXd bc = normal_matrix(rng, 3, m, 0.5);
    const MatrixXd bs = normal_matrix(rng, 3, m, 0.5);
    return {build_system({3, m}, period, a,
                         SamplerSpec::TrigSeries(MatrixXd::Zero(3, 3), dc, ds),
                         SamplerSpec::TrigSeries(b0, bc, bs), label),
            kind};
  }

  // [x1; x2] with x1 ∈ R², x2 ∈ R: x2' = a22(t) x2 is untouched by u.
  MatrixXd a = MatrixXd::Zero(3, 3);
  a.topLeftCorner(2, 3) = normal_matrix(rng, 2, 3, 0.6);
  const double rate = 0.3 + 0.7 * unit(rng);
  a(2, 2) = kind == RandomKind::kHiddenUnstable ? rate : -rate;
  MatrixXd dc = MatrixXd::Zero(3, 3), ds = MatrixXd::Zero(3, 3);
  dc.topLeftCorner(2, 3) = normal_matrix(rng, 2, 3, 0.5);
  ds.topLeftCorner(2, 3) = normal_matrix(rng, 2, 3, 0.5);
  dc(2, 2) = normal_matrix(rng, 1, 1, 0.5)(0, 0);
  MatrixXd b0 = MatrixXd::Zero(3, m), bc = MatrixXd::Zero(3, m);
  MatrixXd bs = MatrixXd::Zero(3, m);
  b0.topRows(2) = normal_matrix(rng, 2, m, 1.0);
  bc.topRows(2) = normal_matrix(rng, 2, m, 0.5);
  bs.topRows(2) = normal_matrix(rng, 2, m, 0.5);

  Eigen::HouseholderQR<MatrixXd> qr(normal_matrix(rng, 3, 3, 1.0));
  const MatrixXd r = qr.householderQ() * MatrixXd::Identity(3, 3);
  const MatrixXd rt = r.transpose();
  return {build_system({3, m}, period, r * a * rt,
                       SamplerSpec::TrigSeries(MatrixXd::Zero(3, 3),
                                               r * dc * rt, r * ds * rt),
                       SamplerSpec::TrigSeries(r * b0, r * bc, r * bs), label),
          kind};
}

}  // namespace perstab
