#include "perstab/serialization.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace perstab {
namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(); }

Json sampler_to_json(const MatrixSampler& s) {
  const SamplerSpec* spec = s.spec();
  if (spec == nullptr) {
    throw std::invalid_argument(
        "system_to_json: sampler '" + s.name() + "' has no serializable spec");
  }
  Json j;
  if (spec->kind == SamplerKind::kTabulatedLinear) {
    j["kind"] = "tabulated";
    j["times"] = spec->times;
    Json samples = Json::array();
    for (const MatrixXd& m : spec->samples) samples.push_back(matrix_to_json(m));
    j["samples"] = samples;
    return j;
  }
  j["kind"] = "closed_form";
  j["name"] = spec->name;
  if (spec->name == "scaled_identity_sin_squared") j["scale"] = spec->scale;
  if (!spec->matrices.empty()) {
    Json mats = Json::object();
    for (const auto& [key, m] : spec->matrices) mats[key] = matrix_to_json(m);
    j["matrices"] = mats;
  }
  return j;
}

SamplerSpec sampler_from_json(const Json& j) {
  const std::string kind = j.value("kind", std::string("closed_form"));
  if (kind == "tabulated") {
    std::vector<double> times = j.at("times").get<std::vector<double>>();
    std::vector<MatrixXd> samples;
    for (const Json& m : j.at("samples")) samples.push_back(matrix_from_json(m));
    return SamplerSpec::Tabulated(std::move(times), std::move(samples));
  }
  if (kind != "closed_form") {
    throw std::invalid_argument("sampler kind must be closed_form or tabulated");
  }
  SamplerSpec s;
  s.kind = SamplerKind::kClosedFormRegistered;
  s.name = j.at("name").get<std::string>();
  s.scale = j.value("scale", 0.0);
  if (j.contains("matrices")) {
    for (const auto& [key, m] : j.at("matrices").items()) {
      s.matrices[key] = matrix_from_json(m);
    }
  }
  return s;
}

Json check_to_json(const HeatCheck& c) {
  return {{"pass", c.pass},
          {"evidence", finite_or_null(c.evidence)},
          {"evidence_label", c.evidence_label},
          {"detail", c.detail}};
}

}  // namespace

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("matrix must be a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).size();
  MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw std::invalid_argument("matrix rows must have equal length");
    }
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Json system_to_json(const PeriodicSystem& sys) {
  return {{"label", sys.label()},
          {"period", sys.period()},
          {"dim_state", sys.dim_state()},
          {"dim_control", sys.dim_control()},
          {"a", matrix_to_json(sys.a_const())},
          {"d", sampler_to_json(sys.d_sampler())},
          {"b", sampler_to_json(sys.b_sampler())}};
}

PeriodicSystem system_from_json(const Json& j) {
  try {
    const Dims dims{j.at("dim_state").get<int>(), j.at("dim_control").get<int>()};
    return build_system(dims, j.at("period").get<double>(),
                        matrix_from_json(j.at("a")), sampler_from_json(j.at("d")),
                        sampler_from_json(j.at("b")),
                        j.value("label", std::string()));
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("system json: ") + e.what());
  }
}

PeriodicSystem load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open system file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw std::runtime_error("cannot parse system file " + path + ": " +
                             e.what());
  }
  return system_from_json(j);
}

Json certificate_to_json(const DetectabilityCertificate& cert) {
  return {{"n", cert.n},
          {"delta", cert.delta},
          {"c", cert.c},
          {"gamma", cert.gamma},
          {"steps_per_period", cert.steps_per_period},
          {"system", cert.system_label}};
}

DetectabilityCertificate certificate_from_json(const Json& j) {
  DetectabilityCertificate cert;
  try {
    cert.n = j.at("n").get<int>();
    cert.delta = j.at("delta").get<double>();
    cert.c = j.at("c").get<double>();
    cert.gamma = j.value("gamma", 1.0);
    cert.steps_per_period = j.value("steps_per_period", kDefaultStepsPerPeriod);
    cert.system_label = j.value("system", std::string());
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("certificate json: ") + e.what());
  }
  cert.validate();
  return cert;
}

Json spectrum_to_json(const SpectralSummary& s) {
  Json eig = Json::array();
  for (const auto& ev : s.eigenvalues) {
    eig.push_back({{"re", ev.real()}, {"im", ev.imag()}});
  }
  Json clusters = Json::array();
  for (const auto& c : s.clusters) {
    clusters.push_back({{"re", c.value.real()},
                        {"im", c.value.imag()},
                        {"multiplicity", c.multiplicity}});
  }
  return {{"eigenvalues", eig},
          {"clusters", clusters},
          {"delta_bar", s.delta_bar ? Json(*s.delta_bar) : Json()},
          {"n_unstable_dim", s.n_unstable_dim},
          {"projector", matrix_to_json(s.projector)},
          {"borderline", s.borderline}};
}

Json decay_to_json(const DecayFit& fit) {
  return {{"m_const", finite_or_null(fit.m_const)},
          {"omega", finite_or_null(fit.omega)},
          {"residual", finite_or_null(fit.residual)},
          {"horizon", fit.horizon}};
}

Json ucp_to_json(const UniqueContinuationResult& r) {
  return {{"detectable", r.detectable},
          {"margin", finite_or_null(r.margin)},
          {"vacuous", r.n0 == 0},
          {"n0", r.n0},
          {"borderline", r.borderline}};
}

Json heat_report_to_json(const HeatReport& r) {
  Json checks = Json::object();
  for (const HeatCheck& c : r.checks()) checks[c.name] = check_to_json(c);
  Json j = {{"n_modes", r.config.n_modes},
            {"steps_per_period", r.config.steps_per_period},
            {"checks", checks},
            {"all_pass", r.all_pass()},
            {"uncontrolled_omega", finite_or_null(r.uncontrolled_omega)}};
  j["found_certificate"] =
      r.found_certificate ? certificate_to_json(*r.found_certificate) : Json();
  return j;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace perstab
