#include "perstab/cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>
#include <vector>

#include <CLI11.hpp>

#include "perstab/builtin_systems.h"
#include "perstab/detectability.h"
#include "perstab/heat_example.h"
#include "perstab/spectral.h"
#include "perstab/stabilizer.h"

namespace perstab::cli {
namespace {

namespace fs = std::filesystem;

constexpr int kMarginSamples = 200;
constexpr int kDecaySamples = 4;

struct Artifacts {
  fs::path dir;
  OutputFormat format;

  bool json() const { return format != OutputFormat::kCsv; }
  bool csv() const { return format != OutputFormat::kJson; }

  std::ofstream open(const std::string& name) const {
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
  }
  void write_json(const std::string& name, const Json& j) const {
    if (json()) open(name) << dump_json(j);
  }
};

PeriodicSystem resolve_system(const RunConfig& cfg) {
  if (auto sys = builtin_system(cfg.system, cfg.seed)) return *sys;
  if (fs::exists(cfg.system)) return load_system_file(cfg.system);
  throw std::runtime_error("unknown system '" + cfg.system +
                           "': not a builtin name and no such file");
}

std::vector<VectorXd> seeded_vectors(int dim, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<VectorXd> out(count, VectorXd(dim));
  for (auto& v : out) {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  }
  return out;
}

std::vector<double> gamma_grid(const RunConfig& cfg) {
  return log_spaced(cfg.gamma_min, cfg.gamma_max, cfg.gamma_points);
}

struct CertifyOutcome {
  std::optional<DetectabilityCertificate> cert;
  Json json;
};

CertifyOutcome certify(const PeriodicSystem& sys, const RunConfig& cfg,
                       const Artifacts& art, std::ostream& out) {
  const std::vector<double> grid = gamma_grid(cfg);
  const int n_max = cfg.n_max.value_or(cfg.n);
  Json sweep = Json::array();
  CertifyOutcome result;
  for (int n = cfg.n; n <= n_max; ++n) {
    const auto points = gamma_sweep(sys, n, grid, cfg.steps_per_period);
    const auto best = std::min_element(
        points.begin(), points.end(),
        [](const GammaPoint& a, const GammaPoint& b) { return a.delta < b.delta; });
    sweep.push_back({{"n", n},
                     {"best_delta", best->delta},
                     {"c", best->c},
                     {"gamma", best->gamma}});
    result.cert = certificate_search(sys, n, grid, cfg.steps_per_period);
    if (result.cert) break;
  }
  result.json = {{"system", sys.label()},
                 {"found", result.cert.has_value()},
                 {"sweep", sweep}};
  result.json["certificate"] =
      result.cert ? certificate_to_json(*result.cert) : Json();

  if (result.cert) {
    const InequalityReport rep = check_inequality(
        sys, *result.cert, 1,
        seeded_vectors(sys.dim_state(), kMarginSamples, cfg.seed));
    result.json["min_margin"] = rep.min_margin;
    result.json["margin_samples"] = rep.samples;
    if (art.csv()) {
      std::ofstream os = art.open("margins.csv");
      os << "sample,margin\n" << std::setprecision(17);
      for (std::size_t i = 0; i < rep.margins.size(); ++i) {
        os << i << ',' << rep.margins[i] << '\n';
      }
    }
    out << "certificate: n=" << result.cert->n << " delta=" << result.cert->delta
        << " C=" << result.cert->c << " gamma=" << result.cert->gamma
        << " min_margin=" << rep.min_margin << '\n';
  } else {
    out << "no certificate for n in [" << cfg.n << ", " << n_max << "]\n";
  }
  art.write_json("certificate.json", result.json);
  return result;
}

double default_horizon(const RunConfig& cfg, double block) {
  return cfg.horizon.value_or(10.0 * block);
}

void stabilize(const PeriodicSystem& sys, const DetectabilityCertificate& cert,
               const RunConfig& cfg, const Artifacts& art, std::ostream& out) {
  const double gamma_fb =
      std::max(cert.gamma, feedback_gamma_floor(sys, cfg.steps_per_period));
  const PeriodicFeedback fb =
      periodic_feedback_from_gramian(sys, cert.n, gamma_fb, cfg.steps_per_period);
  if (art.csv()) {
    std::ofstream os = art.open("feedback.csv");
    write_feedback_csv(os, fb);
  }
  const double block = cert.n * sys.period();
  const auto zs = seeded_vectors(sys.dim_state(), kDecaySamples, cfg.seed);
  const DecayFit fit = closed_loop_decay(sys, fb, zs,
                                         default_horizon(cfg, block),
                                         cfg.steps_per_period);

  const BlockRun run = block_concatenation(sys, cert, zs.front(), cfg.k_max);
  Json ratios = Json::array();
  const double z0 = zs.front().norm();
  for (const VectorXd& z : run.block_states) ratios.push_back(z.norm() / z0);

  Json j = decay_to_json(fit);
  j["feedback_gamma"] = gamma_fb;
  j["certificate"] = certificate_to_json(cert);
  j["block_norm_ratios"] = ratios;
  art.write_json("decay.json", j);
  out << "feedback gamma=" << gamma_fb << " decay omega=" << fit.omega
      << " M=" << fit.m_const << '\n';
}

void simulate_command(const PeriodicSystem& sys, const RunConfig& cfg,
                      const Artifacts& art, std::ostream& out) {
  const double horizon = default_horizon(cfg, sys.period());
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const VectorXd z = seeded_vectors(sys.dim_state(), 1, cfg.seed).front();
  const TimeGrid grid =
      propagator_grid(0.0, horizon, sys.period(), cfg.steps_per_period);
  const StateTrajectory traj =
      simulate(sys, z, ControlSignal::Zero(sys.dim_control(), horizon), grid);
  std::ofstream os = art.open("trajectory.csv");
  write_trajectory_csv(os, traj);
  out << "simulated " << traj.times.size() << " nodes to t=" << horizon
      << " |y|=" << traj.final_state().norm() << '\n';
}

void spectrum_command(const PeriodicSystem& sys, const RunConfig& cfg,
                      const Artifacts& art, std::ostream& out) {
  const SpectralSummary s = poincare_spectrum(sys, cfg.steps_per_period);
  art.write_json("spectrum.json", spectrum_to_json(s));
  out << "n0=" << s.n_unstable_dim << " delta_bar="
      << (s.delta_bar ? std::to_string(*s.delta_bar) : std::string("absent"))
      << (s.borderline ? " (borderline)" : "") << '\n';
}

bool ucp_command(const PeriodicSystem& sys, const RunConfig& cfg,
                 const Artifacts& art, std::ostream& out) {
  const UniqueContinuationResult r =
      unique_continuation_test(sys, cfg.ucp_tol, cfg.steps_per_period);
  art.write_json("ucp.json", ucp_to_json(r));
  out << (r.detectable ? "detectable" : "not detectable") << " margin="
      << r.margin << " n0=" << r.n0 << '\n';
  return r.detectable;
}

int heat_demo(const RunConfig& cfg, const Artifacts& art, std::ostream& out) {
  HeatConfig hc;
  hc.steps_per_period = cfg.steps_per_period;
  if (cfg.system == "heat16" || cfg.system == "builtin:heat16") hc.n_modes = 16;
  const HeatReport report = heat_reference_report(hc);
  write_heat_table(out, report);
  art.write_json("heat_report.json", heat_report_to_json(report));
  if (art.csv()) {
    std::ofstream os = art.open("heat_trace.csv");
    write_heat_trace_csv(os, report);
  }

  const PeriodicSystem sys = build_heat_galerkin(hc);
  spectrum_command(sys, cfg, art, out);
  ucp_command(sys, cfg, art, out);
  RunConfig sub = cfg;
  sub.horizon = cfg.horizon.value_or(3.0 * sys.period());
  simulate_command(sys, sub, art, out);
  const CertifyOutcome c = certify(sys, cfg, art, out);
  if (c.cert) stabilize(sys, *c.cert, cfg, art, out);
  return report.all_pass() && c.cert ? kExitOk : kExitVerdict;
}

template <typename T>
T get_checked(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  if (name == "certify") return Command::kCertify;
  if (name == "stabilize") return Command::kStabilize;
  if (name == "simulate") return Command::kSimulate;
  if (name == "spectrum") return Command::kSpectrum;
  if (name == "ucp") return Command::kUcp;
  if (name == "heat-demo") return Command::kHeatDemo;
  return std::nullopt;
}

std::string_view command_name(Command c) {
  switch (c) {
    case Command::kCertify: return "certify";
    case Command::kStabilize: return "stabilize";
    case Command::kSimulate: return "simulate";
    case Command::kSpectrum: return "spectrum";
    case Command::kUcp: return "ucp";
    case Command::kHeatDemo: return "heat-demo";
  }
  return "";
}

std::optional<OutputFormat> parse_format(std::string_view name) {
  if (name == "json") return OutputFormat::kJson;
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "both") return OutputFormat::kBoth;
  return std::nullopt;
}

void apply_config_json(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "command") {
      auto c = parse_command(get_checked<std::string>(v, key));
      if (!c) throw std::invalid_argument("config: unknown command");
      cfg.command = *c;
    } else if (key == "system") {
      cfg.system = get_checked<std::string>(v, key);
    } else if (key == "n") {
      cfg.n = get_checked<int>(v, key);
    } else if (key == "n_max") {
      cfg.n_max = get_checked<int>(v, key);
    } else if (key == "gamma_min") {
      cfg.gamma_min = get_checked<double>(v, key);
    } else if (key == "gamma_max") {
      cfg.gamma_max = get_checked<double>(v, key);
    } else if (key == "gamma_points") {
      cfg.gamma_points = get_checked<int>(v, key);
    } else if (key == "k_max") {
      cfg.k_max = get_checked<int>(v, key);
    } else if (key == "horizon") {
      cfg.horizon = get_checked<double>(v, key);
    } else if (key == "seed") {
      cfg.seed = get_checked<std::uint64_t>(v, key);
    } else if (key == "out") {
      cfg.output_dir = get_checked<std::string>(v, key);
    } else if (key == "format") {
      auto f = parse_format(get_checked<std::string>(v, key));
      if (!f) throw std::invalid_argument("config: format must be json|csv|both");
      cfg.format = *f;
    } else if (key == "steps_per_period") {
      cfg.steps_per_period = get_checked<int>(v, key);
    } else if (key == "ucp_tol") {
      cfg.ucp_tol = get_checked<double>(v, key);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("--n must be >= 1");
  if (cfg.n_max && *cfg.n_max < cfg.n) {
    throw std::invalid_argument("--n-max must be >= --n");
  }
  if (!(cfg.gamma_min > 0.0) || !(cfg.gamma_max >= cfg.gamma_min)) {
    throw std::invalid_argument("need 0 < gamma-min <= gamma-max");
  }
  if (cfg.gamma_points < 1) throw std::invalid_argument("--gamma-points >= 1");
  if (cfg.k_max < 1) throw std::invalid_argument("--k-max must be >= 1");
  if (cfg.horizon && !(*cfg.horizon > 0.0)) {
    throw std::invalid_argument("--horizon must be positive");
  }
  if (cfg.steps_per_period < 16) {
    throw std::invalid_argument("--steps-per-period must be >= 16");
  }
  if (!(cfg.ucp_tol > 0.0)) throw std::invalid_argument("ucp tol must be > 0");
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    validate(cfg);
    fs::create_directories(cfg.output_dir);
    const Artifacts art{cfg.output_dir, cfg.format};
    if (cfg.command == Command::kHeatDemo) return heat_demo(cfg, art, out);

    const PeriodicSystem sys = resolve_system(cfg);
    switch (cfg.command) {
      case Command::kCertify:
        return certify(sys, cfg, art, out).cert ? kExitOk : kExitVerdict;
      case Command::kStabilize: {
        const CertifyOutcome c = certify(sys, cfg, art, out);
        if (!c.cert) return kExitVerdict;
        stabilize(sys, *c.cert, cfg, art, out);
        return kExitOk;
      }
      case Command::kSimulate:
        simulate_command(sys, cfg, art, out);
        return kExitOk;
      case Command::kSpectrum:
        spectrum_command(sys, cfg, art, out);
        return kExitOk;
      case Command::kUcp:
        return ucp_command(sys, cfg, art, out) ? kExitOk : kExitVerdict;
      case Command::kHeatDemo:
        break;
    }
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int main(int argc, const char* const* argv, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"Periodic stabilizability certification and analysis"};
  app.require_subcommand(1);

  std::string config_path, system, out_dir, format;
  int n = 0, n_max = 0, gamma_points = 0, k_max = 0, spp = 0;
  double gamma_min = 0.0, gamma_max = 0.0, horizon = 0.0;
  std::uint64_t seed = 0;

  const std::vector<std::string> names = {"certify",  "stabilize", "simulate",
                                          "spectrum", "ucp",       "heat-demo"};
  std::vector<CLI::App*> subs;
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON file with RunConfig keys");
    sub->add_option("--system", system, "builtin name or system JSON path");
    sub->add_option("--n", n, "blocks per certificate window");
    sub->add_option("--n-max", n_max, "sweep n up to this value");
    sub->add_option("--gamma-min", gamma_min);
    sub->add_option("--gamma-max", gamma_max);
    sub->add_option("--gamma-points", gamma_points);
    sub->add_option("--k-max", k_max, "blocks for block concatenation");
    sub->add_option("--horizon", horizon, "simulation / decay-fit horizon");
    sub->add_option("--seed", seed);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "json, csv or both");
    sub->add_option("--steps-per-period", spp);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitError;
  }

  CLI::App* sub = nullptr;
  for (CLI::App* s : subs) {
    if (s->parsed()) sub = s;
  }
  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::invalid_argument("cannot open config " + config_path);
      Json j;
      try {
        in >> j;
      } catch (const Json::exception& e) {
        throw std::invalid_argument(std::string("config parse: ") + e.what());
      }
      apply_config_json(cfg, j);
    }
    cfg.command = *parse_command(sub->get_name());
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--system")) cfg.system = system;
    if (given("--n")) cfg.n = n;
    if (given("--n-max")) cfg.n_max = n_max;
    if (given("--gamma-min")) cfg.gamma_min = gamma_min;
    if (given("--gamma-max")) cfg.gamma_max = gamma_max;
    if (given("--gamma-points")) cfg.gamma_points = gamma_points;
    if (given("--k-max")) cfg.k_max = k_max;
    if (given("--horizon")) cfg.horizon = horizon;
    if (given("--seed")) cfg.seed = seed;
    if (given("--out")) cfg.output_dir = out_dir;
    if (given("--steps-per-period")) cfg.steps_per_period = spp;
    if (given("--format")) {
      auto f = parse_format(format);
      if (!f) throw std::invalid_argument("--format must be json, csv or both");
      cfg.format = *f;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return run(cfg, out, err);
}

}  // namespace perstab::cli
