#include "pcx/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "pcx/serialize.hpp"

namespace pcx {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& source, const std::string& field,
                               const std::string& what) {
  throw DomainError(source + ": field '" + field + "': " + what);
}

double require_number(const json& j, const std::string& source, const std::string& field) {
  if (!j.contains(field) || !j[field].is_number())
    config_error(source, field, "missing or not a number");
  return j[field].get<double>();
}

int optional_int(const json& j, const std::string& field, int fallback) {
  return j.contains(field) ? j[field].get<int>() : fallback;
}

double optional_number(const json& j, const std::string& field, double fallback) {
  return j.contains(field) ? j[field].get<double>() : fallback;
}

Eigen::VectorXd vector_from(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
  return v;
}

CoefficientFunction parse_a(const json& j, const std::string& source, const IncrementParams& p,
                            int N, bool finite) {
  if (!j.is_object()) config_error(source, "a", "must be an object");
  std::string form = j.value("form", "");
  int n_per_T = optional_int(j, "samples_per_period", 256);
  if (n_per_T < 8) config_error(source, "a.samples_per_period", "must be at least 8");
  double default_end = finite ? (N + 1) * p.T : 8.0 * p.T;
  double t_max = optional_number(j, "t_max", default_end);
  if (t_max <= 0) config_error(source, "a.t_max", "must be positive");
  double dt = p.T / n_per_T;
  int n = static_cast<int>(std::lround(t_max / dt));
  if (std::abs(n * dt - t_max) > 1e-9 * p.T)
    config_error(source, "a.t_max", "must be a multiple of T / samples_per_period");

  CoefficientFunction a;
  a.samples.t_min = 0.0;
  a.samples.delta_t = dt;
  a.samples.values.resize(n + 1);
  if (form == "exp-decay") {
    double amplitude = optional_number(j, "amplitude", 1.0);
    double rate = require_number(j, source, "rate");
    for (int i = 0; i <= n; ++i) a.samples.values[i] = amplitude * std::exp(-rate * (i * dt));
  } else if (form == "gaussian-bump") {
    double amplitude = optional_number(j, "amplitude", 1.0);
    double center = require_number(j, source, "center");
    double width = require_number(j, source, "width");
    if (width <= 0) config_error(source, "a.width", "must be positive");
    for (int i = 0; i <= n; ++i) {
      double u = (i * dt - center) / width;
      a.samples.values[i] = amplitude * std::exp(-u * u);
    }
  } else if (form == "tabulated") {
    if (!j.contains("values") || !j["values"].is_array())
      config_error(source, "a.values", "missing sample array");
    Eigen::VectorXd vals = vector_from(j["values"]);
    if (vals.size() != n + 1)
      config_error(source, "a.values",
                   "expected " + std::to_string(n + 1) + " samples for this t_max");
    a.samples.values = vals;
  } else {
    config_error(source, "a.form", "expected exp-decay | gaussian-bump | tabulated");
  }
  return a;
}

SpectralDensityModel::Rational parse_rational(const json& j, const std::string& source,
                                              const std::string& field) {
  SpectralDensityModel::Rational r;
  if (j.contains("ma")) r.ma = vector_from(j["ma"]);
  if (j.contains("ar")) r.ar = vector_from(j["ar"]);
  r.scale = optional_number(j, "scale", 1.0);
  if (r.ma.size() < 1 || r.ar.size() < 1) config_error(source, field, "ma/ar must be nonempty");
  if (r.scale <= 0) config_error(source, field + ".scale", "must be positive");
  return r;
}

SpectralDensityModel parse_density(const json& j, const std::string& source,
                                   const IncrementParams& p) {
  if (!j.is_object()) config_error(source, "density", "must be an object");
  std::string kind = j.value("kind", "");
  IncrementKernel kernel{p.d, p.tau};
  bool matched = j.value("increment_matched", true);
  if (kind == "white-increment-matched") {
    return SpectralDensityModel::white_increment_matched(optional_int(j, "dimension", p.K), kernel);
  }
  if (kind == "scalar-rational") {
    auto r = parse_rational(j, source, "density");
    return SpectralDensityModel::scalar_rational(r, optional_int(j, "dimension", p.K), matched,
                                                 kernel);
  }
  if (kind == "diagonal-rational") {
    if (!j.contains("entries") || !j["entries"].is_array())
      config_error(source, "density.entries", "missing entry array");
    std::vector<SpectralDensityModel::Rational> entries;
    for (const auto& e : j["entries"]) entries.push_back(parse_rational(e, source, "density.entries"));
    return SpectralDensityModel::diagonal_rational(entries, matched, kernel);
  }
  if (kind == "constant") {
    if (!j.contains("diagonal")) config_error(source, "density.diagonal", "missing diagonal");
    Eigen::VectorXd diag = vector_from(j["diagonal"]);
    Eigen::MatrixXcd f0 = diag.cast<Complex>().asDiagonal();
    return SpectralDensityModel::constant(f0);
  }
  if (kind == "tabulated") {
    if (!j.contains("lambda") || !j.contains("values"))
      config_error(source, "density", "tabulated kind needs lambda and values");
    Eigen::VectorXd lam = vector_from(j["lambda"]);
    const auto& rows = j["values"];
    Eigen::MatrixXd vals(rows.size(), lam.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      Eigen::VectorXd row = vector_from(rows[k]);
      if (row.size() != lam.size())
        config_error(source, "density.values", "row length must match lambda");
      vals.row(static_cast<int>(k)) = row.transpose();
    }
    return SpectralDensityModel::tabulated(lam, vals, matched, kernel);
  }
  config_error(source, "density.kind",
               "expected white-increment-matched | scalar-rational | diagonal-rational | "
               "constant | tabulated");
}

DensityClassSpec parse_class(const json& j, const std::string& source, const IncrementParams& p) {
  if (!j.is_object()) config_error(source, "class", "must be an object");
  DensityClassSpec spec;
  if (!j.contains("family")) config_error(source, "class.family", "missing");
  spec.family = family_from_name(j["family"].get<std::string>());
  spec.p = optional_number(j, "p", 0.0);
  if (j.contains("p_k")) spec.p_k = vector_from(j["p_k"]);
  if (j.contains("P")) spec.P = vector_from(j["P"]).asDiagonal();
  if (j.contains("B1")) spec.B1 = vector_from(j["B1"]).asDiagonal();
  if (j.contains("B2")) spec.B2 = vector_from(j["B2"]).asDiagonal();
  spec.delta = optional_number(j, "delta", 0.0);
  if (j.contains("delta_k")) spec.delta_k = vector_from(j["delta_k"]);
  if (j.contains("delta_ij")) spec.delta_ij = vector_from(j["delta_ij"]).asDiagonal();
  if (j.contains("f1")) spec.f1 = parse_density(j["f1"], source, p);
  spec.damping = optional_number(j, "damping", 0.5);
  spec.max_iterations = optional_int(j, "max_iterations", 500);
  spec.tolerance = optional_number(j, "tolerance", 1e-8);
  spec.multistart = optional_int(j, "multistart", 1);
  spec.allow_experimental = j.value("allow_experimental", false);
  return spec;
}

}  // namespace

ExtrapolationProblem ExperimentConfig::problem() const {
  ExtrapolationProblem prob;
  prob.params = params;
  prob.a = a;
  prob.horizon = command == "estimate" ? Horizon::infinite : Horizon::finite;
  prob.N = N;
  prob.density = density;
  prob.grid = grid;
  return prob;
}

ExperimentConfig parse_config_json(const json& j, const std::string& source) {
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.command = j.value("command", "");
  const bool known =
      cfg.command == "estimate" || cfg.command == "estimate-finite" || cfg.command == "saddle" ||
      cfg.command == "minimax" || cfg.command == "validate";
  if (!known)
    config_error(source, "command",
                 "expected estimate | estimate-finite | saddle | minimax | validate");

  if (!j.contains("params") || !j["params"].is_object())
    config_error(source, "params", "missing object");
  const auto& pj = j["params"];
  cfg.params.d = optional_int(pj, "d", 1);
  cfg.params.T = optional_number(pj, "T", 1.0);
  cfg.params.tau = optional_int(pj, "tau", 1);
  cfg.params.K = optional_int(pj, "K", 1);
  cfg.params.J = optional_int(pj, "J", 32);
  cfg.N = optional_int(pj, "N", 0);
  try {
    cfg.params.validate();
  } catch (const std::exception& e) {
    config_error(source, "params", e.what());
  }
  if (cfg.N < 0) config_error(source, "params.N", "must satisfy N >= 0");

  cfg.grid.nodes = j.contains("quadrature")
                       ? optional_int(j["quadrature"], "nodes", 4096)
                       : 4096;
  if (cfg.grid.nodes < 16) config_error(source, "quadrature.nodes", "must be at least 16");
  try {
    cfg.grid.validate_for(cfg.params.tau);
  } catch (const std::exception& e) {
    config_error(source, "quadrature.nodes", e.what());
  }

  const bool finite = cfg.command != "estimate";
  if (!j.contains("a")) config_error(source, "a", "missing");
  cfg.a = parse_a(j["a"], source, cfg.params, cfg.N, finite);
  if (finite && cfg.a.support_end() > (cfg.N + 1) * cfg.params.T * (1 + 1e-12))
    config_error(source, "a.t_max", "finite-horizon support must end by (N+1)T");

  if (!j.contains("density")) config_error(source, "density", "missing");
  cfg.density = parse_density(j["density"], source, cfg.params);
  if (cfg.density.dimension() != cfg.params.K)
    config_error(source, "density", "dimension must equal params.K");

  if (cfg.command == "minimax") {
    if (!j.contains("class")) config_error(source, "class", "missing for minimax");
    cfg.class_spec = parse_class(j["class"], source, cfg.params);
    try {
      cfg.class_spec->validate(cfg.params.K);
    } catch (const std::exception& e) {
      config_error(source, "class", e.what());
    }
  }

  if (j.contains("mc")) {
    const auto& m = j["mc"];
    cfg.n_paths = optional_int(m, "n_paths", 10000);
    cfg.window = optional_int(m, "window", 200);
    cfg.spectral_grid = optional_int(m, "spectral_grid", 0);
    cfg.seed = m.contains("seed") ? m["seed"].get<std::uint64_t>() : 0;
    cfg.dump_sequences = m.value("dump_sequences", false);
    if (cfg.n_paths < 1) config_error(source, "mc.n_paths", "must be positive");
    if (cfg.window < 2) config_error(source, "mc.window", "must be at least 2");
  }
  if (j.contains("saddle")) {
    const auto& s = j["saddle"];
    cfg.power_bound = optional_number(s, "power_bound", 1.0);
    cfg.saddle_steps = optional_int(s, "n_steps", 20000);
    if (cfg.power_bound <= 0) config_error(source, "saddle.power_bound", "must be positive");
  }
  if (j.contains("certify")) cfg.n_probes = optional_int(j["certify"], "n_probes", 100);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DomainError("config parse error in " + path + ": " + e.what());
  }
  return parse_config_json(j, path);
}

namespace {

json synthesis_power_check(const ExperimentConfig& cfg, const SaddleResult& saddle) {
  auto seq = synthesize_least_favorable(saddle, cfg.saddle_steps, cfg.seed);
  double mean_sq = seq.samples.squaredNorm() / std::max(1, cfg.saddle_steps);
  double se = saddle.power_bound * std::sqrt(2.0 / std::max(1, cfg.saddle_steps));
  json j;
  j["empirical_power"] = mean_sq;
  j["expected_power"] = saddle.power_bound;
  j["standard_error"] = se;
  j["within_3se"] = std::abs(mean_sq - saddle.power_bound) <= 3 * se;
  return j;
}

}  // namespace

std::map<std::string, std::string> build_artifacts(const ExperimentConfig& cfg, int threads,
                                                   int* exit_code) {
  std::map<std::string, std::string> files;
  int code = 0;

  if (cfg.command == "estimate" || cfg.command == "estimate-finite") {
    EstimateReport rep = solve_extrapolation(cfg.problem());
    files["result.json"] = to_json(rep).dump(2) + "\n";
    files["h_samples.csv"] = h_samples_csv(rep.h_lambdas, rep.h_samples);
    files["residuals.csv"] = residuals_csv(rep.orthogonality_residuals);
  } else if (cfg.command == "saddle") {
    BlockVector b = functional_coefficients(cfg.problem());
    auto Q = build_Q(b, b.length() - 1);
    auto saddle = top_eigen(Q, cfg.power_bound);
    json j = to_json(saddle);
    j["synthesis_check"] = synthesis_power_check(cfg, saddle);
    files["result.json"] = j.dump(2) + "\n";
  } else if (cfg.command == "minimax") {
    const DensityClassSpec& spec = *cfg.class_spec;
    LeastFavorableResult lf = is_moment_family(spec.family)
                                  ? solve_least_favorable_D0(spec, cfg.problem())
                                  : solve_least_favorable_D1delta(spec, cfg.problem());
    CertificationReport cert;
    if (lf.converged) cert = certify_saddle(lf, spec, cfg.problem(), cfg.n_probes, cfg.seed);
    json j = to_json(lf);
    j["certification"] = to_json(cert);
    files["result.json"] = j.dump(2) + "\n";
    files["f0.csv"] = f0_csv(lf.lambda, lf.g0, lf.f0);
    if (!lf.converged || !cert.passed) code = 2;
  } else if (cfg.command == "validate") {
    SynthesisConfig scfg;
    scfg.density = cfg.density;
    scfg.params = cfg.params;
    scfg.n_paths = cfg.n_paths;
    scfg.seed = cfg.seed;
    scfg.spectral_grid = cfg.spectral_grid;
    OracleReport rep = empirical_mse(cfg.problem(), scfg, cfg.window, threads);
    files["result.json"] = to_json(rep).dump(2) + "\n";
    if (cfg.dump_sequences) {
      scfg.n_blocks = cfg.window + functional_coefficients(cfg.problem()).length();
      Eigen::MatrixXcd xi = synthesize_increments(scfg, 0, -cfg.window);
      files["sequences.csv"] = sequences_csv(xi, -cfg.window);
    }
    if (!rep.agree_analytic_oracle || !rep.agree_empirical) code = 2;
  } else {
    throw DomainError("unknown command: " + cfg.command);
  }

  if (exit_code) *exit_code = code;
  return files;
}

int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads) {
  int code = 0;
  auto files = build_artifacts(cfg, threads, &code);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  json manifest;
  manifest["config"] = cfg.raw;
  json hashes;
  std::string combined;
  for (const auto& [name, bytes] : files) {
    std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    std::string h = blob_sha1_hex(bytes);
    hashes[name] = h;
    combined += name + ":" + h + "\n";
  }
  manifest["files"] = std::move(hashes);
  manifest["content_hash"] = blob_sha1_hex(combined);
  auto now = std::chrono::system_clock::now();
  manifest["created_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
  std::ofstream mout(fs::path(out_dir) / "manifest.json", std::ios::binary);
  std::string mbytes = manifest.dump(2) + "\n";
  mout.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
  return code;
}

}  // namespace pcx
