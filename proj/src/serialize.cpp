#include "pcx/serialize.hpp"

#include <openssl/evp.h>

#include <cstdio>

namespace pcx {

using nlohmann::json;

namespace {

json complex_pair(const Complex& z) { return json::array({z.real(), z.imag()}); }

json matrix_complex(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(complex_pair(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_real(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

json to_json(const BlockVector& v) {
  json blocks = json::array();
  for (int j = 0; j < v.length(); ++j) {
    json blk = json::array();
    for (int k = 0; k < v.dimension(); ++k) blk.push_back(complex_pair(v.blocks(k, j)));
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

json to_json(const EstimateReport& rep) {
  json j;
  j["mse"] = rep.mse;
  j["mse_refinement_delta"] = rep.mse_refinement_delta;
  j["b"] = to_json(rep.b);
  j["c"] = to_json(rep.c);
  json v;
  v["t_min"] = rep.v.t_min;
  v["delta_t"] = rep.v.delta_t;
  json vv = json::array();
  for (int i = 0; i < rep.v.size(); ++i) vv.push_back(rep.v.values[i]);
  v["values"] = std::move(vv);
  j["v"] = std::move(v);
  j["orthogonality_residuals"] = vector_real(rep.orthogonality_residuals);
  json h;
  h["lambda"] = vector_real(rep.h_lambdas);
  h["components"] = matrix_complex(rep.h_samples);
  j["h_samples"] = std::move(h);
  j["diagnostics"] = {{"j_used", rep.j_used},
                      {"summability_ok", rep.summability_ok},
                      {"tail_fraction", rep.tail_fraction},
                      {"skipped_nodes", rep.skipped_nodes}};
  j["conventions"] = {{"second_term_power", "d"}};
  return j;
}

json to_json(const SaddleResult& res) {
  json j;
  j["nu_squared"] = res.nu_squared;
  j["max_error"] = res.max_error;
  j["power_bound"] = res.power_bound;
  j["g_blocks"] = to_json(res.g);
  j["degeneracy_flag"] = res.degenerate;
  j["iterations"] = res.iterations;
  j["residual"] = res.residual;
  return j;
}

json to_json(const LeastFavorableResult& lf) {
  json j;
  j["family"] = family_name(lf.family);
  json table;
  table["lambda"] = vector_real(lf.lambda);
  json rows = json::array();
  for (int k = 0; k < lf.g0.rows(); ++k)
    rows.push_back(vector_real(lf.g0.row(k).transpose()));
  table["g0"] = std::move(rows);
  j["f0_table"] = std::move(table);
  j["multipliers"] = vector_real(lf.multipliers);
  j["equation_residual"] = lf.equation_residual;
  j["constraint_residual"] = lf.constraint_residual;
  j["iterations"] = lf.iterations;
  j["converged"] = lf.converged;
  j["value"] = lf.value;
  j["n_alternates"] = lf.alternates.size();
  return j;
}

json to_json(const CertificationReport& rep) {
  json j;
  j["passed"] = rep.passed;
  j["n_probes"] = rep.n_probes;
  j["density_violations"] = rep.density_violations;
  j["characteristic_violations"] = rep.characteristic_violations;
  j["worst_density_margin"] = rep.worst_density_margin;
  j["worst_characteristic_margin"] = rep.worst_characteristic_margin;
  j["density_margins"] = rep.density_margins;
  j["characteristic_margins"] = rep.characteristic_margins;
  if (!rep.violating_probe.empty()) j["violating_probe"] = rep.violating_probe;
  return j;
}

json to_json(const OracleReport& rep) {
  json j;
  j["analytic_mse"] = rep.analytic_mse;
  j["oracle_mse"] = rep.oracle_mse;
  j["window"] = rep.window;
  j["window_refinement_delta"] = rep.window_refinement_delta;
  j["window_converged"] = rep.window_converged;
  j["ridge_applied"] = rep.ridge_applied;
  j["agree_analytic_oracle"] = rep.agree_analytic_oracle;
  if (rep.has_empirical) {
    j["empirical_mse"] = rep.empirical_mse;
    j["standard_error"] = rep.standard_error;
    j["n_paths"] = rep.n_paths;
    j["agree_empirical"] = rep.agree_empirical;
  }
  return j;
}

std::string blob_sha1_hex(const std::string& bytes) {
  std::string payload = "blob " + std::to_string(bytes.size());
  payload.push_back('\0');
  payload += bytes;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha1(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string h_samples_csv(const Eigen::VectorXd& lambdas, const Eigen::MatrixXcd& h) {
  std::string out = "lambda";
  for (int k = 0; k < h.rows(); ++k) {
    out += ",h" + std::to_string(k + 1) + "_re,h" + std::to_string(k + 1) + "_im";
  }
  out.push_back('\n');
  for (int m = 0; m < lambdas.size(); ++m) {
    out += format_double(lambdas[m]);
    for (int k = 0; k < h.rows(); ++k) {
      out.push_back(',');
      out += format_double(h(k, m).real());
      out.push_back(',');
      out += format_double(h(k, m).imag());
    }
    out.push_back('\n');
  }
  return out;
}

std::string residuals_csv(const Eigen::VectorXd& residuals) {
  std::string out = "j,residual\n";
  for (int i = 0; i < residuals.size(); ++i) {
    out += std::to_string(-(i + 1));
    out.push_back(',');
    out += format_double(residuals[i]);
    out.push_back('\n');
  }
  return out;
}

std::string f0_csv(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& g0,
                   const SpectralDensityModel& f0) {
  std::string out = "lambda";
  for (int k = 0; k < g0.rows(); ++k) out += ",g0_" + std::to_string(k + 1);
  for (int k = 0; k < g0.rows(); ++k) out += ",f0_" + std::to_string(k + 1);
  out.push_back('\n');
  for (int m = 0; m < lambdas.size(); ++m) {
    out += format_double(lambdas[m]);
    for (int k = 0; k < g0.rows(); ++k) {
      out.push_back(',');
      out += format_double(g0(k, m));
    }
    Eigen::MatrixXcd f = f0.eval(lambdas[m]);
    for (int k = 0; k < g0.rows(); ++k) {
      out.push_back(',');
      out += format_double(f(k, k).real());
    }
    out.push_back('\n');
  }
  return out;
}

std::string sequences_csv(const Eigen::MatrixXcd& samples, int j_min) {
  std::string out = "j";
  for (int k = 0; k < samples.rows(); ++k)
    out += ",xi" + std::to_string(k + 1) + "_re,xi" + std::to_string(k + 1) + "_im";
  out.push_back('\n');
  for (int c = 0; c < samples.cols(); ++c) {
    out += std::to_string(j_min + c);
    for (int k = 0; k < samples.rows(); ++k) {
      out.push_back(',');
      out += format_double(samples(k, c).real());
      out.push_back(',');
      out += format_double(samples(k, c).imag());
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace pcx
