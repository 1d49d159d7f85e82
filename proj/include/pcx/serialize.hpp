#pragma once

#include <string>

#include "json.hpp"
#include "pcx/extrapolate.hpp"
#include "pcx/minimax.hpp"
#include "pcx/saddle.hpp"
#include "pcx/simulate.hpp"

namespace pcx {

nlohmann::json to_json(const BlockVector& v);
nlohmann::json to_json(const EstimateReport& rep);
nlohmann::json to_json(const SaddleResult& res);
nlohmann::json to_json(const LeastFavorableResult& lf);
nlohmann::json to_json(const CertificationReport& rep);
nlohmann::json to_json(const OracleReport& rep);

/// Git-style blob hash: sha1("blob <size>\0" + bytes), hex-encoded.
std::string blob_sha1_hex(const std::string& bytes);

/// RFC 4180 CSV: fields quoted only when needed; numbers at full precision.
std::string csv_field(const std::string& raw);
std::string format_double(double x);

std::string h_samples_csv(const Eigen::VectorXd& lambdas, const Eigen::MatrixXcd& h);
std::string residuals_csv(const Eigen::VectorXd& residuals);  // j = -1, -2, ...
std::string f0_csv(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& g0,
                   const SpectralDensityModel& f0);
std::string sequences_csv(const Eigen::MatrixXcd& samples, int j_min);

}  // namespace pcx
