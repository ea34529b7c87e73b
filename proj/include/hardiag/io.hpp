#pragma once

#include "hardiag/covmodel.hpp"
#include "hardiag/design.hpp"
#include "hardiag/estimators.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace hardiag::io {

// Rows separated by ';' or newlines, entries by commas or whitespace.
Eigen::MatrixXd parse_matrix_text(const std::string& text);
Eigen::MatrixXd read_matrix_csv(const std::string& path);
std::string read_file(const std::string& path);

// Design from a JSON file, inline JSON, or a shorthand:
//   poly:n=50,kF=2            polynomial trend block
//   cyclical:n=40,omega=0.5   cosine/sine pair
//   gauss:n=25,k=3,seed=7     standard normal regressors
// R_text / r_text override the R and r entries; r defaults to zero.
DesignProblem parse_design(const std::string& spec, const std::optional<std::string>& R_text = std::nullopt,
                           const std::optional<std::string>& r_text = std::nullopt);

// One spectral model: white, ar1:0.5, ar2:0.5,-0.3, ar:0.1,0.2,0.3,
// arma:0.5/0.3, spiked:0.999,1.2, ext:0.7@<model>.
SpectralModel parse_model(const std::string& text);

// A ';'-separated list of models, a JSON file (list of {"kind": ..}), or a
// named family: boundary:ar1, boundary:ar1neg, bseq:gamma=0,m=10|100|1000
// (the latter uses M0lin of the design).
CovModelGrid parse_grid(const std::string& text, const DesignProblem& dp);

// kernel:bartlett:M=10, kernel:rectangular:b=0.5, kernel:custom:@W.csv,
// eicker:identity, eicker:@W.csv, am,
// vogelsang:c=1,i=1,V=A,U=@file.csv (U may also be powers:2|3),
// bvfixed:daniell:M=5:c=1[:U=...], bvdd:@params.json or bvdd:{json}.
Estimator parse_estimator(const std::string& text, const DesignProblem& dp);

// 17 significant digits.
std::string fmt(double v);
// FNV-1a over n, k, q and the entries of X, R, r.
std::string design_hash(const DesignProblem& dp);

} // namespace hardiag::io
