#pragma once

#include "hardiag/design.hpp"
#include "hardiag/estimators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>

namespace hardiag {

using EstimateFn = std::function<Estimate(const Eigen::VectorXd&)>;

// Equivariance / exceptional-set invariance / a.e. nonsingularity report.
struct Assumption5Report {
    bool pass = false;
    int trials = 0;
    int evaluated = 0;  // trials with y off N
    double max_beta_residual = 0.0;
    double max_omega_residual = 0.0;
    double max_asymmetry = 0.0;
    int membership_mismatches = 0;
    double singular_fraction = 0.0;
    int level_set_trials = 0;  // BV data-driven level-set branch
    std::string detail;
};

struct Assumption7Report {
    bool pass = false;
    int trials = 0;
    int hits = 0;
    double hit_fraction = 0.0;
    std::string detail;
};

inline constexpr double kEquivarianceTol = 1e-9;

// Random y ~ N(0, I), delta of random sign with |delta| in [0.1, 10],
// eta ~ N(0, I_k); compares the estimator at delta y + X eta with the
// transformed estimate at y.
Assumption5Report check_assumption5(const DesignProblem& dp, const EstimateFn& est, int trials, std::uint64_t seed);
// Adds the rho-hat level-set branch for BV data-driven estimators.
Assumption5Report check_assumption5(const Estimator& est, int trials, std::uint64_t seed);

// For random y and directions v (random unit vectors plus the standard basis
// of R^q) counts |v' Omega^{-1} v| ||Omega|| <= 1e-12; singular Omega counts
// as a hit.
Assumption7Report check_assumption7(const DesignProblem& dp, const EstimateFn& est, int trials, std::uint64_t seed);
Assumption7Report check_assumption7(const Estimator& est, int trials, std::uint64_t seed);

// |det M| <= 1e-12 * prod of row norms (M square).
bool numerically_singular(const Eigen::MatrixXd& m);

} // namespace hardiag
