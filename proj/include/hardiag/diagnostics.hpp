#pragma once

#include "hardiag/covmodel.hpp"
#include "hardiag/design.hpp"
#include "hardiag/estimators.hpp"
#include "hardiag/montecarlo.hpp"
#include "hardiag/teststat.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hardiag {

enum class Outcome { SizeOne, SizeControllable, LowerBound, Inconclusive };
std::string outcome_label(Outcome o);

struct Witness {
    double gamma = 0.0;
    int order = 0;           // rho(gamma, M0lin)
    Eigen::MatrixXd basis;   // orthonormal basis of span(E_{n,order}(gamma))
    double residual = 0.0;   // inclusion residual in span(X)
};

struct Verdict {
    Outcome outcome = Outcome::Inconclusive;
    std::optional<Witness> witness;
    double bound = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    std::string rule;
    std::vector<std::string> evidence;
};

// Rule tags carried by verdicts.
inline constexpr const char* kRuleTrigInclusion = "trig-span-inclusion";
inline constexpr const char* kRuleNoInclusion = "no-inclusion-nstar-spanx";
inline constexpr const char* kRuleLowerBound = "ar2ext-lower-bound";
inline constexpr const char* kRuleQ1Branch = "q1-ols-nstar-branch";
inline constexpr const char* kRuleNone = "none";

struct JMember {
    double gamma = 0.0;
    int order = 0;
    SubspaceBasis basis;  // span(Pi_{M0lin perp} E_{n,order}(gamma))
};

// Singleton members of the concentration-space family for covariance models
// containing all AR(2) densities: the singular frequencies of span(X), 0, pi
// and extra_gammas, filtered by kappa(M0lin) + kappa(gamma, 1) < n.
std::vector<JMember> j_singletons(const DesignProblem& dp, const std::vector<double>& extra_gammas = {});

struct NstarEvidence {
    int samples = 0;
    int singular_off_spanx = 0;
    int spanx_samples = 0;
    int spanx_nonvanishing = 0;
    bool holds() const { return samples > 0 && singular_off_spanx == 0 && spanx_nonvanishing == 0; }
};
// Sampling evidence for N* = span(X).
NstarEvidence nstar_equals_spanx(const Estimator& est, std::uint64_t seed = 0x4e53544152ULL, int samples = 256);

struct VerdictOptions {
    std::uint64_t seed = 0x5645524449435421ULL;
    std::int64_t reps = 20000;
    double imhof_tol = 1e-8;
    std::vector<double> extra_gammas;
};
Verdict size_control_verdict(const Estimator& est, const VerdictOptions& opts = {});

// P(u' W u >= 0) for u the OLS residual of y ~ N(0, I); 1 when Pi W Pi vanishes.
double lrv_nonneg_prob(const DesignProblem& dp, const Eigen::MatrixXd& W, double tol = 1e-8);

// Number of leading columns of X equal to (j^{s})_{j=1..n}, s = 0, 1, ...
int polynomial_block_size(const DesignProblem& dp);

struct BoundResult {
    double value = 0.0;
    double se = 0.0;
    bool exact = false;
    int i0 = -1;  // first nonzero column of R
    int kF = 0;
};
// P(R_{.i0}' Omega^{-1} R_{.i0} >= 0) under y ~ N(0, I): exact for constant-W
// estimators, Monte Carlo otherwise. Throws InputError unless X starts with a
// polynomial block touched by R.
BoundResult poly_lower_bound(const Estimator& est, const McConfig& cfg, double tol = 1e-8);

struct KGammaResult {
    double gamma = 0.0;
    int order = 0;
    double value = 0.0;
    double se = 0.0;
    bool exact = false;
};
// Throws InputError (with the inclusion residual) unless span(E_{n,rho}(gamma)) is in span(X).
KGammaResult k_gamma(const Estimator& est, double gamma, const McConfig& cfg, double tol = 1e-8);

struct KGammaSummary {
    std::vector<KGammaResult> members;
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
};
// K over every gamma with span(E_{n,rho}(gamma)) in span(X).
KGammaSummary k_gamma_all(const Estimator& est, const McConfig& cfg, double tol = 1e-8);

// Null rejection probability P(T >= C) for y = mu0 + sigma u, u ~ N(0, Sigma),
// by Imhof inversion. Requires q = 1, a constant-W estimator with Pi W Pi psd.
double exact_rejection_prob(const Estimator& est, const Eigen::MatrixXd& Sigma, double C, double tol = 1e-8);

// Monte Carlo P(T >= C) (or T >= C_BV(y) when data_driven) under mu0 + sigma u.
McResult mc_rejection_prob(const Estimator& est, const Eigen::MatrixXd& Sigma, double C, const McConfig& cfg,
                           bool data_driven = false, double sigma2 = 1.0);

enum class CurveMethod { Exact, MonteCarlo };

struct CurvePoint {
    std::string label;
    double probability = 0.0;
    double se = std::numeric_limits<double>::quiet_NaN();
};

std::vector<CurvePoint> size_curve(const Estimator& est, const CovModelGrid& grid, double C, CurveMethod method,
                                   const McConfig& cfg = {}, bool data_driven = false, double tol = 1e-8);

struct SubspaceConstant {
    double gamma = 0.0;
    int order = 0;
    SubspaceBasis basis;
    ConstancyResult constancy;
};

struct PowerReport {
    bool in_scope = false;
    std::vector<SubspaceConstant> subspaces;
    double c_lower = std::numeric_limits<double>::infinity();
    double c_upper = -std::numeric_limits<double>::infinity();
    bool distinct_constants = false;
    bool size_one = false;             // C < C^*
    bool infimal_power_zero = false;   // C > C_*
    bool undetermined = false;         // C equals some C(S)
    std::string classification;
    std::vector<std::string> evidence;
};
PowerReport power_degeneracy(const Estimator& est, double C, std::uint64_t seed = 0x434f4e5354ULL);

struct CriticalResult {
    bool refused = false;
    Verdict verdict;
    double critical = std::numeric_limits<double>::quiet_NaN();
    double achieved = std::numeric_limits<double>::quiet_NaN();  // max rejection over grid at critical
    int iterations = 0;
};
// Smallest C in [lo, hi] with max-over-grid rejection <= alpha (probability
// tolerance 1e-3). Refused when the verdict is SizeOne.
CriticalResult critical_value_search(const Estimator& est, const CovModelGrid& grid, double alpha, double lo, double hi,
                                     CurveMethod method, const McConfig& cfg = {}, const VerdictOptions& vopts = {});

} // namespace hardiag
