#pragma once

#include "hardiag/design.hpp"
#include "hardiag/estimators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hardiag {

struct TestValue {
    double value = 0.0;
    bool in_nstar = false;
    double critical = std::numeric_limits<double>::quiet_NaN();  // data-driven critical value, if any
};

// (R beta - r)' Omega^{-1} (R beta - r) off N*, 0 on N*.
// N* = N, plus y with numerically singular Omega, plus span(X).
class FTypeTest {
public:
    explicit FTypeTest(Estimator est);

    TestValue evaluate(const Eigen::VectorXd& y) const;
    double operator()(const Eigen::VectorXd& y) const { return evaluate(y).value; }
    // T(y) >= C, or T(y) >= C_BV(y) when use_data_driven and the estimator supplies one.
    bool rejects(const Eigen::VectorXd& y, double C, bool use_data_driven = false) const;

    const Estimator& estimator() const { return est_; }
    const DesignProblem& design() const { return est_.design(); }

private:
    Estimator est_;
};

enum class ConstancyStatus { Constant, NotConstant, AllInNstar };
std::string constancy_label(ConstancyStatus s);

struct ConstancyResult {
    ConstancyStatus status = ConstancyStatus::NotConstant;
    double value = 0.0;   // common value (Constant) or 0 (AllInNstar)
    double spread = 0.0;  // max - min over sampled values off N*
    int samples = 0;
    int nstar_hits = 0;
    bool inside_nstar = false;
};

inline constexpr int kConstancySamples = 16;

// Samples T at mu0 + S z, z ~ N(0, I), and tests whether it is constant
// (spread <= 1e-8 max(1, max |T|)).
ConstancyResult constant_on_affine(const FTypeTest& test, const SubspaceBasis& S, const Eigen::VectorXd& mu0,
                                   std::uint64_t seed = 0x434f4e5354ULL, int samples = kConstancySamples);

struct CstarResult {
    double c_lower = std::numeric_limits<double>::infinity();   // C_*
    double c_upper = -std::numeric_limits<double>::infinity();  // C^*
    std::vector<int> kept;            // indices of the reduced family
    std::vector<double> constants;    // C(S) for kept members
    std::vector<int> dropped_nstar;   // members lying inside N*
};

// C_* and C^* over K after removing members that contain another member.
// Throws InputError naming the member when T is not constant on mu0 + S.
CstarResult cstar_bounds(const FTypeTest& test, const std::vector<SubspaceBasis>& K, const Eigen::VectorXd& mu0,
                         std::uint64_t seed = 0x434f4e5354ULL);

} // namespace hardiag
