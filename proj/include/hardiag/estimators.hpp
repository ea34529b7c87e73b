#pragma once

#include "hardiag/design.hpp"
#include "hardiag/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>

namespace hardiag {

enum class KernelName { Bartlett, Parzen, QuadraticSpectral, Daniell, Rectangular };

KernelName parse_kernel(const std::string& name);
std::string kernel_label(KernelName kernel);

// Bartlett (1-|x|)^+; Parzen two-piece cubic; Quadratic-Spectral in the
// Andrews form; Daniell sin(pi x)/(pi x); rectangular indicator of (-1, 1).
template <typename Scalar>
Scalar kernel_value(KernelName kernel, Scalar x)
{
    using std::abs;
    using std::cos;
    using std::sin;
    const Scalar ax = abs(x);
    const Scalar pi = std::numbers::pi_v<Scalar>;
    switch (kernel) {
    case KernelName::Bartlett:
        return ax < Scalar(1) ? Scalar(1) - ax : Scalar(0);
    case KernelName::Parzen:
        if (ax <= Scalar(0.5)) return Scalar(1) - Scalar(6) * ax * ax + Scalar(6) * ax * ax * ax;
        if (ax <= Scalar(1)) return Scalar(2) * (Scalar(1) - ax) * (Scalar(1) - ax) * (Scalar(1) - ax);
        return Scalar(0);
    case KernelName::QuadraticSpectral: {
        const Scalar z = Scalar(6) * pi * ax / Scalar(5);
        if (z < Scalar(1e-2)) return Scalar(1) - z * z / Scalar(10) + z * z * z * z / Scalar(280);
        return Scalar(3) / (z * z) * (sin(z) / z - cos(z));
    }
    case KernelName::Daniell: {
        const Scalar z = pi * ax;
        if (z < Scalar(1e-4)) return Scalar(1) - z * z / Scalar(6);
        return sin(z) / z;
    }
    case KernelName::Rectangular:
        return ax < Scalar(1) ? Scalar(1) : Scalar(0);
    }
    return Scalar(0);
}

// Bandwidths within 1e-9 relative of an integer are snapped to it so that
// lags |i-j| = M land exactly on kernel breakpoints.
inline double snap_bandwidth(double M)
{
    const double r = std::round(M);
    return std::abs(M - r) <= 1e-9 * M ? r : M;
}

// W_ij = kappa(|i-j| / M).
template <typename Scalar = double>
Mat<Scalar> kernel_weight_matrix(KernelName kernel, double M, int n)
{
    const Scalar bw = static_cast<Scalar>(snap_bandwidth(M));
    Vec<Scalar> lag(n);
    for (int h = 0; h < n; ++h) lag(h) = kernel_value<Scalar>(kernel, Scalar(h) / bw);
    Mat<Scalar> w(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w(i, j) = lag(i > j ? i - j : j - i);
    return w;
}

// Checked entry point: throws InputError for M <= 0 or n < 1.
Eigen::MatrixXd kernel_weights(KernelName kernel, double M, int n);

// n^{-1} u' W u
double lrv(const Eigen::MatrixXd& W, const Eigen::VectorXd& u);

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;
};
OlsFit ols(const DesignProblem& dp, const Eigen::VectorXd& y);

// Lower-triangular matrix of ones.
Eigen::MatrixXd cumulative_sum_matrix(int n);

// Least squares on a fixed full-column-rank regressor matrix.
class LeastSquares {
public:
    explicit LeastSquares(const Eigen::MatrixXd& Z);
    Eigen::VectorXd coefficients(const Eigen::VectorXd& w) const;
    Eigen::VectorXd residuals(const Eigen::VectorXd& w) const;
    // (Z'Z)^{-1}
    const Eigen::MatrixXd& gram_inverse() const { return gram_inv_; }
    int cols() const { return static_cast<int>(tri_.cols()); }

private:
    Eigen::MatrixXd q_thin_, tri_, gram_inv_;
    Eigen::VectorXd scale_;
};

// First-order residual autocorrelation; nullopt when sum_{i<n} u_i^2 is at
// most 1e-24 ||y||^2.
std::optional<double> residual_autocorrelation(const Eigen::VectorXd& u, double y_norm_sq);

// 1.3221 (n 4 r^2 / (1-r)^4)^{1/5}
double am_bandwidth(double rho_tilde, int n);

// b_BV = a0 + sum a_i 1[rho >= abar_i].
double bv_bandwidth(const Eigen::VectorXd& a, const Eigen::VectorXd& abar, double rho);
// sum_i coef_i b^i
double polynomial_value(const Eigen::VectorXd& coef, double b);

struct KernelOmega {
    KernelName kernel = KernelName::Bartlett;
    double bandwidth = 1.0;
    Eigen::MatrixXd weights;  // nonempty: custom symmetric W, kernel ignored
};

struct EickerOmega {
    Eigen::MatrixXd weight;  // empty: identity
};

struct AmOmega {};

enum class VogelsangV { A, I };

struct VogelsangOmega {
    double c = 0.0;
    Eigen::MatrixXd U;
    int variant = 1;
    VogelsangV V = VogelsangV::I;
};

struct BvFixedOmega {
    KernelOmega lrv;
    double c = 0.0;
    Eigen::MatrixXd U;  // empty: the u'A'Au / u'u variant
};

struct BvDataDrivenOmega {
    Eigen::VectorXd a, abar, h, p;
    Eigen::MatrixXd U;  // empty: the u'A'Au / u'u variant
};

using OmegaKind = std::variant<KernelOmega, EickerOmega, AmOmega, VogelsangOmega, BvFixedOmega, BvDataDrivenOmega>;

enum class ExceptionalSet { Empty, SpanX, SpanXU, AM, BV, BVU };
std::string exceptional_label(ExceptionalSet s);

struct Estimate {
    Eigen::VectorXd beta;
    Eigen::MatrixXd omega;  // empty when in_exceptional
    bool in_exceptional = false;
    double critical = std::numeric_limits<double>::quiet_NaN();
};

struct EstimatorTraits {
    bool beta_is_ols = true;
    bool exceptional_empty = true;
    // Pi W Pi positive semidefinite with W constant, so Omega is nnd for all y
    bool omega_nnd_everywhere = false;
    // nonnegative definite for every y off N
    bool omega_nnd_off_n = false;
    bool data_driven_critical = false;
};

// Omega = (u'Wu / divisor) R(X'X)^{-1}R' for every y.
struct ScalarForm {
    Eigen::MatrixXd W;
    double divisor = 1.0;
};

// One (beta, Omega, N) triple bound to a design.
class Estimator {
public:
    Estimator(DesignProblem dp, OmegaKind kind);

    Estimate operator()(const Eigen::VectorXd& y) const;

    const DesignProblem& design() const { return *dp_; }
    const OmegaKind& kind() const { return kind_; }
    ExceptionalSet exceptional_set() const;
    EstimatorTraits traits() const;
    // Present for kernel and Eicker estimators.
    std::optional<ScalarForm> scalar_form() const;
    // Constant W whose lrv sign equals the sign of Omega (kernel, Eicker, BV fixed).
    std::optional<Eigen::MatrixXd> sign_weights() const;
    // BV data-driven: whether rho-hat takes more than one value off span(X).
    bool level_sets_active() const;
    // BV data-driven: residual autocorrelation of y (nullopt on its exceptional set).
    std::optional<double> rho_hat(const Eigen::VectorXd& y) const;
    std::string describe() const;

    struct Cache;

private:
    std::shared_ptr<const DesignProblem> dp_;
    OmegaKind kind_;
    std::shared_ptr<const Cache> cache_;
};

} // namespace hardiag
