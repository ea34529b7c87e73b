#pragma once

#include "hardiag/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace hardiag {

inline constexpr double kInclusionTol = 1e-9;

// Linear subspace of R^n held as an orthonormal basis.
class SubspaceBasis {
public:
    SubspaceBasis() = default;
    // vectors must already be orthonormal (checked to 1e-12).
    explicit SubspaceBasis(Eigen::MatrixXd vectors);

    static SubspaceBasis span_of(const Eigen::MatrixXd& columns, double rel_tol = 1e-10);
    static SubspaceBasis zero(int n);

    const Eigen::MatrixXd& vectors() const { return vectors_; }
    int dim() const { return static_cast<int>(vectors_.cols()); }
    int ambient() const { return static_cast<int>(vectors_.rows()); }

    Eigen::MatrixXd project(const Eigen::MatrixXd& m) const;
    Eigen::MatrixXd project_out(const Eigen::MatrixXd& m) const;
    Eigen::MatrixXd projector() const;
    Eigen::MatrixXd perp_projector() const;

    // ||Pi_perp m||_F / ||m||_F (0 for m = 0).
    double inclusion_residual(const Eigen::MatrixXd& m) const;
    bool contains(const Eigen::MatrixXd& m, double tol = kInclusionTol) const;
    // span(this) contained in span(other).
    bool inside(const SubspaceBasis& other, double tol = kInclusionTol) const;

private:
    Eigen::MatrixXd vectors_;
};

struct FrequencyProfile {
    std::vector<double> omegas;
    std::vector<int> orders;
    int p() const { return static_cast<int>(omegas.size()); }
};

inline bool is_boundary_frequency(double omega)
{
    return std::abs(omega) <= 1e-12 || std::abs(omega - std::numbers::pi) <= 1e-12;
}

// E_{n,s}(omega): row j is (j^s cos(j omega), j^s sin(j omega)), j = 1..n.
template <typename Scalar = double>
Mat<Scalar> trig_basis(int n, int s, Scalar omega)
{
    Mat<Scalar> e(n, 2);
    for (int j = 1; j <= n; ++j) {
        const Scalar w = std::pow(Scalar(j), s);
        e(j - 1, 0) = w * std::cos(j * omega);
        e(j - 1, 1) = w * std::sin(j * omega);
    }
    return e;
}

// First column only at omega in {0, pi}; the full block otherwise.
template <typename Scalar = double>
Mat<Scalar> reduced_trig_basis(int n, int s, Scalar omega)
{
    Mat<Scalar> e = trig_basis<Scalar>(n, s, omega);
    if (is_boundary_frequency(static_cast<double>(omega))) return e.leftCols(1);
    return e;
}

// Regression design with restriction R beta = r.
class DesignProblem {
public:
    DesignProblem(Eigen::MatrixXd X, Eigen::MatrixXd R, Eigen::VectorXd r);

    const Eigen::MatrixXd& X() const { return x_; }
    const Eigen::MatrixXd& R() const { return r_mat_; }
    const Eigen::VectorXd& r() const { return r_vec_; }
    int n() const { return static_cast<int>(x_.rows()); }
    int k() const { return static_cast<int>(x_.cols()); }
    int q() const { return static_cast<int>(r_mat_.rows()); }

    const SubspaceBasis& span_x() const { return span_x_; }
    const SubspaceBasis& m0lin() const { return m0lin_; }
    const Eigen::MatrixXd& xtx_inv() const { return xtx_inv_; }
    // R (X'X)^{-1} R'
    const Eigen::MatrixXd& restricted_cov() const { return restricted_cov_; }

    Eigen::VectorXd ols_beta(const Eigen::VectorXd& y) const;
    Eigen::VectorXd residuals(const Eigen::VectorXd& y) const;
    // Minimum-norm coefficient satisfying R beta = r, and its fitted mean.
    Eigen::VectorXd beta0() const;
    Eigen::VectorXd mu0() const { return x_ * beta0(); }

private:
    Eigen::MatrixXd x_;
    Eigen::MatrixXd r_mat_;
    Eigen::VectorXd r_vec_;
    Eigen::VectorXd col_scale_;
    Eigen::MatrixXd q_thin_;
    Eigen::MatrixXd tri_;
    Eigen::MatrixXd xtx_inv_;
    Eigen::MatrixXd restricted_cov_;
    SubspaceBasis span_x_;
    SubspaceBasis m0lin_;
};

// (F, extra) with F_{j,s} = j^{s}, s = 0..kF-1.
Eigen::MatrixXd polynomial_design(int n, int kF, const Eigen::MatrixXd& extra = Eigen::MatrixXd());
// (E_{n,0}(omega), extra) for omega in (0, pi).
Eigen::MatrixXd cyclical_design(int n, double omega, const Eigen::MatrixXd& extra = Eigen::MatrixXd());

int rho(double omega, const SubspaceBasis& L);
FrequencyProfile singular_frequencies(const SubspaceBasis& L);

int kappa(double omega, int d);
int kappa_total(const FrequencyProfile& profile);

SubspaceBasis m0lin(const DesignProblem& dp);

} // namespace hardiag
