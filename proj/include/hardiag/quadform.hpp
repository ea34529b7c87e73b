#pragma once

#include <Eigen/Dense>

namespace hardiag {

// Target P(u'Au >= 0) for u ~ N(0, Sigma). An empty Sigma stands for I_n.
struct QuadFormProblem {
    Eigen::MatrixXd A;
    Eigen::MatrixXd Sigma;

    int n() const { return static_cast<int>(A.rows()); }
    // Throws InputError on asymmetric A or an indefinite / mis-sized Sigma.
    void validate() const;
};

// Eigenvalues of Sigma^{1/2} A Sigma^{1/2} with |lambda| <= 1e-12 max|lambda| removed.
Eigen::VectorXd quadform_weights(const QuadFormProblem& p);

// P(sum lambda_i chi2_1 >= 0) by Imhof inversion, absolute error <= tol.
double imhof_nonneg_prob(const Eigen::VectorXd& lambda, double tol);

// Throws DegenerateForm when every eigenvalue is clipped.
double quadform_nonneg_prob(const QuadFormProblem& p, double tol = 1e-8);

} // namespace hardiag
