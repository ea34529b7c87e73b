#pragma once

#include "hardiag/hardiag.hpp"

#include <Eigen/Dense>

#include <random>

namespace testsupport {

inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, unsigned seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = z(gen);
    return m;
}

inline Eigen::VectorXd gaussian_vector(int n, unsigned seed)
{
    return gaussian_matrix(n, 1, seed).col(0);
}

inline Eigen::MatrixXd random_symmetric(int n, unsigned seed)
{
    const Eigen::MatrixXd g = gaussian_matrix(n, n, seed);
    return 0.5 * (g + g.transpose());
}

inline Eigen::MatrixXd random_spd(int n, unsigned seed)
{
    const Eigen::MatrixXd g = gaussian_matrix(n, n, seed);
    return g * g.transpose() / n + 0.2 * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_rotation(int n, unsigned seed)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(n, n, seed));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// Yule-Walker autocorrelations of an AR(p) process, solved as a linear system
// in (rho_1, ..., rho_p) and continued by the recursion.
inline Eigen::VectorXd yule_walker_acf(const std::vector<double>& phi, int n)
{
    const int p = static_cast<int>(phi.size());
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(std::max(n, p + 1));
    rho(0) = 1.0;
    if (p > 0) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(p, p);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
        for (int k = 1; k <= p; ++k)
            for (int i = 1; i <= p; ++i) {
                const int lag = std::abs(k - i);
                if (lag == 0) b(k - 1) += phi[i - 1];
                else A(k - 1, lag - 1) -= phi[i - 1];
            }
        rho.segment(1, p) = A.partialPivLu().solve(b);
        for (int k = p + 1; k < rho.size(); ++k) {
            double s = 0.0;
            for (int i = 1; i <= p; ++i) s += phi[i - 1] * rho(k - i);
            rho(k) = s;
        }
    }
    return rho.head(n);
}

inline Eigen::MatrixXd toeplitz(const Eigen::VectorXd& first)
{
    const int n = static_cast<int>(first.size());
    Eigen::MatrixXd t(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) = first(std::abs(i - j));
    return t;
}

// Monte Carlo P(u'Au >= 0), u ~ N(0, Sigma), with its standard error.
inline std::pair<double, double> mc_quadform(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Sigma, long reps,
                                             unsigned seed)
{
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(Sigma).matrixL();
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    const int n = static_cast<int>(A.rows());
    Eigen::VectorXd g(n);
    long hits = 0;
    for (long r = 0; r < reps; ++r) {
        for (int i = 0; i < n; ++i) g(i) = z(gen);
        const Eigen::VectorXd u = L * g;
        if (u.dot(A * u) >= 0.0) ++hits;
    }
    const double p = double(hits) / reps;
    return {p, std::sqrt(p * (1 - p) / reps)};
}

} // namespace testsupport
