#include "hardiag/quadform.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/linalg.hpp"
#include "hardiag/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace hardiag {

void QuadFormProblem::validate() const
{
    if (A.rows() != A.cols() || A.rows() == 0) throw InputError("quadratic form: A must be square and nonempty");
    if (asymmetry(A) > 1e-12) throw InputError("quadratic form: A is not symmetric");
    if (Sigma.size() == 0) return;
    if (Sigma.rows() != A.rows() || Sigma.cols() != A.cols())
        throw InputError("quadratic form: Sigma has the wrong dimension");
    if (asymmetry(Sigma) > 1e-12) throw InputError("quadratic form: Sigma is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(Sigma), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(0) < -1e-10 * std::max(ev(ev.size() - 1), 0.0)) throw InputError("quadratic form: Sigma is not psd");
}

Eigen::VectorXd quadform_weights(const QuadFormProblem& p)
{
    p.validate();
    Eigen::VectorXd raw;
    if (p.Sigma.size() == 0) {
        raw = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(symmetrized(p.A), Eigen::EigenvaluesOnly).eigenvalues();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(p.Sigma));
        const Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0);
        const double dmax = d.maxCoeff();
        std::vector<Eigen::Index> keep;
        for (Eigen::Index i = 0; i < d.size(); ++i)
            if (d(i) > 1e-15 * dmax) keep.push_back(i);
        Eigen::MatrixXd root(p.n(), static_cast<Eigen::Index>(keep.size()));
        for (std::size_t c = 0; c < keep.size(); ++c)
            root.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(d(keep[c]));
        const Eigen::MatrixXd inner = symmetrized(Eigen::MatrixXd(root.transpose() * p.A * root));
        raw = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(inner, Eigen::EigenvaluesOnly).eigenvalues();
    }
    const double amax = raw.size() ? raw.cwiseAbs().maxCoeff() : 0.0;
    std::vector<double> kept;
    for (Eigen::Index i = 0; i < raw.size(); ++i)
        if (std::abs(raw(i)) > 1e-12 * amax) kept.push_back(raw(i));
    return Eigen::Map<Eigen::VectorXd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

double imhof_nonneg_prob(const Eigen::VectorXd& lambda, double tol)
{
    if (!(tol > 0.0)) throw InputError("imhof: tolerance must be positive");
    if (lambda.size() == 0) throw DegenerateForm("imhof: no nonzero weights");
    if ((lambda.array() >= 0.0).all()) return 1.0;
    if ((lambda.array() <= 0.0).all()) return 0.0;

    const Eigen::VectorXd lam = lambda / lambda.cwiseAbs().maxCoeff();
    const Eigen::Index m = lam.size();

    // Truncation point from the envelope bound using the k largest weights.
    std::vector<double> mags(lam.data(), lam.data() + m);
    for (double& v : mags) v = std::abs(v);
    std::sort(mags.begin(), mags.end(), std::greater<>());
    const double target = std::numbers::pi * tol / 10.0;
    double upper = std::numeric_limits<double>::infinity();
    double log_prod = 0.0;
    for (std::size_t k = 1; k <= mags.size(); ++k) {
        log_prod += 0.5 * std::log(mags[k - 1]);
        const double kk = static_cast<double>(k);
        const double log_u = (2.0 / kk) * (std::log(2.0 / kk) - log_prod - std::log(target));
        upper = std::min(upper, std::exp(std::min(log_u, 700.0)));
    }
    upper = std::max(upper, 1.0);

    const double half_sum = 0.5 * lam.sum();
    auto integrand = [&](double u) {
        if (u <= 0.0) return half_sum;
        double theta = 0.0, log_rho = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double lu = lam(i) * u;
            theta += std::atan(lu);
            log_rho += std::log1p(lu * lu);
        }
        return std::sin(0.5 * theta) * std::exp(-0.25 * log_rho) / u;
    };

    std::vector<std::pair<double, double>> pieces;
    pieces.emplace_back(0.0, 1.0);
    for (double lo = 1.0; lo < upper; lo *= 2.0) pieces.emplace_back(lo, std::min(2.0 * lo, upper));
    const double panel_tol = target / (10.0 * static_cast<double>(pieces.size()));
    double total = 0.0;
    for (const auto& [lo, hi] : pieces) {
        QuadratureResult q = integrate_adaptive_scalar(integrand, lo, hi, panel_tol, 4, 40);
        if (!q.converged) throw NumericalFailure("imhof: oscillatory integral did not converge");
        total += q.value(0);
    }
    const double prob = 0.5 + total / std::numbers::pi;
    return std::clamp(prob, 0.0, 1.0);
}

double quadform_nonneg_prob(const QuadFormProblem& p, double tol)
{
    if (!(tol > 1e-10 && tol < 1e-2)) throw InputError("quadform_nonneg_prob: tol outside (1e-10, 1e-2)");
    const Eigen::VectorXd w = quadform_weights(p);
    if (w.size() == 0) throw DegenerateForm("quadform_nonneg_prob: form vanishes on the range of Sigma");
    return imhof_nonneg_prob(w, tol);
}

} // namespace hardiag
