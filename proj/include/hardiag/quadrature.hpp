#pragma once

#include "hardiag/linalg.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace hardiag {

struct GaussRule {
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};

// Cached Gauss-Legendre rule with the given number of points.
const GaussRule& gauss_legendre(int points);

struct QuadratureResult {
    Eigen::VectorXd value;
    double error = 0.0;
    int panels = 0;
    bool converged = true;
};

// Adaptive Gauss-Legendre on [a, b] for a vector-valued integrand.
// A panel is accepted once the rule on the panel and on its two halves
// agree to panel_tol in the max norm.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double panel_tol,
                                    int initial_panels = 8, int max_depth = 60, int points = 15)
{
    const GaussRule& rule = gauss_legendre(points);
    auto apply = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        Eigen::VectorXd acc;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            Eigen::VectorXd v = f(mid + half * rule.nodes[i]);
            if (acc.size() == 0) acc = Eigen::VectorXd::Zero(v.size());
            acc += rule.weights[i] * v;
        }
        return Eigen::VectorXd(half * acc);
    };

    struct Panel {
        double lo, hi;
        Eigen::VectorXd whole;
        int depth;
    };
    QuadratureResult out;
    std::vector<Panel> stack;
    const double width = (b - a) / initial_panels;
    for (int i = initial_panels - 1; i >= 0; --i) {
        const double lo = a + i * width;
        const double hi = (i == initial_panels - 1) ? b : a + (i + 1) * width;
        stack.push_back({lo, hi, apply(lo, hi), 0});
    }
    while (!stack.empty()) {
        Panel p = std::move(stack.back());
        stack.pop_back();
        const double mid = 0.5 * (p.lo + p.hi);
        Eigen::VectorXd left = apply(p.lo, mid);
        Eigen::VectorXd right = apply(mid, p.hi);
        Eigen::VectorXd both = left + right;
        const double err = (both - p.whole).cwiseAbs().maxCoeff();
        if (err <= panel_tol || p.depth >= max_depth) {
            if (err > panel_tol) out.converged = false;
            if (out.value.size() == 0) out.value = Eigen::VectorXd::Zero(both.size());
            out.value += both;
            out.error += err;
            ++out.panels;
            continue;
        }
        stack.push_back({mid, p.hi, std::move(right), p.depth + 1});
        stack.push_back({p.lo, mid, std::move(left), p.depth + 1});
    }
    return out;
}

template <typename F>
QuadratureResult integrate_adaptive_scalar(F&& f, double a, double b, double panel_tol,
                                           int initial_panels = 8, int max_depth = 60)
{
    return integrate_adaptive(
        [&](double x) { return Eigen::VectorXd::Constant(1, f(x)); }, a, b, panel_tol, initial_panels, max_depth);
}

// Symmetric Toeplitz matrix from its first column.
template <typename Derived>
Mat<typename Derived::Scalar> symmetric_toeplitz(const Eigen::MatrixBase<Derived>& first)
{
    const Eigen::Index n = first.size();
    Mat<typename Derived::Scalar> t(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index l = 0; l < n; ++l) t(j, l) = first(j > l ? j - l : l - j);
    return t;
}

// Sigma(f) with entries 2 * int_0^pi cos((j-l) w) f(w) dw for a normalized,
// even spectral density f. Throws InputError when |int f - 1| > 1e-8 and
// NumericalFailure when a panel does not converge.
Eigen::MatrixXd toeplitz_from_spectral(const std::function<double(double)>& density, int n,
                                       double panel_tol = 1e-12);

} // namespace hardiag
