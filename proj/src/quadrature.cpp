#include "hardiag/quadrature.hpp"
#include "hardiag/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace hardiag {

namespace {

GaussRule build_rule(int points)
{
    GaussRule rule;
    rule.nodes.resize(points);
    rule.weights.resize(points);
    for (int i = 0; i < points; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= points; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = points * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= points; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = points * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

} // namespace

const GaussRule& gauss_legendre(int points)
{
    static std::mutex guard;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(points);
    if (it == cache.end()) it = cache.emplace(points, build_rule(points)).first;
    return it->second;
}

Eigen::MatrixXd toeplitz_from_spectral(const std::function<double(double)>& density, int n, double panel_tol)
{
    if (n < 1) throw InputError("toeplitz_from_spectral: n must be positive");
    auto integrand = [&](double w) {
        const double fw = density(w);
        Eigen::VectorXd v(n);
        for (int h = 0; h < n; ++h) v(h) = 2.0 * std::cos(h * w) * fw;
        return v;
    };
    const int initial = std::max(8, n / 4);
    QuadratureResult q = integrate_adaptive(integrand, 0.0, std::numbers::pi, panel_tol, initial, 50);
    if (!q.converged) throw NumericalFailure("toeplitz_from_spectral: quadrature did not reach panel tolerance");
    if (std::abs(q.value(0) - 1.0) > 1e-8) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "toeplitz_from_spectral: density integrates to " << q.value(0) << ", not 1";
        throw InputError(msg.str());
    }
    return symmetric_toeplitz(q.value);
}

} // namespace hardiag
