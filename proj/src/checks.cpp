#include "hardiag/checks.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hardiag {

bool numerically_singular(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols()) throw InputError("numerically_singular: matrix must be square");
    double prod = 1.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) prod *= m.row(i).norm();
    if (prod == 0.0) return true;
    return std::abs(m.determinant()) <= 1e-12 * prod;
}

namespace {

struct Transform {
    double delta;
    Eigen::VectorXd eta;
};

Transform draw_transform(RandomStream& s, int k)
{
    Transform t;
    const double mag = std::pow(10.0, 2.0 * s.uniform() - 1.0);
    t.delta = s.uniform() < 0.5 ? -mag : mag;
    t.eta = s.normal_vector(k);
    return t;
}

void compare(const Estimate& base, const Estimate& moved, const Transform& t, Assumption5Report& rep)
{
    if (base.in_exceptional != moved.in_exceptional) {
        ++rep.membership_mismatches;
        return;
    }
    if (base.in_exceptional) return;
    ++rep.evaluated;
    const Eigen::VectorXd expect_beta = t.delta * base.beta + t.eta;
    const double bscale = std::max({std::abs(t.delta) * base.beta.norm(), t.eta.norm(), 1e-300});
    rep.max_beta_residual = std::max(rep.max_beta_residual, (moved.beta - expect_beta).norm() / bscale);
    const Eigen::MatrixXd expect_omega = t.delta * t.delta * base.omega;
    const double oscale = std::max(expect_omega.norm(), 1e-300);
    rep.max_omega_residual = std::max(rep.max_omega_residual, (moved.omega - expect_omega).norm() / oscale);
    rep.max_asymmetry = std::max(rep.max_asymmetry, asymmetry(base.omega));
}

void finish(Assumption5Report& rep, int singular)
{
    rep.singular_fraction = rep.evaluated > 0 ? double(singular) / rep.evaluated : 0.0;
    rep.pass = rep.evaluated > 0 && rep.max_beta_residual < kEquivarianceTol &&
               rep.max_omega_residual < kEquivarianceTol && rep.max_asymmetry <= 1e-12 &&
               rep.membership_mismatches == 0 && rep.singular_fraction == 0.0;
    std::ostringstream os;
    os.precision(3);
    os << "evaluated " << rep.evaluated << "/" << rep.trials << ", beta residual " << rep.max_beta_residual
       << ", omega residual " << rep.max_omega_residual << ", N mismatches " << rep.membership_mismatches
       << ", singular fraction " << rep.singular_fraction;
    if (rep.level_set_trials > 0) os << ", level-set trials " << rep.level_set_trials;
    rep.detail = os.str();
}

} // namespace

Assumption5Report check_assumption5(const DesignProblem& dp, const EstimateFn& est, int trials, std::uint64_t seed)
{
    if (trials < 1) throw InputError("check_assumption5: trials must be positive");
    Assumption5Report rep;
    rep.trials = trials;
    int singular = 0;
    for (int t = 0; t < trials; ++t) {
        RandomStream s(seed, static_cast<std::uint64_t>(t));
        const Eigen::VectorXd y = s.normal_vector(dp.n());
        const Transform tr = draw_transform(s, dp.k());
        const Estimate base = est(y);
        const Estimate moved = est(tr.delta * y + dp.X() * tr.eta);
        const int before = rep.evaluated;
        compare(base, moved, tr, rep);
        if (rep.evaluated > before && numerically_singular(base.omega)) ++singular;
    }
    finish(rep, singular);
    return rep;
}

Assumption5Report check_assumption5(const Estimator& est, int trials, std::uint64_t seed)
{
    const DesignProblem& dp = est.design();
    EstimateFn fn = [&est](const Eigen::VectorXd& y) { return est(y); };
    Assumption5Report rep = check_assumption5(dp, fn, trials, seed);
    const auto* bv = std::get_if<BvDataDrivenOmega>(&est.kind());
    if (!bv || !est.level_sets_active()) return rep;

    // Points on {rho-hat = abar_1} by bisection along random segments.
    const double target = bv->abar(0);
    int singular = static_cast<int>(std::lround(rep.singular_fraction * rep.evaluated));
    for (int t = 0; t < trials; ++t) {
        RandomStream s(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(t));
        Eigen::VectorXd lo, hi;
        bool bracketed = false;
        for (int attempt = 0; attempt < 64 && !bracketed; ++attempt) {
            const Eigen::VectorXd a = s.normal_vector(dp.n()), b = s.normal_vector(dp.n());
            const auto ra = est.rho_hat(a), rb = est.rho_hat(b);
            if (!ra || !rb) continue;
            if ((*ra - target) * (*rb - target) < 0.0) {
                lo = *ra < target ? a : b;
                hi = *ra < target ? b : a;
                bracketed = true;
            }
        }
        if (!bracketed) continue;
        Eigen::VectorXd mid = lo;
        for (int it = 0; it < 200; ++it) {
            mid = 0.5 * (lo + hi);
            const auto rm = est.rho_hat(mid);
            if (!rm) break;
            if (std::abs(*rm - target) <= 1e-14) break;
            (*rm < target ? lo : hi) = mid;
        }
        ++rep.level_set_trials;
        const Transform tr = draw_transform(s, dp.k());
        const Estimate base = est(mid);
        const Estimate moved = est(tr.delta * mid + dp.X() * tr.eta);
        if (!base.in_exceptional) {
            ++rep.membership_mismatches;
            continue;
        }
        const int before = rep.evaluated;
        compare(base, moved, tr, rep);
        if (rep.evaluated > before && numerically_singular(base.omega)) ++singular;
    }
    if (rep.level_set_trials == 0) rep.membership_mismatches += 1;
    finish(rep, singular);
    return rep;
}

Assumption7Report check_assumption7(const DesignProblem& dp, const EstimateFn& est, int trials, std::uint64_t seed)
{
    if (trials < 1) throw InputError("check_assumption7: trials must be positive");
    const int q = dp.q();
    Assumption7Report rep;
    int draws = 0;
    for (int t = 0; t < trials; ++t) {
        RandomStream s(seed, static_cast<std::uint64_t>(t));
        const Eigen::VectorXd y = s.normal_vector(dp.n());
        const Estimate e = est(y);
        if (e.in_exceptional) continue;
        ++rep.trials;
        std::vector<Eigen::VectorXd> dirs;
        Eigen::VectorXd v = s.normal_vector(q);
        dirs.push_back(v / v.norm());
        for (int i = 0; i < q; ++i) dirs.push_back(Eigen::VectorXd::Unit(q, i));
        const bool singular = numerically_singular(e.omega);
        Eigen::MatrixXd inv;
        if (!singular) inv = e.omega.inverse();
        const double scale = e.omega.norm();
        for (const auto& d : dirs) {
            ++draws;
            if (singular || std::abs(d.dot(inv * d)) * scale <= 1e-12) ++rep.hits;
        }
    }
    rep.hit_fraction = draws > 0 ? double(rep.hits) / draws : 1.0;
    rep.pass = rep.trials > 0 && rep.hits == 0;
    std::ostringstream os;
    os << "hits " << rep.hits << " of " << draws << " direction draws over " << rep.trials << " y off N";
    rep.detail = os.str();
    return rep;
}

Assumption7Report check_assumption7(const Estimator& est, int trials, std::uint64_t seed)
{
    EstimateFn fn = [&est](const Eigen::VectorXd& y) { return est(y); };
    return check_assumption7(est.design(), fn, trials, seed);
}

} // namespace hardiag
