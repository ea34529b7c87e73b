#include "hardiag/teststat.hpp"
#include "hardiag/checks.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/montecarlo.hpp"

#include <algorithm>
#include <cmath>

namespace hardiag {

FTypeTest::FTypeTest(Estimator est) : est_(std::move(est)) {}

TestValue FTypeTest::evaluate(const Eigen::VectorXd& y) const
{
    const DesignProblem& dp = design();
    TestValue out;
    const Estimate e = est_(y);
    out.critical = e.critical;
    const double y_norm = y.norm();
    if (e.in_exceptional || dp.residuals(y).norm() <= 1e-12 * y_norm || numerically_singular(e.omega)) {
        out.in_nstar = true;
        return out;
    }
    const Eigen::VectorXd d = dp.R() * e.beta - dp.r();
    out.value = d.dot(e.omega.fullPivLu().solve(d));
    return out;
}

bool FTypeTest::rejects(const Eigen::VectorXd& y, double C, bool use_data_driven) const
{
    const TestValue t = evaluate(y);
    if (use_data_driven && !std::isnan(t.critical)) return t.value >= t.critical;
    return t.value >= C;
}

std::string constancy_label(ConstancyStatus s)
{
    switch (s) {
    case ConstancyStatus::Constant: return "constant";
    case ConstancyStatus::NotConstant: return "not-constant";
    case ConstancyStatus::AllInNstar: return "inside-nstar";
    }
    return "?";
}

ConstancyResult constant_on_affine(const FTypeTest& test, const SubspaceBasis& S, const Eigen::VectorXd& mu0,
                                   std::uint64_t seed, int samples)
{
    if (S.dim() == 0) throw InputError("constant_on_affine: S must be nonzero");
    if (S.ambient() != test.design().n() || mu0.size() != test.design().n())
        throw InputError("constant_on_affine: dimension mismatch");
    ConstancyResult res;
    res.samples = samples;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, scale = 0.0;
    int used = 0;
    for (int i = 0; i < samples; ++i) {
        RandomStream s(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd y = mu0 + S.vectors() * s.normal_vector(S.dim());
        const TestValue t = test.evaluate(y);
        if (t.in_nstar) {
            ++res.nstar_hits;
            continue;
        }
        ++used;
        lo = std::min(lo, t.value);
        hi = std::max(hi, t.value);
        scale = std::max(scale, std::abs(t.value));
    }
    if (used == 0) {
        res.status = ConstancyStatus::AllInNstar;
        res.inside_nstar = true;
        res.value = 0.0;
        return res;
    }
    res.spread = hi - lo;
    if (res.spread <= 1e-8 * std::max(1.0, scale)) {
        res.status = ConstancyStatus::Constant;
        res.value = 0.5 * (lo + hi);
    }
    return res;
}

CstarResult cstar_bounds(const FTypeTest& test, const std::vector<SubspaceBasis>& K, const Eigen::VectorXd& mu0,
                         std::uint64_t seed)
{
    CstarResult out;
    const int m = static_cast<int>(K.size());
    std::vector<bool> keep(m, true);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m && keep[i]; ++j) {
            if (i == j || !keep[j]) continue;
            if (!K[j].inside(K[i])) continue;
            if (K[j].dim() < K[i].dim() || j < i) keep[i] = false;
        }
    for (int i = 0; i < m; ++i) {
        if (!keep[i]) continue;
        const ConstancyResult c = constant_on_affine(test, K[i], mu0, seed);
        if (c.status == ConstancyStatus::AllInNstar) {
            out.dropped_nstar.push_back(i);
            continue;
        }
        if (c.status != ConstancyStatus::Constant)
            throw InputError("cstar_bounds: T is not constant on mu0 + S for member " + std::to_string(i) +
                             " (spread " + std::to_string(c.spread) + ")");
        out.kept.push_back(i);
        out.constants.push_back(c.value);
        out.c_lower = std::min(out.c_lower, c.value);
        out.c_upper = std::max(out.c_upper, c.value);
    }
    return out;
}

} // namespace hardiag
