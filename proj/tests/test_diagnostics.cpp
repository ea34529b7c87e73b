#include "support.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hardiag;
using namespace testsupport;

namespace {

DesignProblem trend_problem(int n, int kF = 2)
{
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(1, kF);
    R(0, kF - 1) = 1.0;
    return DesignProblem(polynomial_design(n, kF), R, Eigen::VectorXd::Zero(1));
}

DesignProblem location_model(int n)
{
    return DesignProblem(Eigen::MatrixXd::Ones(n, 1), Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1));
}

DesignProblem random_problem(int n, int k, unsigned seed)
{
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(1, k);
    R(0, 0) = 1.0;
    return DesignProblem(gaussian_matrix(n, k, seed), R, Eigen::VectorXd::Zero(1));
}

KernelOmega kernel(KernelName k, double M)
{
    return KernelOmega{k, M, {}};
}

McConfig mc(std::int64_t reps, std::uint64_t seed)
{
    McConfig c;
    c.replications = reps;
    c.master_seed = seed;
    return c;
}

CovModelGrid grid_of(std::vector<SpectralModel> members)
{
    CovModelGrid g;
    g.members = std::move(members);
    g.label = "test";
    return g;
}

// Smallest squared residual of E_{n,0}(w) off span(X) over a uniform scan.
double scan_min_residual(const SubspaceBasis& span, int points)
{
    const Eigen::MatrixXd P = span.perp_projector();
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= points; ++i) {
        const double w = std::numbers::pi * i / points;
        const Eigen::MatrixXd e = reduced_trig_basis(span.ambient(), 0, w);
        best = std::min(best, (P * e).squaredNorm() / e.squaredNorm());
    }
    return best;
}

} // namespace

TEST_CASE("j_singletons: location model")
{
    const DesignProblem dp = location_model(8);
    const std::vector<JMember> J = j_singletons(dp);
    bool found = false;
    for (const JMember& m : J) {
        if (m.gamma != 0.0) continue;
        found = true;
        CHECK(m.basis.dim() == 1);
        CHECK(m.basis.inclusion_residual(Eigen::MatrixXd::Ones(8, 1)) < 1e-12);
    }
    CHECK(found);
}

TEST_CASE("j_singletons: trend design at gamma 0")
{
    const DesignProblem dp = trend_problem(12);
    const std::vector<JMember> J = j_singletons(dp);
    const JMember* zero = nullptr;
    for (const JMember& m : J)
        if (m.gamma == 0.0) zero = &m;
    REQUIRE(zero != nullptr);
    CHECK(zero->order == 1);
    REQUIRE(zero->basis.dim() == 1);
    Eigen::VectorXd trend(12), ones = Eigen::VectorXd::Ones(12);
    for (int j = 1; j <= 12; ++j) trend(j - 1) = j;
    const Eigen::VectorXd proj = trend - ones * (ones.dot(trend) / 12.0);
    CHECK(zero->basis.inclusion_residual(proj) < 1e-12);
}

TEST_CASE("j_singletons: n = k + 1 with q = 1 excludes interior gammas")
{
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(1, 3);
    R(0, 2) = 1.0;
    const DesignProblem dp(polynomial_design(4, 3), R, Eigen::VectorXd::Zero(1));
    for (const JMember& m : j_singletons(dp, {0.7, 1.9})) CHECK(is_boundary_frequency(m.gamma));
    const DesignProblem roomy(polynomial_design(9, 3), R, Eigen::VectorXd::Zero(1));
    int interior = 0;
    for (const JMember& m : j_singletons(roomy, {0.7, 1.9}))
        if (!is_boundary_frequency(m.gamma)) ++interior;
    CHECK(interior == 2);
}

TEST_CASE("verdict: polynomial trend with psd kernel is size one")
{
    for (int kF = 1; kF <= 3; ++kF) {
        const Verdict v = size_control_verdict(Estimator(trend_problem(40, kF), kernel(KernelName::Bartlett, 8)));
        CHECK(v.outcome == Outcome::SizeOne);
        REQUIRE(v.witness);
        CHECK(v.witness->gamma == 0.0);
        CHECK(v.witness->residual <= kInclusionTol);
        CHECK(v.rule == kRuleTrigInclusion);
    }
}

TEST_CASE("verdict: cyclical design is size one at its frequency")
{
    const double w = 1.1;
    const DesignProblem dp(cyclical_design(30, w, Eigen::MatrixXd::Ones(30, 1)), Eigen::RowVector3d(1, 0, 0),
                           Eigen::VectorXd::Zero(1));
    const Verdict v = size_control_verdict(Estimator(dp, kernel(KernelName::Parzen, 6)));
    CHECK(v.outcome == Outcome::SizeOne);
    REQUIRE(v.witness);
    CHECK(v.witness->gamma == doctest::Approx(w).epsilon(1e-7));
}

TEST_CASE("verdict: generic random design is size controllable")
{
    const DesignProblem dp = random_problem(25, 3, 2024);
    const Verdict v = size_control_verdict(Estimator(dp, kernel(KernelName::Bartlett, 5)));
    CHECK(v.outcome == Outcome::SizeControllable);
    CHECK(v.rule == kRuleNoInclusion);
    CHECK(scan_min_residual(dp.span_x(), 100000) > 1e-6);
}

TEST_CASE("verdict: indefinite weights on a trend design give a lower bound")
{
    const DesignProblem dp = trend_problem(30);
    const Verdict v = size_control_verdict(Estimator(dp, kernel(KernelName::Rectangular, 15)));
    CHECK(v.outcome == Outcome::LowerBound);
    CHECK(v.bound > 0.25);
    CHECK(v.bound <= 1.0);
    CHECK(v.rule == kRuleLowerBound);
}

TEST_CASE("poly_lower_bound examples")
{
    const McConfig cfg = mc(20000, 1);
    const BoundResult psd = poly_lower_bound(Estimator(trend_problem(30), kernel(KernelName::Bartlett, 6)), cfg);
    CHECK(psd.exact);
    CHECK(psd.value == 1.0);

    const BoundResult rect = poly_lower_bound(Estimator(trend_problem(150), kernel(KernelName::Rectangular, 75)), cfg, 1e-6);
    CHECK(rect.exact);
    CHECK(rect.value > 0.25);
    CHECK(rect.value < 1.0);

    const BoundResult ones = poly_lower_bound(Estimator(trend_problem(30), kernel(KernelName::Rectangular, 40)), cfg);
    CHECK(ones.value == 1.0);

    Eigen::MatrixXd X(20, 2);
    X << Eigen::VectorXd::Ones(20), gaussian_vector(20, 3);
    const DesignProblem no_poly(X, Eigen::RowVector2d(0, 1), Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(poly_lower_bound(Estimator(no_poly, kernel(KernelName::Bartlett, 4)), cfg), InputError);
}

TEST_CASE("poly_lower_bound agrees with a Monte Carlo quadratic-form oracle")
{
    const DesignProblem dp = trend_problem(40);
    const BoundResult b = poly_lower_bound(Estimator(dp, kernel(KernelName::Rectangular, 20)), mc(1000, 1), 1e-8);
    const Eigen::MatrixXd P = dp.span_x().perp_projector();
    const Eigen::MatrixXd A = P * kernel_weights(KernelName::Rectangular, 20, 40) * P;
    const auto [p, se] = mc_quadform(A, Eigen::MatrixXd::Identity(40, 40), 400000, 77);
    CHECK(std::abs(b.value - p) <= 4 * se);
}

TEST_CASE("k_gamma examples")
{
    const DesignProblem dp = trend_problem(30);
    const McConfig cfg = mc(20000, 5);
    const KGammaResult nnd = k_gamma(Estimator(dp, kernel(KernelName::Bartlett, 6)), 0.0, cfg);
    CHECK(nnd.value == 1.0);

    const Estimator rect(dp, kernel(KernelName::Rectangular, 15));
    const KGammaResult k0 = k_gamma(rect, 0.0, cfg);
    const BoundResult pb = poly_lower_bound(rect, cfg);
    CHECK(k0.value == doctest::Approx(pb.value).epsilon(1e-7));

    const Estimator vog(dp, VogelsangOmega{1.0, gaussian_matrix(30, 1, 8), 1, VogelsangV::I});
    const KGammaResult kv = k_gamma(vog, 0.0, cfg);
    CHECK(std::abs(kv.value - 1.0) <= std::max(4 * kv.se, 1e-12));

    CHECK_THROWS_AS(k_gamma(rect, 1.0, cfg), InputError);

    const KGammaSummary all = k_gamma_all(rect, cfg);
    REQUIRE(all.members.size() == 1);
    CHECK(all.min == doctest::Approx(k0.value));
}

TEST_CASE("exact_rejection_prob examples")
{
    const int n = 20;
    const DesignProblem dp = trend_problem(n);
    const Estimator eick(dp, EickerOmega{});
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    CHECK(exact_rejection_prob(eick, I, 0.0) == 1.0);

    const boost::math::fisher_f F(1, n - 2);
    for (double c : {0.5, 2.0, boost::math::quantile(F, 0.95), 9.0})
        CHECK(exact_rejection_prob(eick, I, c, 1e-9) ==
              doctest::Approx(boost::math::cdf(boost::math::complement(F, c))).epsilon(1e-7));

    const Estimator bart(dp, kernel(KernelName::Bartlett, 5));
    const Eigen::MatrixXd S = SpectralModel::ar({0.6}).covariance(n);
    const double exact = exact_rejection_prob(bart, S, 3.84);
    const McResult sim = mc_rejection_prob(bart, S, 3.84, mc(1000000, 11));
    CHECK(std::abs(exact - sim.estimate) <= 4 * sim.standard_error);

    CHECK_THROWS_AS(exact_rejection_prob(Estimator(dp, AmOmega{}), I, 1.0), InputError);
}

TEST_CASE("probabilities are invariant to sigma^2")
{
    const int n = 20;
    const DesignProblem dp = trend_problem(n);
    const Estimator bart(dp, kernel(KernelName::Bartlett, 5));
    const Eigen::MatrixXd S = SpectralModel::ar({0.8}).covariance(n);
    CHECK(std::abs(exact_rejection_prob(bart, S, 2.0, 1e-9) - exact_rejection_prob(bart, 100.0 * S, 2.0, 1e-9)) < 1e-8);
    const McResult a = mc_rejection_prob(bart, S, 2.0, mc(20000, 3), false, 1.0);
    const McResult b = mc_rejection_prob(bart, S, 2.0, mc(20000, 3), false, 100.0);
    CHECK(std::abs(a.estimate - b.estimate) <= 4 * std::hypot(a.standard_error, b.standard_error));
}

TEST_CASE("size_curve: exact and Monte Carlo agree")
{
    const int n = 16;
    const DesignProblem dp = trend_problem(n);
    const Estimator bart(dp, kernel(KernelName::Bartlett, 4));
    const CovModelGrid g = grid_of({SpectralModel::white(), SpectralModel::ar({0.5}), SpectralModel::ar({0.95})});
    const auto exact = size_curve(bart, g, 3.84, CurveMethod::Exact);
    const auto sim = size_curve(bart, g, 3.84, CurveMethod::MonteCarlo, mc(40000, 9));
    REQUIRE(exact.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(exact[i].probability - sim[i].probability) <= 4 * sim[i].se);
    CHECK(exact[0].probability < exact[1].probability);
    CHECK(exact[1].probability < exact[2].probability);

    const Estimator eick(dp, EickerOmega{});
    const double c = boost::math::quantile(boost::math::fisher_f(1, n - 2), 0.95);
    CHECK(size_curve(eick, grid_of({SpectralModel::white()}), c, CurveMethod::Exact)[0].probability ==
          doctest::Approx(0.05).epsilon(1e-6));
}

TEST_CASE("power_degeneracy classifications")
{
    const int n = 9;
    const DesignProblem dp(gaussian_matrix(n, 1, 14), Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1));
    const Estimator eick(dp, EickerOmega{});
    const PowerReport base = power_degeneracy(eick, 1.0);
    REQUIRE(base.in_scope);
    REQUIRE(base.distinct_constants);
    const PowerReport low = power_degeneracy(eick, base.c_upper - 0.1);
    CHECK(low.size_one);
    const PowerReport high = power_degeneracy(eick, base.c_lower + 0.1);
    CHECK(high.infimal_power_zero);
    const PowerReport at = power_degeneracy(eick, base.c_upper);
    CHECK(at.undetermined);

    // projected boundary sequences confirm the size-one classification
    const FTypeTest t(eick);
    const double c = base.c_upper - 0.1;
    const double gamma = base.subspaces[0].constancy.value > base.subspaces[1].constancy.value ? base.subspaces[0].gamma
                                                                                              : base.subspaces[1].gamma;
    const Eigen::MatrixXd S = boundary_sequence(gamma, dp.m0lin(), 100000).covariance(n);
    CHECK(exact_rejection_prob(eick, S, c) >= 0.99);
}

TEST_CASE("power_degeneracy outside its scope")
{
    const DesignProblem dp = trend_problem(12);
    const PowerReport r = power_degeneracy(Estimator(dp, AmOmega{}), 1.0);
    CHECK_FALSE(r.in_scope);
}

TEST_CASE("critical_value_search")
{
    const int n = 20;
    const DesignProblem dp = trend_problem(n);
    const CovModelGrid white = grid_of({SpectralModel::white()});
    const CriticalResult f =
        critical_value_search(Estimator(random_problem(n, 2, 31), EickerOmega{}), white, 0.05, 0.0, 50.0, CurveMethod::Exact);
    CHECK_FALSE(f.refused);
    const double fq = boost::math::quantile(boost::math::fisher_f(1, n - 2), 0.95);
    CHECK(f.achieved <= 0.05);
    CHECK(f.achieved >= 0.05 - 1e-3);
    CHECK(std::abs(f.critical - fq) < 0.05);

    const CriticalResult refused =
        critical_value_search(Estimator(dp, EickerOmega{}), white, 0.05, 0.0, 50.0, CurveMethod::Exact);
    CHECK(refused.refused);
    REQUIRE(refused.verdict.witness);
    CHECK(refused.verdict.witness->gamma == 0.0);

    const DesignProblem gen = random_problem(25, 3, 2024);
    const Estimator bart(gen, kernel(KernelName::Bartlett, 5));
    const CovModelGrid ar = grid_of({SpectralModel::white(), SpectralModel::ar({0.5}), SpectralModel::ar({0.9}),
                                     SpectralModel::ar({0.99}), SpectralModel::ar({0.999})});
    const CriticalResult c05 = critical_value_search(bart, ar, 0.05, 0.0, 1e4, CurveMethod::Exact);
    const CriticalResult c10 = critical_value_search(bart, ar, 0.10, 0.0, 1e4, CurveMethod::Exact);
    REQUIRE_FALSE(c05.refused);
    CHECK(std::isfinite(c05.critical));
    CHECK(c05.critical > c10.critical);
}
