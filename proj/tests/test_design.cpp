#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace hardiag;
using namespace testsupport;

namespace {

DesignProblem location_model(int n)
{
    return DesignProblem(Eigen::MatrixXd::Ones(n, 1), Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1));
}

// Rank of columns after scaling each to unit norm, via singular values.
int svd_rank(const Eigen::MatrixXd& m)
{
    Eigen::MatrixXd s = m;
    for (Eigen::Index j = 0; j < s.cols(); ++j)
        if (s.col(j).norm() > 0) s.col(j).normalize();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s);
    const auto& sv = svd.singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-9 * sv(0)) ++r;
    return r;
}

} // namespace

TEST_CASE("polynomial_design examples")
{
    Eigen::MatrixXd expect(4, 2);
    expect << 1, 1, 1, 2, 1, 3, 1, 4;
    CHECK(polynomial_design(4, 2) == expect);
    CHECK(polynomial_design(3, 1) == Eigen::MatrixXd::Ones(3, 1));
    Eigen::VectorXd sq(5);
    sq << 1, 4, 9, 16, 25;
    CHECK(polynomial_design(5, 3).col(2) == sq);
    CHECK_THROWS_AS(polynomial_design(5, 2, Eigen::MatrixXd::Ones(5, 1)), InputError);
}

TEST_CASE("cyclical_design examples")
{
    const Eigen::MatrixXd X = cyclical_design(4, std::numbers::pi / 2);
    Eigen::VectorXd c(4), s(4);
    c << 0, -1, 0, 1;
    s << 1, 0, -1, 0;
    CHECK((X.col(0) - c).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((X.col(1) - s).cwiseAbs().maxCoeff() < 1e-15);
    const Eigen::MatrixXd Y = cyclical_design(2, std::numbers::pi / 3);
    CHECK(Y(0, 0) == doctest::Approx(0.5));
    CHECK(Y(0, 1) == doctest::Approx(std::sqrt(3.0) / 2));
    CHECK(Y(1, 0) == doctest::Approx(-0.5));
    CHECK(Y(1, 1) == doctest::Approx(std::sqrt(3.0) / 2));
    const Eigen::MatrixXd Z = cyclical_design(6, std::numbers::pi / 2, Eigen::MatrixXd::Ones(6, 1));
    CHECK(Z.cols() == 3);
    CHECK(svd_rank(Z) == 3);
    CHECK_THROWS_AS(cyclical_design(6, 0.0), InputError);
    CHECK_THROWS_AS(cyclical_design(6, std::numbers::pi), InputError);
}

TEST_CASE("trig_basis and reduced_trig_basis examples")
{
    const Eigen::MatrixXd E0 = trig_basis(4, 0, 0.0);
    CHECK(E0.col(0) == Eigen::VectorXd::Ones(4));
    CHECK(E0.col(1).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd Epi = trig_basis(4, 1, std::numbers::pi);
    Eigen::VectorXd alt(4);
    alt << -1, 2, -3, 4;
    CHECK((Epi.col(0) - alt).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Epi.col(1).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXd Eh = trig_basis(3, 2, std::numbers::pi / 2);
    Eigen::MatrixXd expect(3, 2);
    expect << 0, 1, -4, 0, 0, -9;
    CHECK((Eh - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(reduced_trig_basis(4, 0, 0.0).cols() == 1);
    CHECK(reduced_trig_basis(4, 0, std::numbers::pi).cols() == 1);
    CHECK(reduced_trig_basis(4, 0, 1.0).cols() == 2);
}

TEST_CASE("rho examples")
{
    CHECK(rho(0.7, SubspaceBasis::zero(6)) == 0);
    CHECK(rho(0.0, SubspaceBasis::span_of(Eigen::MatrixXd::Ones(6, 1))) == 1);
    const SubspaceBasis F3 = SubspaceBasis::span_of(polynomial_design(10, 3));
    CHECK(rho(0.0, F3) == 3);
    // rank oracle: E_{10,s}(0) first column inside F3 iff appending it keeps rank 3
    for (int s = 0; s < 5; ++s) {
        Eigen::MatrixXd aug(10, 4);
        aug << polynomial_design(10, 3), reduced_trig_basis(10, s, 0.0);
        CHECK((svd_rank(aug) == 3) == (s < 3));
    }
}

TEST_CASE("rho is monotone along nested subspaces")
{
    const Eigen::MatrixXd G = gaussian_matrix(12, 4, 3);
    Eigen::MatrixXd big(12, 7);
    big << polynomial_design(12, 3), G;
    for (int d = 1; d <= 7; ++d) {
        const SubspaceBasis L1 = SubspaceBasis::span_of(big.leftCols(d - 1 > 0 ? d - 1 : 1));
        const SubspaceBasis L2 = SubspaceBasis::span_of(big.leftCols(d));
        for (double w : {0.0, 0.4, 1.3, std::numbers::pi}) CHECK(rho(w, L1) <= rho(w, L2));
    }
}

TEST_CASE("singular_frequencies examples")
{
    CHECK(singular_frequencies(SubspaceBasis::zero(8)).p() == 0);
    const FrequencyProfile one = singular_frequencies(SubspaceBasis::span_of(Eigen::MatrixXd::Ones(8, 1)));
    REQUIRE(one.p() == 1);
    CHECK(one.omegas[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(one.orders[0] == 1);

    const SubspaceBasis L = SubspaceBasis::span_of(trig_basis(10, 0, std::numbers::pi / 2));
    const FrequencyProfile fp = singular_frequencies(L);
    REQUIRE(fp.p() == 1);
    CHECK(fp.omegas[0] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-7));
    CHECK(fp.orders[0] == 1);

    // independent scan at ten times the library grid resolution
    const Eigen::MatrixXd P = L.perp_projector();
    const int N = 2000000;
    double gmin_away = std::numeric_limits<double>::infinity(), gmin_near = gmin_away;
    for (int i = 0; i <= N; ++i) {
        const double w = std::numbers::pi * i / N;
        const double g = (P * trig_basis(10, 0, w)).squaredNorm();
        if (std::abs(w - std::numbers::pi / 2) < 1e-3) gmin_near = std::min(gmin_near, g);
        else gmin_away = std::min(gmin_away, g);
    }
    CHECK(gmin_near < 1e-10);
    CHECK(gmin_away > 1e-6);
}

TEST_CASE("singular_frequencies of a polynomial span")
{
    for (int kF = 1; kF <= 4; ++kF) {
        const FrequencyProfile fp = singular_frequencies(SubspaceBasis::span_of(polynomial_design(30, kF)));
        REQUIRE(fp.p() == 1);
        CHECK(fp.omegas[0] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(fp.orders[0] == kF);
        CHECK(kappa_total(fp) <= kF);
    }
}

TEST_CASE("kappa_total never exceeds the dimension")
{
    for (unsigned seed = 1; seed <= 4; ++seed) {
        const SubspaceBasis L = SubspaceBasis::span_of(gaussian_matrix(15, 3, seed));
        CHECK(kappa_total(singular_frequencies(L)) <= L.dim());
    }
    Eigen::MatrixXd mix(16, 4);
    mix << polynomial_design(16, 2), trig_basis(16, 0, 1.1);
    const SubspaceBasis L = SubspaceBasis::span_of(mix);
    const FrequencyProfile fp = singular_frequencies(L);
    CHECK(fp.p() == 2);
    CHECK(kappa_total(fp) == 4);
}

TEST_CASE("kappa examples")
{
    CHECK(kappa(0.0, 1) == 1);
    CHECK(kappa(std::numbers::pi, 4) == 4);
    CHECK(kappa(1.0, 3) == 6);
    FrequencyProfile empty;
    CHECK(kappa_total(empty) == 0);
}

TEST_CASE("m0lin examples")
{
    CHECK(location_model(5).m0lin().dim() == 0);
    Eigen::MatrixXd R(1, 2);
    R << 0, 1;
    const DesignProblem trend(polynomial_design(6, 2), R, Eigen::VectorXd::Zero(1));
    REQUIRE(trend.m0lin().dim() == 1);
    CHECK(trend.m0lin().inclusion_residual(Eigen::MatrixXd::Ones(6, 1)) < 1e-12);

    const Eigen::MatrixXd X = gaussian_matrix(10, 4, 17);
    const Eigen::MatrixXd R2 = Eigen::MatrixXd::Identity(4, 4).topRows(2);
    const DesignProblem dp(X, R2, Eigen::VectorXd::Zero(2));
    const SubspaceBasis& B = dp.m0lin();
    REQUIRE(B.dim() == 2);
    // null-space oracle: coordinates of B in X satisfy R c = 0
    const Eigen::MatrixXd coords = X.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(B.vectors());
    CHECK((R2 * coords).norm() < 1e-10);
    CHECK((dp.span_x().project(B.vectors()) - B.vectors()).norm() < 1e-10);
}

TEST_CASE("DesignProblem validation")
{
    CHECK_THROWS_AS(DesignProblem(Eigen::MatrixXd::Ones(3, 3), Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Zero(1)),
                    InputError);
    Eigen::MatrixXd R(2, 2);
    R << 1, 1, 2, 2;
    CHECK_THROWS_AS(DesignProblem(polynomial_design(6, 2), R, Eigen::VectorXd::Zero(2)), InputError);
    CHECK_THROWS_AS(DesignProblem(polynomial_design(6, 2), Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(2)),
                    InputError);
}

TEST_CASE("SubspaceBasis inclusion")
{
    const SubspaceBasis F2 = SubspaceBasis::span_of(polynomial_design(8, 2));
    const SubspaceBasis F1 = SubspaceBasis::span_of(polynomial_design(8, 1));
    CHECK(F1.inside(F2));
    CHECK_FALSE(F2.inside(F1));
    CHECK(F2.inclusion_residual(Eigen::MatrixXd::Zero(8, 1)) == 0.0);
}
