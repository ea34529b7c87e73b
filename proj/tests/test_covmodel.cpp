#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace hardiag;
using namespace testsupport;

namespace {

double total_mass(const SpectralModel& f)
{
    const auto q = integrate_adaptive_scalar([&](double w) { return f.density(w); }, 0.0, std::numbers::pi, 1e-12, 64);
    return 2.0 * q.value[0];
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m)
{
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
}

Eigen::VectorXd top_eigenvector(const Eigen::MatrixXd& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvectors().col(m.rows() - 1);
}

double angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::acos(std::min(1.0, c));
}

} // namespace

TEST_CASE("ar_spectral examples")
{
    const SpectralModel w = SpectralModel::ar({});
    CHECK(w.density(0.3) == doctest::Approx(1 / (2 * std::numbers::pi)));
    CHECK((w.covariance(5) - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(SpectralModel::ar({0.9}).covariance(4)(0, 1) == doctest::Approx(0.9).epsilon(1e-10));
    const Eigen::MatrixXd S = SpectralModel::ar({0.5, -0.3}).covariance(6);
    CHECK((S - toeplitz(yule_walker_acf({0.5, -0.3}, 6))).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_THROWS_AS(SpectralModel::ar({1.0}), InputError);
    CHECK_THROWS_AS(SpectralModel::ar({0.5, 0.6}), InputError);
}

TEST_CASE("arma covariance has unit diagonal and matches its density")
{
    const SpectralModel f = SpectralModel::arma({0.4}, {0.3});
    CHECK(total_mass(f) == doctest::Approx(1.0).epsilon(1e-8));
    const Eigen::MatrixXd S = f.covariance(5);
    CHECK(S.diagonal().cwiseAbs().minCoeff() == doctest::Approx(1.0).epsilon(1e-9));
    // ARMA(1,1) lag-1 autocorrelation (1 + phi theta)(phi + theta) / (1 + 2 phi theta + theta^2)
    const double phi = 0.4, th = 0.3;
    CHECK(S(0, 1) == doctest::Approx((1 + phi * th) * (phi + th) / (1 + 2 * phi * th + th * th)).epsilon(1e-8));
    CHECK(S(0, 2) == doctest::Approx(phi * S(0, 1)).epsilon(1e-8));
}

TEST_CASE("spiked_ar2 examples")
{
    CHECK(total_mass(SpectralModel::spiked_ar2(0.5, std::numbers::pi / 2)) == doctest::Approx(1.0).epsilon(1e-8));
    const SpectralModel near_white = SpectralModel::spiked_ar2(0.01, 1.0);
    double sup = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double w = std::numbers::pi * i / 1000;
        sup = std::max(sup, std::abs(near_white.density(w) - 1 / (2 * std::numbers::pi)));
    }
    CHECK(sup < 0.05);
    const Eigen::MatrixXd S = SpectralModel::spiked_ar2(0.999, 1.0).covariance(20);
    const Eigen::VectorXd ev = eigenvalues(S / S.norm());
    CHECK(ev(17) < 0.05);  // distance to the best rank-2 approximation
    CHECK_THROWS_AS(SpectralModel::spiked_ar2(1.0, 1.0), InputError);
    CHECK_THROWS_AS(SpectralModel::spiked_ar2(0.5, 0.0), InputError);
}

TEST_CASE("spiked_ar2 covariance matches Yule-Walker of its AR(2) form")
{
    const double r = 0.8, xi = 0.7;
    const SpectralModel f = SpectralModel::spiked_ar2(r, xi);
    const std::vector<double> phi = {2 * r * std::cos(xi), -r * r};
    CHECK((f.covariance(8) - toeplitz(yule_walker_acf(phi, 8))).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("ar2ext examples and linearity")
{
    const SpectralModel base = SpectralModel::spiked_ar2(0.9, 1.0);
    CHECK((ar2ext(base, 0.0, 1.0).covariance(6) - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((ar2ext(base, 1.0, 0.0).covariance(6) - base.covariance(6)).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd mix = ar2ext(base, 0.5, 0.5).covariance(6);
    const Eigen::MatrixXd expect = 0.5 * base.covariance(6) + 0.5 * Eigen::MatrixXd::Identity(6, 6);
    CHECK((mix - expect).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(total_mass(ar2ext(base, 0.3, 0.7)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_THROWS_AS(ar2ext(base, 0.5, 0.6), InputError);
    CHECK_THROWS_AS(ar2ext(base, -0.1, 1.1), InputError);
}

TEST_CASE("tabulated densities are renormalized")
{
    const SpectralModel f = SpectralModel::tabulated({1.0, 2.0, 3.0, 2.0});
    CHECK(total_mass(f) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(f.covariance(4).diagonal().minCoeff() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("boundary_sequence: gamma = 0 concentrates on the constant vector")
{
    const SpectralModel f = boundary_sequence(0.0, SubspaceBasis::zero(8), 10000);
    const Eigen::MatrixXd S = f.covariance(8);
    const Eigen::MatrixXd target = Eigen::MatrixXd::Ones(8, 8) / 8.0;
    CHECK((S / S.norm() - target).norm() < 0.02);
}

TEST_CASE("boundary_sequence: interior gamma has a rank-two limit")
{
    const SpectralModel f = boundary_sequence(std::numbers::pi / 2, SubspaceBasis::zero(8), 10000);
    const Eigen::MatrixXd S = f.covariance(8);
    const Eigen::VectorXd ev = eigenvalues(S / S.norm());
    int count = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > 0.02 * ev.maxCoeff()) ++count;
    CHECK(count == 2);
}

TEST_CASE("boundary_sequence: projected limit follows the first escaping trend")
{
    const SubspaceBasis L = SubspaceBasis::span_of(Eigen::MatrixXd::Ones(8, 1));
    const SpectralModel f = boundary_sequence(0.0, L, 10000);
    const Eigen::MatrixXd P = L.perp_projector();
    const Eigen::MatrixXd proj = P * f.covariance(8) * P;
    const Eigen::VectorXd dir = P * reduced_trig_basis(8, 1, 0.0);
    CHECK(angle(top_eigenvector(proj), dir) < 0.05);
}

TEST_CASE("l_of_sigma, sharp and natural transforms at the identity")
{
    const int n = 6;
    const SubspaceBasis L = SubspaceBasis::span_of(polynomial_design(n, 2));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const double s = std::sqrt(double(n - 2));
    CHECK((l_of_sigma(I, L) - L.perp_projector() / s).norm() < 1e-12);
    CHECK((sharp_transform(I, L) - I / s).norm() < 1e-12);
    CHECK((natural_transform(I, L) - (L.perp_projector() / s + L.projector())).norm() < 1e-12);
    CHECK_THROWS_AS(l_of_sigma(-I, L), InputError);
}

TEST_CASE("sharp transform near the boundary is nearly singular")
{
    const int n = 6;
    const SubspaceBasis L = SubspaceBasis::span_of(Eigen::MatrixXd::Ones(n, 1));
    const Eigen::MatrixXd S = SpectralModel::ar({0.99}).covariance(n);
    const Eigen::VectorXd ev = eigenvalues(l_of_sigma(S, L));
    CHECK(ev(1) < 0.1);  // (l+1)-th smallest, l = 1
    const Eigen::VectorXd es = eigenvalues(sharp_transform(S, L));
    CHECK(es(0) / es(n - 1) < 0.1);
    CHECK(es(0) > 0.0);
}

TEST_CASE("sharp transforms along a boundary sequence approach a singular limit")
{
    const int n = 8;
    const SubspaceBasis L = SubspaceBasis::span_of(Eigen::MatrixXd::Ones(n, 1));
    double prev = std::numeric_limits<double>::infinity();
    for (int m : {10, 100, 1000, 10000}) {
        const Eigen::MatrixXd S = boundary_sequence(0.0, L, m).covariance(n);
        const Eigen::VectorXd ev = eigenvalues(l_of_sigma(S, L));
        CHECK(ev(1) < prev);
        prev = ev(1);
        if (m == 10000) {
            const Eigen::MatrixXd sharp = sharp_transform(S, L);
            const Eigen::VectorXd dir = L.perp_projector() * reduced_trig_basis(n, 1, 0.0);
            CHECK(angle(top_eigenvector(sharp), dir) < 0.05);
        }
    }
}

TEST_CASE("default boundary grid")
{
    const CovModelGrid g = default_boundary_grid();
    CHECK(g.members.size() == 11);
    CHECK(g.members.back().covariance(3)(0, 1) == doctest::Approx(1 - 1e-6).epsilon(1e-10));
    CHECK(default_boundary_grid(true).members.front().covariance(3)(0, 1) == doctest::Approx(-0.9).epsilon(1e-10));
}
