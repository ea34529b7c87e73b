#include "hardiag/covmodel.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/quadrature.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace hardiag {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_stationary(const std::vector<double>& phi)
{
    const int p = static_cast<int>(phi.size());
    if (p == 0) return;
    for (double v : phi)
        if (!std::isfinite(v)) throw InputError("AR coefficients must be finite");
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (int k = 0; k < p; ++k) companion(0, k) = phi[k];
    for (int k = 1; k < p; ++k) companion(k, k - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0)
        throw InputError("AR polynomial has a root on or inside the unit circle");
}

// rho(0..n-1) for a stationary AR(p) from the Yule-Walker system and recursion.
Eigen::VectorXd ar_autocorrelations(const std::vector<double>& phi, int n)
{
    const int p = static_cast<int>(phi.size());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(std::max(n, p + 1));
    out(0) = 1.0;
    if (p > 0) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(p, p);
        Eigen::VectorXd rhs(p);
        for (int h = 1; h <= p; ++h) {
            rhs(h - 1) = phi[h - 1];
            for (int k = 1; k <= p; ++k) {
                const int lag = std::abs(h - k);
                if (lag >= 1) a(h - 1, lag - 1) -= phi[k - 1];
            }
        }
        const Eigen::VectorXd r = a.fullPivLu().solve(rhs);
        for (int h = 1; h <= p; ++h) out(h) = r(h - 1);
        for (int h = p + 1; h < out.size(); ++h) {
            double acc = 0.0;
            for (int k = 1; k <= p; ++k) acc += phi[k - 1] * out(h - k);
            out(h) = acc;
        }
    }
    return out.head(n);
}

double poly_mod_sq(const std::vector<double>& c, double sign, double omega)
{
    // |1 + sign * sum c_k e^{-i k omega}|^2
    std::complex<double> acc(1.0, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k)
        acc += sign * c[k] * std::polar(1.0, -double(k + 1) * omega);
    return std::norm(acc);
}

std::string join(const std::vector<double>& v)
{
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
}

} // namespace

SpectralModel SpectralModel::white()
{
    return SpectralModel(White{});
}

SpectralModel SpectralModel::ar(std::vector<double> coefficients)
{
    if (coefficients.empty()) return white();
    require_stationary(coefficients);
    const Eigen::VectorXd r = ar_autocorrelations(coefficients, static_cast<int>(coefficients.size()) + 1);
    double denom = 1.0;
    for (std::size_t k = 0; k < coefficients.size(); ++k) denom -= coefficients[k] * r(static_cast<Eigen::Index>(k + 1));
    return SpectralModel(Ar{std::move(coefficients), 1.0 / denom});
}

SpectralModel SpectralModel::arma(std::vector<double> ar_coefficients, std::vector<double> ma_coefficients)
{
    require_stationary(ar_coefficients);
    for (double v : ma_coefficients)
        if (!std::isfinite(v)) throw InputError("MA coefficients must be finite");
    Arma a{std::move(ar_coefficients), std::move(ma_coefficients), 1.0};
    auto shape = [&](double w) { return poly_mod_sq(a.theta, 1.0, w) / poly_mod_sq(a.phi, -1.0, w); };
    QuadratureResult q = integrate_adaptive_scalar(shape, 0.0, std::numbers::pi, 1e-13, 16, 60);
    if (!q.converged) throw NumericalFailure("arma: normalization quadrature failed");
    a.scale = 1.0 / (2.0 * q.value(0));
    return SpectralModel(std::move(a));
}

SpectralModel SpectralModel::spiked_ar2(double radius, double angle)
{
    if (!(radius > 0.0 && radius < 1.0)) throw InputError("spiked_ar2: radius must lie in (0, 1)");
    if (!(angle > 0.0 && angle < std::numbers::pi)) throw InputError("spiked_ar2: angle must lie in (0, pi)");
    return SpectralModel(Spiked{radius, angle});
}

SpectralModel SpectralModel::convex(const SpectralModel& base, double c1, double c2)
{
    if (!(c1 >= 0.0 && c2 >= 0.0) || std::abs(c1 + c2 - 1.0) > 1e-12)
        throw InputError("convex: need c1, c2 >= 0 with c1 + c2 = 1");
    return SpectralModel(Convex{std::make_shared<const SpectralModel>(base), c1, c2});
}

SpectralModel SpectralModel::tabulated(std::vector<double> values)
{
    if (values.size() < 2) throw InputError("tabulated: need at least two grid values");
    double trap = 0.0;
    const double h = std::numbers::pi / static_cast<double>(values.size() - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0) || !std::isfinite(values[i])) throw InputError("tabulated: values must be finite and >= 0");
        trap += (i == 0 || i + 1 == values.size() ? 0.5 : 1.0) * values[i] * h;
    }
    if (!(trap > 0.0)) throw InputError("tabulated: density is identically zero");
    for (double& v : values) v /= 2.0 * trap;
    return SpectralModel(Tabulated{std::move(values)});
}

SpectralKind SpectralModel::kind() const
{
    return static_cast<SpectralKind>(data_.index());
}

double SpectralModel::density(double omega) const
{
    omega = std::abs(std::remainder(omega, kTwoPi));
    return std::visit(
        [&](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, White>) {
                return 1.0 / kTwoPi;
            } else if constexpr (std::is_same_v<T, Ar>) {
                return 1.0 / (kTwoPi * d.gamma0 * poly_mod_sq(d.phi, -1.0, omega));
            } else if constexpr (std::is_same_v<T, Arma>) {
                return d.scale * poly_mod_sq(d.theta, 1.0, omega) / poly_mod_sq(d.phi, -1.0, omega);
            } else if constexpr (std::is_same_v<T, Spiked>) {
                const double r2 = d.radius * d.radius;
                const double c = std::cos(d.angle);
                const double norm = (1.0 - r2) * ((1.0 + r2) * (1.0 + r2) - 4.0 * r2 * c * c) / (1.0 + r2);
                const std::complex<double> e1 = 1.0 - d.radius * std::polar(1.0, -d.angle - omega);
                const std::complex<double> e2 = 1.0 - d.radius * std::polar(1.0, d.angle - omega);
                return norm / (kTwoPi * std::norm(e1) * std::norm(e2));
            } else if constexpr (std::is_same_v<T, Convex>) {
                return d.c1 * d.base->density(omega) + d.c2 / kTwoPi;
            } else {
                const double h = std::numbers::pi / static_cast<double>(d.values.size() - 1);
                const double pos = omega / h;
                const auto i = std::min(static_cast<std::size_t>(pos), d.values.size() - 2);
                const double t = pos - static_cast<double>(i);
                return (1.0 - t) * d.values[i] + t * d.values[i + 1];
            }
        },
        data_);
}

std::vector<double> SpectralModel::ar_form() const
{
    if (const auto* a = std::get_if<Ar>(&data_)) return a->phi;
    if (const auto* s = std::get_if<Spiked>(&data_))
        return {2.0 * s->radius * std::cos(s->angle), -s->radius * s->radius};
    return {};
}

Eigen::VectorXd SpectralModel::autocorrelations(int n) const
{
    if (n < 1) throw InputError("autocorrelations: n must be positive");
    switch (kind()) {
    case SpectralKind::White: {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        r(0) = 1.0;
        return r;
    }
    case SpectralKind::Ar:
    case SpectralKind::SpikedAr2:
        return ar_autocorrelations(ar_form(), n);
    case SpectralKind::Convex: {
        const auto& c = std::get<Convex>(data_);
        Eigen::VectorXd r = c.c1 * c.base->autocorrelations(n);
        r(0) += c.c2;
        return r;
    }
    default:
        return toeplitz_from_spectral([this](double w) { return density(w); }, n).col(0);
    }
}

Eigen::MatrixXd SpectralModel::covariance(int n) const
{
    return symmetric_toeplitz(autocorrelations(n));
}

std::string SpectralModel::describe() const
{
    std::ostringstream s;
    s.precision(17);
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, White>) {
                s << "white";
            } else if constexpr (std::is_same_v<T, Ar>) {
                s << "ar:" << join(d.phi);
            } else if constexpr (std::is_same_v<T, Arma>) {
                s << "arma:" << join(d.phi) << "|" << join(d.theta);
            } else if constexpr (std::is_same_v<T, Spiked>) {
                s << "spiked:" << d.radius << "," << d.angle;
            } else if constexpr (std::is_same_v<T, Convex>) {
                s << "ext:" << d.c1 << "@" << d.base->describe();
            } else {
                s << "tabulated:" << d.values.size();
            }
        },
        data_);
    return s.str();
}

SpectralModel ar2ext(const SpectralModel& base, double c1, double c2)
{
    const SpectralKind k = base.kind();
    const bool ok = k == SpectralKind::White || k == SpectralKind::SpikedAr2 ||
                    (k == SpectralKind::Ar && base.ar_form().size() <= 2);
    if (!ok) throw InputError("ar2ext: base must be an AR model of order at most two");
    return SpectralModel::convex(base, c1, c2);
}

SpectralModel boundary_sequence(double gamma, const SubspaceBasis& L, int m)
{
    if (m < 1) throw InputError("boundary_sequence: m must be positive");
    if (gamma < -1e-12 || gamma > std::numbers::pi + 1e-12) throw InputError("boundary_sequence: gamma outside [0, pi]");
    if (L.dim() >= L.ambient() && L.ambient() > 0) throw InputError("boundary_sequence: dim(L) must be below n");
    const double radius = 1.0 - 1.0 / (m + 1.0);
    double offset = 1.0 / (m + 3.0);
    if (gamma <= 1e-12) return SpectralModel::spiked_ar2(radius, offset);
    if (gamma >= std::numbers::pi - 1e-12) return SpectralModel::spiked_ar2(radius, std::numbers::pi - offset);
    auto admissible = [&](double xi) {
        return xi > 0.0 && xi < std::numbers::pi && (L.ambient() == 0 || rho(xi, L) == 0);
    };
    if (admissible(gamma)) return SpectralModel::spiked_ar2(radius, gamma);
    for (int attempt = 0; attempt < 60; ++attempt, offset *= 0.5) {
        if (admissible(gamma + offset)) return SpectralModel::spiked_ar2(radius, gamma + offset);
        if (admissible(gamma - offset)) return SpectralModel::spiked_ar2(radius, gamma - offset);
    }
    throw NumericalFailure("boundary_sequence: no admissible angle near gamma");
}

namespace {

void require_pd(const Eigen::MatrixXd& sigma)
{
    if (sigma.rows() != sigma.cols()) throw InputError("covariance must be square");
    if (asymmetry(sigma) > 1e-12) throw InputError("covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw InputError("covariance must be positive definite");
}

} // namespace

Eigen::MatrixXd l_of_sigma(const Eigen::MatrixXd& sigma, const SubspaceBasis& L)
{
    require_pd(sigma);
    if (L.ambient() != sigma.rows() || L.dim() >= L.ambient()) throw InputError("l_of_sigma: L has the wrong shape");
    const Eigen::MatrixXd p = L.perp_projector();
    Eigen::MatrixXd m = symmetrized(Eigen::MatrixXd(p * sigma * p));
    return m / m.norm();
}

Eigen::MatrixXd sharp_transform(const Eigen::MatrixXd& sigma, const SubspaceBasis& L)
{
    const Eigen::MatrixXd l = l_of_sigma(sigma, L);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l, Eigen::EigenvaluesOnly).eigenvalues();
    return l + ev(L.dim()) * L.projector();
}

Eigen::MatrixXd natural_transform(const Eigen::MatrixXd& sigma, const SubspaceBasis& L)
{
    return l_of_sigma(sigma, L) + L.projector();
}

CovModelGrid default_boundary_grid(bool negative)
{
    CovModelGrid g;
    g.label = negative ? "ar1 -(1-10^{-j/2}), j=2..12" : "ar1 1-10^{-j/2}, j=2..12";
    for (int j = 2; j <= 12; ++j) {
        const double r = 1.0 - std::pow(10.0, -j / 2.0);
        g.members.push_back(SpectralModel::ar({negative ? -r : r}));
    }
    return g;
}

} // namespace hardiag
