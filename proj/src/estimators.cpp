#include "hardiag/estimators.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/montecarlo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace hardiag {

KernelName parse_kernel(const std::string& name)
{
    std::string s;
    for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (s == "bartlett") return KernelName::Bartlett;
    if (s == "parzen") return KernelName::Parzen;
    if (s == "qs" || s == "quadratic_spectral" || s == "quadratic-spectral") return KernelName::QuadraticSpectral;
    if (s == "daniell") return KernelName::Daniell;
    if (s == "rectangular" || s == "rect") return KernelName::Rectangular;
    throw InputError("unknown kernel '" + name + "'");
}

std::string kernel_label(KernelName kernel)
{
    switch (kernel) {
    case KernelName::Bartlett: return "bartlett";
    case KernelName::Parzen: return "parzen";
    case KernelName::QuadraticSpectral: return "qs";
    case KernelName::Daniell: return "daniell";
    case KernelName::Rectangular: return "rectangular";
    }
    return "?";
}

Eigen::MatrixXd kernel_weights(KernelName kernel, double M, int n)
{
    if (!(M > 0.0) || !std::isfinite(M)) throw InputError("kernel_weights: bandwidth must be positive");
    if (n < 1) throw InputError("kernel_weights: n must be positive");
    return kernel_weight_matrix<double>(kernel, M, n);
}

double lrv(const Eigen::MatrixXd& W, const Eigen::VectorXd& u)
{
    if (W.rows() != u.size() || W.cols() != u.size()) throw InputError("lrv: dimension mismatch");
    return u.dot(W * u) / static_cast<double>(u.size());
}

OlsFit ols(const DesignProblem& dp, const Eigen::VectorXd& y)
{
    if (y.size() != dp.n()) throw InputError("ols: y has wrong length");
    return {dp.ols_beta(y), dp.residuals(y)};
}

Eigen::MatrixXd cumulative_sum_matrix(int n)
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a.row(i).head(i + 1).setOnes();
    return a;
}

namespace {

Eigen::MatrixXd cumsum(const Eigen::MatrixXd& m)
{
    Eigen::MatrixXd out = m;
    for (Eigen::Index i = 1; i < out.rows(); ++i) out.row(i) += out.row(i - 1);
    return out;
}

Eigen::VectorXd cumsum(const Eigen::VectorXd& v)
{
    Eigen::VectorXd out = v;
    for (Eigen::Index i = 1; i < out.size(); ++i) out(i) += out(i - 1);
    return out;
}

} // namespace

LeastSquares::LeastSquares(const Eigen::MatrixXd& Z)
{
    const Eigen::Index n = Z.rows(), m = Z.cols();
    if (m < 1 || m > n) throw InputError("LeastSquares: need 1 <= cols <= rows");
    scale_ = Z.colwise().norm().transpose();
    if ((scale_.array() <= 0.0).any()) throw InputError("LeastSquares: zero column");
    const Eigen::MatrixXd scaled = Z * scale_.cwiseInverse().asDiagonal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
    q_thin_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    tri_ = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd tinv = tri_.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::MatrixXd sinv = scale_.cwiseInverse().asDiagonal();
    gram_inv_ = symmetrized(Eigen::MatrixXd(sinv * tinv * tinv.transpose() * sinv));
}

Eigen::VectorXd LeastSquares::coefficients(const Eigen::VectorXd& w) const
{
    const Eigen::VectorXd z = tri_.triangularView<Eigen::Upper>().solve(Eigen::VectorXd(q_thin_.transpose() * w));
    return z.cwiseQuotient(scale_);
}

Eigen::VectorXd LeastSquares::residuals(const Eigen::VectorXd& w) const
{
    return residual(q_thin_, w);
}

std::optional<double> residual_autocorrelation(const Eigen::VectorXd& u, double y_norm_sq)
{
    const Eigen::Index n = u.size();
    if (n < 2) return std::nullopt;
    const double den = u.head(n - 1).squaredNorm();
    if (den <= 1e-24 * y_norm_sq || den == 0.0) return std::nullopt;
    return u.tail(n - 1).dot(u.head(n - 1)) / den;
}

double am_bandwidth(double rho_tilde, int n)
{
    const double d = 1.0 - rho_tilde;
    return 1.3221 * std::pow(n * 4.0 * rho_tilde * rho_tilde / (d * d * d * d), 0.2);
}

double bv_bandwidth(const Eigen::VectorXd& a, const Eigen::VectorXd& abar, double rho)
{
    double b = a(0);
    for (Eigen::Index i = 0; i < abar.size(); ++i)
        if (rho >= abar(i)) b += a(i + 1);
    return b;
}

double polynomial_value(const Eigen::VectorXd& coef, double b)
{
    double v = 0.0;
    for (Eigen::Index i = coef.size() - 1; i >= 0; --i) v = v * b + coef(i);
    return v;
}

std::string exceptional_label(ExceptionalSet s)
{
    switch (s) {
    case ExceptionalSet::Empty: return "empty";
    case ExceptionalSet::SpanX: return "span(X)";
    case ExceptionalSet::SpanXU: return "span(X,U)";
    case ExceptionalSet::AM: return "N_AM";
    case ExceptionalSet::BV: return "N_BV";
    case ExceptionalSet::BVU: return "N_BV,U";
    }
    return "?";
}

struct Estimator::Cache {
    int n = 0;
    // effective constant weights (kernel, Eicker, BV fixed); zero matrix when Pi W Pi vanishes
    Eigen::MatrixXd W;
    bool pwp_nnd = false;
    // Vogelsang
    std::optional<LeastSquares> vx_fit, ax_fit, z_fit, az_fit;
    Eigen::MatrixXd rcov_v;
    // BV data-driven
    bool level_sets = false;
};

namespace {

void check_u(const DesignProblem& dp, const Eigen::MatrixXd& U)
{
    if (U.rows() != dp.n()) throw InputError("U must have n rows");
    if (U.cols() < 1) throw InputError("U must have at least one column");
    if (dp.k() + U.cols() >= dp.n()) throw InputError("need k + m < n for (X, U)");
    Eigen::MatrixXd z(dp.n(), dp.k() + U.cols());
    z << dp.X(), U;
    if (column_rank(z) != z.cols()) throw InputError("(X, U) is not of full column rank");
}

Eigen::MatrixXd stack_xu(const DesignProblem& dp, const Eigen::MatrixXd& U)
{
    Eigen::MatrixXd z(dp.n(), dp.k() + U.cols());
    z << dp.X(), U;
    return z;
}

// Pi W Pi for the residual projector; returns (effective W, nnd flag).
std::pair<Eigen::MatrixXd, bool> effective_weights(const DesignProblem& dp, const Eigen::MatrixXd& W)
{
    const Eigen::MatrixXd pwp = symmetrized(Eigen::MatrixXd(dp.span_x().project_out(
        Eigen::MatrixXd(dp.span_x().project_out(W).transpose()))));
    if (pwp.norm() <= 1e-10 * W.norm()) return {Eigen::MatrixXd::Zero(W.rows(), W.cols()), true};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pwp, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    return {W, ev(0) >= -1e-10 * scale};
}

Eigen::MatrixXd kernel_matrix_of(const KernelOmega& k, int n)
{
    if (k.weights.size() > 0) {
        if (k.weights.rows() != n || k.weights.cols() != n) throw InputError("custom W must be n x n");
        if (asymmetry(k.weights) > 1e-12) throw InputError("custom W must be symmetric");
        return symmetrized(k.weights);
    }
    return kernel_weights(k.kernel, k.bandwidth, n);
}

bool in_span_by_residual(double resid_norm, double y_norm)
{
    return resid_norm <= 1e-12 * y_norm;
}

// (||Pi_Z w - Pi_X w||^2) / ||Pi_{Z perp} w||^2 from residuals on X and on Z.
double wald_ratio(const Eigen::VectorXd& res_x, const Eigen::VectorXd& res_z)
{
    return (res_x - res_z).squaredNorm() / res_z.squaredNorm();
}

double aa_ratio(const Eigen::VectorXd& u)
{
    const double n = static_cast<double>(u.size());
    return cumsum(u).squaredNorm() / u.squaredNorm() / (n * n);
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt_vec(const Eigen::VectorXd& v)
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
    return s;
}

} // namespace

Estimator::Estimator(DesignProblem dp, OmegaKind kind)
    : dp_(std::make_shared<const DesignProblem>(std::move(dp))), kind_(std::move(kind))
{
    const DesignProblem& d = *dp_;
    const int n = d.n();
    auto cache = std::make_shared<Cache>();
    cache->n = n;
    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, KernelOmega>) {
                std::tie(cache->W, cache->pwp_nnd) = effective_weights(d, kernel_matrix_of(spec, n));
            } else if constexpr (std::is_same_v<T, EickerOmega>) {
                Eigen::MatrixXd w = spec.weight.size() == 0 ? Eigen::MatrixXd::Identity(n, n) : spec.weight;
                if (w.rows() != n || w.cols() != n) throw InputError("Eicker weight must be n x n");
                if (asymmetry(w) > 1e-12) throw InputError("Eicker weight must be symmetric");
                w = symmetrized(w);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
                if (!(es.eigenvalues()(0) > 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff()))
                    throw InputError("Eicker weight must be positive definite");
                cache->W = w;
                cache->pwp_nnd = true;
            } else if constexpr (std::is_same_v<T, AmOmega>) {
                if (n < 4) throw InputError("am: need n >= 4");
            } else if constexpr (std::is_same_v<T, VogelsangOmega>) {
                if (spec.variant != 1 && spec.variant != 2) throw InputError("vogelsang: i must be 1 or 2");
                if (!std::isfinite(spec.c)) throw InputError("vogelsang: c must be finite");
                check_u(d, spec.U);
                const Eigen::MatrixXd ax = cumsum(d.X());
                const Eigen::MatrixXd z = stack_xu(d, spec.U);
                cache->ax_fit.emplace(ax);
                cache->z_fit.emplace(z);
                cache->az_fit.emplace(cumsum(z));
                cache->vx_fit.emplace(spec.V == VogelsangV::A ? ax : d.X());
                cache->rcov_v = symmetrized(Eigen::MatrixXd(d.R() * cache->vx_fit->gram_inverse() * d.R().transpose()));
            } else if constexpr (std::is_same_v<T, BvFixedOmega>) {
                if (!std::isfinite(spec.c)) throw InputError("bvfixed: c must be finite");
                std::tie(cache->W, cache->pwp_nnd) = effective_weights(d, kernel_matrix_of(spec.lrv, n));
                if (spec.U.size() > 0) {
                    check_u(d, spec.U);
                    cache->z_fit.emplace(stack_xu(d, spec.U));
                }
            } else if constexpr (std::is_same_v<T, BvDataDrivenOmega>) {
                if (spec.a.size() < 2) throw InputError("bvdd: need a_0 and at least one a_i");
                if (spec.abar.size() != spec.a.size() - 1) throw InputError("bvdd: abar must have len(a) - 1 entries");
                if ((spec.a.array() <= 0.0).any()) throw InputError("bvdd: a_i must be positive");
                if (spec.h.size() < 2 || spec.h(spec.h.size() - 1) == 0.0)
                    throw InputError("bvdd: h needs degree >= 1 with nonzero leading coefficient");
                if (spec.p.size() < 2 || spec.p(spec.p.size() - 1) == 0.0)
                    throw InputError("bvdd: p needs degree >= 1 with nonzero leading coefficient");
                if (!spec.a.allFinite() || !spec.abar.allFinite() || !spec.h.allFinite() || !spec.p.allFinite())
                    throw InputError("bvdd: parameters must be finite");
                if (spec.U.size() > 0) {
                    check_u(d, spec.U);
                    cache->z_fit.emplace(stack_xu(d, spec.U));
                }
                RandomStream stream(0x6276646c65766c73ULL, 0);
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (int t = 0; t < 64; ++t) {
                    const Eigen::VectorXd y = stream.normal_vector(n);
                    const auto r = residual_autocorrelation(d.residuals(y), y.squaredNorm());
                    if (!r) continue;
                    lo = std::min(lo, *r);
                    hi = std::max(hi, *r);
                }
                cache->level_sets = hi - lo > 1e-10;
            }
        },
        kind_);
    cache_ = std::move(cache);
}

Estimate Estimator::operator()(const Eigen::VectorXd& y) const
{
    const DesignProblem& d = *dp_;
    if (y.size() != d.n()) throw InputError("estimator: y has wrong length");
    const int n = d.n();
    const double y_norm = y.norm();
    Estimate out;
    const Eigen::VectorXd u = d.residuals(y);
    out.beta = d.ols_beta(y);

    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, KernelOmega>) {
                out.omega = lrv(cache_->W, u) * d.restricted_cov();
            } else if constexpr (std::is_same_v<T, EickerOmega>) {
                out.omega = (u.dot(cache_->W * u) / (n - d.k())) * d.restricted_cov();
            } else if constexpr (std::is_same_v<T, AmOmega>) {
                const double uu = u.squaredNorm();
                const double num1 = u.head(n - 1).dot(u.tail(n - 1) - u.head(n - 1));
                if (in_span_by_residual(u.norm(), y_norm) || std::abs(num1) <= 1e-13 * uu) {
                    out.in_exceptional = true;
                    return;
                }
                const double rho = u.tail(n - 1).dot(u.head(n - 1)) / u.head(n - 1).squaredNorm();
                const Eigen::VectorXd v = u.tail(n - 1) - rho * u.head(n - 1);
                const double vv = v.squaredNorm();
                const double num2 = v.head(n - 2).dot(v.tail(n - 2) - v.head(n - 2));
                if (vv == 0.0 || std::abs(num2) <= 1e-13 * vv) {
                    out.in_exceptional = true;
                    return;
                }
                const double rho_t = v.tail(n - 2).dot(v.head(n - 2)) / v.head(n - 2).squaredNorm();
                const double m_am = am_bandwidth(rho_t, n);
                const Eigen::MatrixXd K = m_am == 0.0 ? Eigen::MatrixXd::Identity(n - 1, n - 1)
                                                      : kernel_weight_matrix<double>(KernelName::QuadraticSpectral, m_am, n - 1);
                const double omega_hat = v.dot(K * v) / ((1.0 - rho) * (1.0 - rho) * n);
                out.omega = omega_hat * d.restricted_cov();
            } else if constexpr (std::is_same_v<T, VogelsangOmega>) {
                const Eigen::VectorXd res_z = cache_->z_fit->residuals(y);
                if (in_span_by_residual(res_z.norm(), y_norm)) {
                    out.in_exceptional = true;
                    if (spec.V == VogelsangV::A) out.beta = cache_->vx_fit->coefficients(cumsum(y));
                    return;
                }
                const Eigen::VectorXd ay = cumsum(y);
                out.beta = spec.V == VogelsangV::A ? cache_->vx_fit->coefficients(ay) : out.beta;
                const double s2 = cache_->ax_fit->residuals(ay).squaredNorm() / n;
                double j = 0.0;
                if (spec.variant == 1) {
                    j = wald_ratio(u, res_z);
                } else {
                    j = wald_ratio(cache_->ax_fit->residuals(ay), cache_->az_fit->residuals(ay));
                }
                const double npow = spec.V == VogelsangV::A ? double(n) : 1.0 / n;
                out.omega = (npow * s2 * std::exp(spec.c * j)) * cache_->rcov_v;
            } else if constexpr (std::is_same_v<T, BvFixedOmega>) {
                double factor = 0.0;
                if (cache_->z_fit) {
                    const Eigen::VectorXd res_z = cache_->z_fit->residuals(y);
                    if (in_span_by_residual(res_z.norm(), y_norm)) {
                        out.in_exceptional = true;
                        return;
                    }
                    factor = std::exp(spec.c * wald_ratio(u, res_z));
                } else {
                    if (in_span_by_residual(u.norm(), y_norm)) {
                        out.in_exceptional = true;
                        return;
                    }
                    factor = std::exp(spec.c * aa_ratio(u));
                }
                out.omega = (lrv(cache_->W, u) * factor) * d.restricted_cov();
            } else if constexpr (std::is_same_v<T, BvDataDrivenOmega>) {
                const auto rho = residual_autocorrelation(u, y_norm * y_norm);
                if (!rho) {
                    out.in_exceptional = true;
                    out.critical = 0.0;
                    return;
                }
                const double b = bv_bandwidth(spec.a, spec.abar, *rho);
                out.critical = polynomial_value(spec.h, b);
                const double c = polynomial_value(spec.p, b);
                bool in_n = false;
                if (cache_->level_sets)
                    for (Eigen::Index i = 0; i < spec.abar.size(); ++i)
                        if (std::abs(*rho - spec.abar(i)) <= 1e-12) in_n = true;
                double factor = 0.0;
                if (cache_->z_fit) {
                    const Eigen::VectorXd res_z = cache_->z_fit->residuals(y);
                    if (in_span_by_residual(res_z.norm(), y_norm)) in_n = true;
                    else factor = std::exp(c * wald_ratio(u, res_z));
                } else {
                    if (in_span_by_residual(u.norm(), y_norm)) in_n = true;
                    else factor = std::exp(c * aa_ratio(u));
                }
                if (in_n) {
                    out.in_exceptional = true;
                    return;
                }
                const Eigen::MatrixXd W = kernel_weight_matrix<double>(KernelName::Daniell, std::max(b * n, 2.0), n);
                out.omega = (lrv(W, u) * factor) * d.restricted_cov();
            }
        },
        kind_);
    return out;
}

ExceptionalSet Estimator::exceptional_set() const
{
    return std::visit(
        [](const auto& spec) -> ExceptionalSet {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, KernelOmega> || std::is_same_v<T, EickerOmega>) return ExceptionalSet::Empty;
            else if constexpr (std::is_same_v<T, AmOmega>) return ExceptionalSet::AM;
            else if constexpr (std::is_same_v<T, VogelsangOmega>) return ExceptionalSet::SpanXU;
            else if constexpr (std::is_same_v<T, BvFixedOmega>)
                return spec.U.size() > 0 ? ExceptionalSet::SpanXU : ExceptionalSet::SpanX;
            else return spec.U.size() > 0 ? ExceptionalSet::BVU : ExceptionalSet::BV;
        },
        kind_);
}

EstimatorTraits Estimator::traits() const
{
    EstimatorTraits t;
    t.exceptional_empty = exceptional_set() == ExceptionalSet::Empty;
    t.omega_nnd_everywhere = t.exceptional_empty && cache_->pwp_nnd;
    const bool constant_w = std::holds_alternative<KernelOmega>(kind_) || std::holds_alternative<BvFixedOmega>(kind_);
    t.omega_nnd_off_n = constant_w ? cache_->pwp_nnd : true;
    if (const auto* v = std::get_if<VogelsangOmega>(&kind_)) t.beta_is_ols = v->V == VogelsangV::I;
    t.data_driven_critical = std::holds_alternative<BvDataDrivenOmega>(kind_);
    return t;
}

std::optional<ScalarForm> Estimator::scalar_form() const
{
    if (std::holds_alternative<KernelOmega>(kind_)) return ScalarForm{cache_->W, double(dp_->n())};
    if (std::holds_alternative<EickerOmega>(kind_)) return ScalarForm{cache_->W, double(dp_->n() - dp_->k())};
    return std::nullopt;
}

std::optional<Eigen::MatrixXd> Estimator::sign_weights() const
{
    if (std::holds_alternative<KernelOmega>(kind_) || std::holds_alternative<EickerOmega>(kind_) ||
        std::holds_alternative<BvFixedOmega>(kind_))
        return cache_->W;
    return std::nullopt;
}

bool Estimator::level_sets_active() const
{
    return cache_->level_sets;
}

std::optional<double> Estimator::rho_hat(const Eigen::VectorXd& y) const
{
    return residual_autocorrelation(dp_->residuals(y), y.squaredNorm());
}

std::string Estimator::describe() const
{
    auto kernel_text = [](const KernelOmega& k) {
        if (k.weights.size() > 0) return std::string("custom");
        return kernel_label(k.kernel) + ":M=" + fmt(k.bandwidth);
    };
    return std::visit(
        [&](const auto& spec) -> std::string {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, KernelOmega>) return "kernel:" + kernel_text(spec);
            else if constexpr (std::is_same_v<T, EickerOmega>)
                return spec.weight.size() == 0 ? "eicker:identity" : "eicker:custom";
            else if constexpr (std::is_same_v<T, AmOmega>) return "am";
            else if constexpr (std::is_same_v<T, VogelsangOmega>)
                return "vogelsang:c=" + fmt(spec.c) + ",i=" + std::to_string(spec.variant) +
                       ",V=" + (spec.V == VogelsangV::A ? "A" : "I") + ",m=" + std::to_string(spec.U.cols());
            else if constexpr (std::is_same_v<T, BvFixedOmega>)
                return "bvfixed:" + kernel_text(spec.lrv) + ":c=" + fmt(spec.c) +
                       (spec.U.size() > 0 ? ":m=" + std::to_string(spec.U.cols()) : "");
            else
                return "bvdd:a=" + fmt_vec(spec.a) + ";abar=" + fmt_vec(spec.abar) + ";h=" + fmt_vec(spec.h) +
                       ";p=" + fmt_vec(spec.p) + (spec.U.size() > 0 ? ";m=" + std::to_string(spec.U.cols()) : "");
        },
        kind_);
}

} // namespace hardiag
