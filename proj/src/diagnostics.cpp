#include "hardiag/diagnostics.hpp"
#include "hardiag/checks.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hardiag {

std::string outcome_label(Outcome o)
{
    switch (o) {
    case Outcome::SizeOne: return "SizeOne";
    case Outcome::SizeControllable: return "SizeControllable";
    case Outcome::LowerBound: return "LowerBound";
    case Outcome::Inconclusive: return "Inconclusive";
    }
    return "?";
}

namespace {

std::string num(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::vector<double> dedupe(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double g : v)
        if (out.empty() || std::abs(g - out.back()) > 1e-8) out.push_back(g);
    return out;
}

std::vector<double> candidate_gammas(const DesignProblem& dp, const std::vector<double>& extra = {})
{
    std::vector<double> g = singular_frequencies(dp.span_x()).omegas;
    g.push_back(0.0);
    g.push_back(std::numbers::pi);
    for (double e : extra) {
        if (e < 0.0 || e > std::numbers::pi) throw InputError("extra frequency outside [0, pi]: " + num(e));
        g.push_back(e);
    }
    return dedupe(std::move(g));
}

bool all_zero(const Eigen::MatrixXd& m)
{
    return m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0;
}

bool vanishing_restricted_ols(const DesignProblem& dp, const Eigen::MatrixXd& E)
{
    Eigen::MatrixXd beta(dp.k(), E.cols());
    for (Eigen::Index c = 0; c < E.cols(); ++c) beta.col(c) = dp.ols_beta(E.col(c));
    const Eigen::MatrixXd w = dp.R() * beta;
    return w.norm() <= 1e-10 * dp.R().norm() * beta.norm();
}

// Typical ||Omega(y)|| / ||y||^2 over generic y, used as the scale of "vanishing".
double omega_reference(const Estimator& est, std::uint64_t seed)
{
    std::vector<double> vals;
    for (int i = 0; i < 16; ++i) {
        RandomStream s(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd y = s.normal_vector(est.design().n());
        const Estimate e = est(y);
        if (!e.in_exceptional) vals.push_back(e.omega.norm() / y.squaredNorm());
    }
    if (vals.empty()) return 0.0;
    std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
    return vals[vals.size() / 2];
}

struct WitnessScan {
    std::optional<Witness> witness;
    std::vector<Witness> all;
    std::vector<std::string> evidence;
};

WitnessScan scan_witnesses(const DesignProblem& dp)
{
    WitnessScan out;
    for (double g : candidate_gammas(dp)) {
        const int order = rho(g, dp.m0lin());
        const Eigen::MatrixXd E = reduced_trig_basis(dp.n(), order, g);
        const double res = dp.span_x().inclusion_residual(E);
        out.evidence.push_back("gamma=" + num(g) + " order=" + std::to_string(order) + " inclusion_residual=" + num(res));
        if (res <= kInclusionTol) {
            Witness w{g, order, SubspaceBasis::span_of(E).vectors(), res};
            out.all.push_back(w);
            if (!out.witness) out.witness = w;
        }
    }
    return out;
}

// q = 1 branch: OLS beta, Omega nnd off N, and some
// singleton S not orthogonal to span(X) lying in N* but off N almost everywhere.
std::optional<Witness> q1_branch(const Estimator& est, std::uint64_t seed, std::vector<std::string>& evidence)
{
    const DesignProblem& dp = est.design();
    const EstimatorTraits t = est.traits();
    if (dp.q() != 1 || !t.beta_is_ols || !t.omega_nnd_off_n) return std::nullopt;
    const double ref = omega_reference(est, derive_seed(seed, 7));
    if (!(ref > 0.0)) return std::nullopt;
    const auto members = j_singletons(dp);
    for (std::size_t m = 0; m < members.size(); ++m) {
        const JMember& J = members[m];
        if (dp.span_x().project(J.basis.vectors()).norm() <= 1e-9 * J.basis.vectors().norm()) continue;
        bool ok = true;
        for (int i = 0; i < 16 && ok; ++i) {
            RandomStream s(derive_seed(seed, 100 + m), static_cast<std::uint64_t>(i));
            const Eigen::VectorXd y = J.basis.vectors() * s.normal_vector(J.basis.dim());
            const Estimate e = est(y);
            if (e.in_exceptional) ok = false;
            else if (e.omega.norm() / y.squaredNorm() > 1e-10 * ref) ok = false;
        }
        if (ok) {
            evidence.push_back("q1 branch: Omega vanishes on S at gamma=" + num(J.gamma) + " while S is off N");
            const Eigen::MatrixXd E = reduced_trig_basis(dp.n(), J.order, J.gamma);
            return Witness{J.gamma, J.order, J.basis.vectors(), dp.span_x().inclusion_residual(E)};
        }
    }
    return std::nullopt;
}

} // namespace

std::vector<JMember> j_singletons(const DesignProblem& dp, const std::vector<double>& extra_gammas)
{
    const SubspaceBasis& L = dp.m0lin();
    const int base = L.dim() == 0 ? 0 : kappa_total(singular_frequencies(L));
    std::vector<JMember> out;
    for (double g : candidate_gammas(dp, extra_gammas)) {
        if (!is_boundary_frequency(g) && base + kappa(g, 1) >= dp.n()) continue;
        const int order = rho(g, L);
        const Eigen::MatrixXd E = reduced_trig_basis(dp.n(), order, g);
        SubspaceBasis S = SubspaceBasis::span_of(L.dim() == 0 ? E : L.project_out(E));
        if (S.dim() == 0) continue;
        out.push_back({g, order, std::move(S)});
    }
    return out;
}

NstarEvidence nstar_equals_spanx(const Estimator& est, std::uint64_t seed, int samples)
{
    const DesignProblem& dp = est.design();
    NstarEvidence ev;
    ev.samples = samples;
    for (int i = 0; i < samples; ++i) {
        RandomStream s(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd y = s.normal_vector(dp.n());
        const Estimate e = est(y);
        if (e.in_exceptional || numerically_singular(e.omega)) ++ev.singular_off_spanx;
    }
    const double ref = omega_reference(est, derive_seed(seed, 1));
    ev.spanx_samples = 8;
    for (int i = 0; i < ev.spanx_samples; ++i) {
        RandomStream s(derive_seed(seed, 2), static_cast<std::uint64_t>(i));
        const Eigen::VectorXd y = dp.X() * s.normal_vector(dp.k());
        const Estimate e = est(y);
        if (e.in_exceptional) continue;
        if (e.omega.norm() / y.squaredNorm() > 1e-12 * ref) ++ev.spanx_nonvanishing;
    }
    return ev;
}

double lrv_nonneg_prob(const DesignProblem& dp, const Eigen::MatrixXd& W, double tol)
{
    if (W.rows() != dp.n() || W.cols() != dp.n()) throw InputError("lrv_nonneg_prob: W must be n x n");
    const Eigen::MatrixXd A = symmetrized(
        Eigen::MatrixXd(dp.span_x().project_out(Eigen::MatrixXd(dp.span_x().project_out(W).transpose()))));
    if (A.norm() <= 1e-10 * W.norm()) return 1.0;
    try {
        return quadform_nonneg_prob({A, Eigen::MatrixXd()}, tol);
    } catch (const DegenerateForm&) {
        return 1.0;
    }
}

int polynomial_block_size(const DesignProblem& dp)
{
    int kF = 0;
    for (int s = 0; s < dp.k(); ++s) {
        Eigen::VectorXd p(dp.n());
        for (int j = 1; j <= dp.n(); ++j) p(j - 1) = std::pow(double(j), s);
        if ((dp.X().col(s) - p).norm() > 1e-12 * p.norm()) break;
        ++kF;
    }
    return kF;
}

namespace {

struct SignEvent {
    bool exact = false;
    double exact_value = 0.0;
};

// P(w' Omega^{-1}(G) w >= 0) is P(omega_W(G) >= 0) for scalar-sign estimators,
// and 1 when Omega is nnd off N.
SignEvent sign_event(const Estimator& est, double tol)
{
    const EstimatorTraits t = est.traits();
    if (t.omega_nnd_off_n) return {true, 1.0};
    if (auto W = est.sign_weights()) return {true, lrv_nonneg_prob(est.design(), *W, tol)};
    return {};
}

double quad_sign_indicator(const Estimator& est, const Eigen::VectorXd& G, const Eigen::VectorXd& w)
{
    const Estimate e = est(G);
    if (e.in_exceptional || numerically_singular(e.omega)) return 1.0;
    return w.dot(e.omega.fullPivLu().solve(w)) >= 0.0 ? 1.0 : 0.0;
}

} // namespace

BoundResult poly_lower_bound(const Estimator& est, const McConfig& cfg, double tol)
{
    const DesignProblem& dp = est.design();
    BoundResult out;
    out.kF = polynomial_block_size(dp);
    if (out.kF == 0) throw InputError("poly_lower_bound: X does not start with a polynomial trend block");
    const double rscale = dp.R().cwiseAbs().maxCoeff();
    for (int c = 0; c < dp.k(); ++c)
        if (dp.R().col(c).cwiseAbs().maxCoeff() > 1e-14 * rscale) {
            out.i0 = c;
            break;
        }
    if (out.i0 < 0 || out.i0 >= out.kF)
        throw InputError("poly_lower_bound: R has no nonzero column inside the polynomial block");
    const SignEvent ev = sign_event(est, tol);
    if (ev.exact) {
        out.value = ev.exact_value;
        out.exact = true;
        return out;
    }
    const Eigen::VectorXd v = dp.R().col(out.i0);
    const McResult r = mc_expectation(
        [&](RandomStream& s) { return quad_sign_indicator(est, s.normal_vector(dp.n()), v); }, cfg);
    out.value = r.estimate;
    out.se = r.standard_error;
    return out;
}

KGammaResult k_gamma(const Estimator& est, double gamma, const McConfig& cfg, double tol)
{
    const DesignProblem& dp = est.design();
    if (gamma < 0.0 || gamma > std::numbers::pi) throw InputError("k_gamma: gamma outside [0, pi]");
    KGammaResult out;
    out.gamma = gamma;
    out.order = rho(gamma, dp.m0lin());
    const Eigen::MatrixXd E = reduced_trig_basis(dp.n(), out.order, gamma);
    const double res = dp.span_x().inclusion_residual(E);
    if (res > kInclusionTol)
        throw InputError("k_gamma: span(E) is not inside span(X) at gamma=" + num(gamma) + " (residual " + num(res) + ")");
    if (vanishing_restricted_ols(dp, E)) {
        out.value = 1.0;
        out.exact = true;
        return out;
    }
    const SignEvent ev = sign_event(est, tol);
    if (ev.exact) {
        out.value = ev.exact_value;
        out.exact = true;
        return out;
    }
    Eigen::MatrixXd B(dp.k(), E.cols());
    for (Eigen::Index c = 0; c < E.cols(); ++c) B.col(c) = dp.ols_beta(E.col(c));
    const Eigen::MatrixXd RB = dp.R() * B;
    const int kap = static_cast<int>(E.cols());
    const McResult r = mc_expectation(
        [&](RandomStream& s) {
            const Eigen::VectorXd G = s.normal_vector(dp.n());
            const Eigen::VectorXd x = s.normal_vector(kap);
            return quad_sign_indicator(est, G, RB * x);
        },
        cfg);
    out.value = r.estimate;
    out.se = r.standard_error;
    return out;
}

KGammaSummary k_gamma_all(const Estimator& est, const McConfig& cfg, double tol)
{
    KGammaSummary out;
    const WitnessScan scan = scan_witnesses(est.design());
    for (std::size_t i = 0; i < scan.all.size(); ++i) {
        McConfig c = cfg;
        c.master_seed = derive_seed(cfg.master_seed, i);
        out.members.push_back(k_gamma(est, scan.all[i].gamma, c, tol));
    }
    if (!out.members.empty()) {
        out.min = out.max = out.members.front().value;
        for (const auto& m : out.members) {
            out.min = std::min(out.min, m.value);
            out.max = std::max(out.max, m.value);
        }
    }
    return out;
}

Verdict size_control_verdict(const Estimator& est, const VerdictOptions& opts)
{
    const DesignProblem& dp = est.design();
    const EstimatorTraits t = est.traits();
    Verdict v;
    v.rule = kRuleNone;
    v.evidence.push_back("estimator=" + est.describe());
    v.evidence.push_back("N=" + exceptional_label(est.exceptional_set()));
    v.evidence.push_back("assumes the covariance model contains all AR(2) correlation matrices");

    if (auto W = est.sign_weights(); W && all_zero(*W)) {
        v.evidence.push_back("Omega vanishes identically: Pi W Pi = 0");
        return v;
    }

    const WitnessScan scan = scan_witnesses(dp);
    v.evidence.insert(v.evidence.end(), scan.evidence.begin(), scan.evidence.end());

    if (scan.witness) {
        v.witness = scan.witness;
        if (t.exceptional_empty && t.omega_nnd_everywhere) {
            v.outcome = Outcome::SizeOne;
            v.rule = kRuleTrigInclusion;
            v.bound = 1.0;
            v.se = 0.0;
            return v;
        }
        const Assumption7Report a7 = check_assumption7(est, 64, derive_seed(opts.seed, 1));
        v.evidence.push_back("nonsingularity check: " + std::string(a7.pass ? "pass" : "fail") + " (" + a7.detail + ")");
        if (a7.pass) {
            McConfig cfg;
            cfg.replications = opts.reps;
            cfg.master_seed = derive_seed(opts.seed, 2);
            const KGammaSummary ks = k_gamma_all(est, cfg, opts.imhof_tol);
            for (const auto& m : ks.members) {
                v.evidence.push_back("K(" + num(m.gamma) + ")=" + num(m.value) + (m.exact ? " exact" : " se=" + num(m.se)));
                if (std::isnan(v.bound) || m.value > v.bound) {
                    v.bound = m.value;
                    v.se = m.exact ? 0.0 : m.se;
                    for (const auto& w : scan.all)
                        if (w.gamma == m.gamma) v.witness = w;
                }
            }
            v.outcome = Outcome::LowerBound;
            v.rule = kRuleLowerBound;
        }
    } else if (t.exceptional_empty && t.omega_nnd_everywhere) {
        const NstarEvidence ev = nstar_equals_spanx(est, derive_seed(opts.seed, 3));
        v.evidence.push_back("N* sampling: " + std::to_string(ev.singular_off_spanx) + " of " + std::to_string(ev.samples) +
                             " generic y singular; " + std::to_string(ev.spanx_nonvanishing) + " of " +
                             std::to_string(ev.spanx_samples) + " span(X) points nonvanishing");
        if (ev.holds()) {
            v.outcome = Outcome::SizeControllable;
            v.rule = kRuleNoInclusion;
            return v;
        }
    }

    if (auto w = q1_branch(est, derive_seed(opts.seed, 4), v.evidence)) {
        v.outcome = Outcome::SizeOne;
        v.rule = kRuleQ1Branch;
        v.witness = w;
        v.bound = 1.0;
        v.se = 0.0;
    }
    return v;
}

double exact_rejection_prob(const Estimator& est, const Eigen::MatrixXd& Sigma, double C, double tol)
{
    const DesignProblem& dp = est.design();
    if (dp.q() != 1) throw InputError("exact_rejection_prob: needs q = 1; use the Monte Carlo path");
    const auto form = est.scalar_form();
    if (!form || !est.traits().omega_nnd_everywhere)
        throw InputError("exact_rejection_prob: needs a constant-W estimator with Pi W Pi psd; use the Monte Carlo path");
    if (Sigma.rows() != dp.n() || Sigma.cols() != dp.n()) throw InputError("exact_rejection_prob: Sigma must be n x n");
    if (C <= 0.0) return 1.0;
    if (all_zero(form->W)) return 0.0;
    const Eigen::VectorXd b = dp.X() * dp.xtx_inv() * dp.R().row(0).transpose();
    const double s2 = dp.restricted_cov()(0, 0);
    const Eigen::MatrixXd pwp = symmetrized(Eigen::MatrixXd(
        dp.span_x().project_out(Eigen::MatrixXd(dp.span_x().project_out(form->W).transpose()))));
    const Eigen::MatrixXd A = symmetrized(Eigen::MatrixXd(b * b.transpose() - (C * s2 / form->divisor) * pwp));
    try {
        return quadform_nonneg_prob({A, Sigma}, tol);
    } catch (const DegenerateForm&) {
        return 1.0;
    }
}

McResult mc_rejection_prob(const Estimator& est, const Eigen::MatrixXd& Sigma, double C, const McConfig& cfg,
                           bool data_driven, double sigma2)
{
    const DesignProblem& dp = est.design();
    if (Sigma.rows() != dp.n() || Sigma.cols() != dp.n()) throw InputError("mc_rejection_prob: Sigma must be n x n");
    if (!(sigma2 > 0.0)) throw InputError("mc_rejection_prob: sigma2 must be positive");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(Sigma));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd L = es.eigenvectors() * root.asDiagonal() * std::sqrt(sigma2);
    const Eigen::VectorXd mu0 = dp.mu0();
    const FTypeTest test(est);
    return mc_expectation(
        [&](RandomStream& s) {
            const Eigen::VectorXd y = mu0 + L * s.normal_vector(dp.n());
            return test.rejects(y, C, data_driven) ? 1.0 : 0.0;
        },
        cfg);
}

std::vector<CurvePoint> size_curve(const Estimator& est, const CovModelGrid& grid, double C, CurveMethod method,
                                   const McConfig& cfg, bool data_driven, double tol)
{
    if (grid.members.empty()) throw InputError("size_curve: grid is empty");
    const int n = est.design().n();
    std::vector<CurvePoint> out(grid.members.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i].label = grid.members[i].describe();
    if (method == CurveMethod::Exact) {
        if (data_driven) throw InputError("size_curve: data-driven critical values need the Monte Carlo path");
        parallel_for(static_cast<std::int64_t>(out.size()), [&](std::int64_t i) {
            out[i].probability = exact_rejection_prob(est, grid.members[i].covariance(n), C, tol);
        });
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        McConfig c = cfg;
        c.master_seed = derive_seed(cfg.master_seed, i);
        const McResult r = mc_rejection_prob(est, grid.members[i].covariance(n), C, c, data_driven);
        out[i].probability = r.estimate;
        out[i].se = r.standard_error;
    }
    return out;
}

PowerReport power_degeneracy(const Estimator& est, double C, std::uint64_t seed)
{
    const DesignProblem& dp = est.design();
    const EstimatorTraits t = est.traits();
    PowerReport rep;
    const NstarEvidence ev = nstar_equals_spanx(est, derive_seed(seed, 1));
    rep.in_scope = t.exceptional_empty && t.omega_nnd_everywhere && ev.holds();
    if (!rep.in_scope) {
        rep.classification = "out-of-scope";
        rep.evidence.push_back("needs N empty, Omega nnd everywhere and N* = span(X)");
        return rep;
    }
    const FTypeTest test(est);
    const Eigen::VectorXd mu0 = dp.mu0();
    const SubspaceBasis& L = dp.m0lin();
    bool failed = false;
    const double gammas[2] = {0.0, std::numbers::pi};
    for (int i = 0; i < 2; ++i) {
        SubspaceConstant sc;
        sc.gamma = gammas[i];
        sc.order = rho(sc.gamma, L);
        const Eigen::MatrixXd E = reduced_trig_basis(dp.n(), sc.order, sc.gamma);
        sc.basis = SubspaceBasis::span_of(L.dim() == 0 ? E : L.project_out(E));
        sc.constancy = constant_on_affine(test, sc.basis, mu0, derive_seed(seed, 10 + i));
        rep.evidence.push_back("gamma=" + num(sc.gamma) + ": " + constancy_label(sc.constancy.status) +
                               " value=" + num(sc.constancy.value) + " spread=" + num(sc.constancy.spread));
        if (sc.constancy.status == ConstancyStatus::NotConstant) failed = true;
        if (sc.constancy.status == ConstancyStatus::Constant) {
            rep.c_lower = std::min(rep.c_lower, sc.constancy.value);
            rep.c_upper = std::max(rep.c_upper, sc.constancy.value);
        }
        rep.subspaces.push_back(std::move(sc));
    }
    if (failed || !(rep.c_lower <= rep.c_upper)) {
        rep.classification = "inconclusive";
        return rep;
    }
    rep.distinct_constants = rep.c_upper - rep.c_lower > 1e-8 * std::max(1.0, std::abs(rep.c_upper));
    for (const auto& sc : rep.subspaces)
        if (sc.constancy.status == ConstancyStatus::Constant &&
            std::abs(C - sc.constancy.value) <= 1e-12 * std::max(1.0, std::abs(sc.constancy.value)))
            rep.undetermined = true;
    rep.size_one = C < rep.c_upper;
    rep.infimal_power_zero = C > rep.c_lower;
    if (rep.undetermined) rep.classification = "undetermined";
    else if (rep.size_one && rep.infimal_power_zero) rep.classification = "size-one-and-infimal-power-zero";
    else if (rep.size_one) rep.classification = "size-one";
    else if (rep.infimal_power_zero) rep.classification = "infimal-power-zero";
    else rep.classification = "undetermined";
    return rep;
}

CriticalResult critical_value_search(const Estimator& est, const CovModelGrid& grid, double alpha, double lo, double hi,
                                     CurveMethod method, const McConfig& cfg, const VerdictOptions& vopts)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("critical_value_search: alpha must lie in (0, 1)");
    if (!(lo < hi)) throw InputError("critical_value_search: need lo < hi");
    CriticalResult out;
    out.verdict = size_control_verdict(est, vopts);
    if (out.verdict.outcome == Outcome::SizeOne) {
        out.refused = true;
        return out;
    }
    auto worst = [&](double C) {
        double m = 0.0;
        for (const auto& p : size_curve(est, grid, C, method, cfg)) m = std::max(m, p.probability);
        return m;
    };
    double f_hi = worst(hi);
    if (f_hi > alpha)
        throw InputError("critical_value_search: rejection probability " + num(f_hi) + " at the upper bracket exceeds alpha");
    double f_lo = worst(lo);
    if (f_lo <= alpha) {
        out.critical = lo;
        out.achieved = f_lo;
        return out;
    }
    while (out.iterations < 60 && alpha - f_hi > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        const double f = worst(mid);
        ++out.iterations;
        if (f <= alpha) {
            hi = mid;
            f_hi = f;
        } else {
            lo = mid;
        }
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) break;
    }
    out.critical = hi;
    out.achieved = f_hi;
    return out;
}

} // namespace hardiag
