#include "hardiag/hardiag.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using hardiag::io::fmt;
using nlohmann::json;

constexpr const char* kVersion = "1.0.0";
constexpr int kExitInput = 2;

struct Common {
    std::string design, R, r, est, grid, out, format;
    std::optional<std::uint64_t> seed;
    std::int64_t reps = 10000;
    bool stamp = false;
};

std::string g_command_line;

void add_design(CLI::App* app, Common& c)
{
    app->add_option("--design", c.design, "design JSON file, inline JSON, or shorthand (poly:n=50,kF=2)")->required();
    app->add_option("--R", c.R, "restriction matrix, rows separated by ';'");
    app->add_option("--r", c.r, "restriction right-hand side");
}

void add_output(CLI::App* app, Common& c)
{
    app->add_option("--out", c.out, "output file (default stdout)");
    app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_flag("--stamp", c.stamp, "embed a wall-clock timestamp in the manifest");
}

hardiag::DesignProblem load_design(const Common& c)
{
    return hardiag::io::parse_design(c.design, c.R.empty() ? std::nullopt : std::optional<std::string>(c.R),
                                     c.r.empty() ? std::nullopt : std::optional<std::string>(c.r));
}

std::uint64_t need_seed(const Common& c, const std::string& what)
{
    if (!c.seed) throw hardiag::InputError(what + " uses Monte Carlo: --seed is required");
    return *c.seed;
}

json manifest(const Common& c, const hardiag::DesignProblem* dp)
{
    json m;
    m["command"] = g_command_line;
    m["tool_version"] = kVersion;
    if (dp) m["design_hash"] = hardiag::io::design_hash(*dp);
    if (!c.est.empty()) m["estimator"] = c.est;
    if (!c.grid.empty()) m["grid"] = c.grid;
    if (c.seed) m["master_seed"] = *c.seed;
    m["replications"] = c.reps;
    if (c.stamp) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        m["timestamp"] = buf;
    }
    return m;
}

void emit(const Common& c, const std::string& text)
{
    if (c.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw hardiag::InputError("cannot write '" + c.out + "'");
    f << text;
}

std::string csv_header(const json& man)
{
    std::string s;
    for (auto it = man.begin(); it != man.end(); ++it) s += "# " + it.key() + ": " + it.value().dump() + "\n";
    return s;
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

json verdict_json(const hardiag::Verdict& v)
{
    json j;
    j["outcome"] = hardiag::outcome_label(v.outcome);
    j["rule"] = v.rule;
    if (v.witness) {
        j["gamma"] = v.witness->gamma;
        j["order"] = v.witness->order;
        j["inclusion_residual"] = v.witness->residual;
        json basis = json::array();
        for (Eigen::Index c = 0; c < v.witness->basis.cols(); ++c) {
            json col = json::array();
            for (Eigen::Index r = 0; r < v.witness->basis.rows(); ++r) col.push_back(v.witness->basis(r, c));
            basis.push_back(col);
        }
        j["witness_basis"] = basis;
    }
    if (!std::isnan(v.bound)) j["bound"] = v.bound;
    if (!std::isnan(v.se)) j["se"] = v.se;
    j["evidence"] = v.evidence;
    return j;
}

int cmd_diagnose(const Common& c)
{
    const auto dp = load_design(c);
    const auto est = hardiag::io::parse_estimator(c.est, dp);
    hardiag::VerdictOptions opts;
    if (c.seed) opts.seed = *c.seed;
    opts.reps = c.reps;
    json j = verdict_json(hardiag::size_control_verdict(est, opts));
    j["manifest"] = manifest(c, &dp);
    emit(c, dump(j));
    return 0;
}

struct Figure1Opts {
    int n = 150, kmin = 2, kmax = 10;
    double bstep = 0.001, tol = 1e-4;
    std::string kernel = "rectangular";
};

int cmd_figure1(const Common& c, const Figure1Opts& f)
{
    if (f.kmin < 1 || f.kmax < f.kmin || f.kmax >= f.n) throw hardiag::InputError("figure1: need 1 <= kmin <= kmax < n");
    if (!(f.bstep > 0.0 && f.bstep <= 1.0)) throw hardiag::InputError("figure1: bstep must lie in (0, 1]");
    const auto kernel = hardiag::parse_kernel(f.kernel);
    const int nb = static_cast<int>(std::llround(1.0 / f.bstep));
    const int nk = f.kmax - f.kmin + 1;
    std::vector<hardiag::DesignProblem> designs;
    for (int k = f.kmin; k <= f.kmax; ++k) {
        Eigen::MatrixXd R = Eigen::MatrixXd::Zero(1, k);
        R(0, k - 1) = 1.0;
        designs.emplace_back(hardiag::polynomial_design(f.n, k), R, Eigen::VectorXd::Zero(1));
    }
    std::vector<double> prob(static_cast<std::size_t>(nk) * nb);
    hardiag::parallel_for(static_cast<std::int64_t>(prob.size()), [&](std::int64_t idx) {
        const int ki = static_cast<int>(idx / nb), bi = static_cast<int>(idx % nb);
        const double b = (bi + 1) * f.bstep;
        const Eigen::MatrixXd W = hardiag::kernel_weights(kernel, b * f.n, f.n);
        prob[idx] = hardiag::lrv_nonneg_prob(designs[ki], W, f.tol);
    });
    json man = manifest(c, nullptr);
    man["n"] = f.n;
    man["kernel"] = f.kernel;
    man["bstep"] = f.bstep;
    man["imhof_tol"] = f.tol;
    if (c.format == "json") {
        json rows = json::array();
        for (std::size_t i = 0; i < prob.size(); ++i)
            rows.push_back({{"k", f.kmin + int(i / nb)}, {"b", (int(i % nb) + 1) * f.bstep}, {"probability", prob[i]}});
        emit(c, dump({{"manifest", man}, {"rows", rows}}));
        return 0;
    }
    std::string s = csv_header(man) + "k,b,probability\n";
    for (std::size_t i = 0; i < prob.size(); ++i)
        s += std::to_string(f.kmin + int(i / nb)) + "," + fmt((int(i % nb) + 1) * f.bstep) + "," + fmt(prob[i]) + "\n";
    emit(c, s);
    return 0;
}

struct CurveOpts {
    double critical = 0.0, sigma2 = 1.0, tol = 1e-8;
    std::string method = "exact";
    bool data_driven = false;
};

int cmd_size_curve(const Common& c, const CurveOpts& o)
{
    const auto dp = load_design(c);
    const auto est = hardiag::io::parse_estimator(c.est, dp);
    const auto grid = hardiag::io::parse_grid(c.grid, dp);
    const bool mc = o.method == "mc";
    hardiag::McConfig cfg;
    cfg.replications = c.reps;
    if (mc) cfg.master_seed = need_seed(c, "size-curve --method mc");
    std::vector<hardiag::CurvePoint> pts;
    if (mc && o.sigma2 != 1.0) {
        for (std::size_t i = 0; i < grid.members.size(); ++i) {
            hardiag::McConfig ci = cfg;
            ci.master_seed = hardiag::derive_seed(cfg.master_seed, i);
            const auto r = hardiag::mc_rejection_prob(est, grid.members[i].covariance(dp.n()), o.critical, ci,
                                                      o.data_driven, o.sigma2);
            pts.push_back({grid.members[i].describe(), r.estimate, r.standard_error});
        }
    } else {
        pts = hardiag::size_curve(est, grid, o.critical, mc ? hardiag::CurveMethod::MonteCarlo : hardiag::CurveMethod::Exact,
                                  cfg, o.data_driven, o.tol);
    }
    json man = manifest(c, &dp);
    man["critical"] = o.critical;
    man["method"] = o.method;
    man["data_driven"] = o.data_driven;
    man["sigma2"] = o.sigma2;
    if (c.format == "json") {
        json rows = json::array();
        for (const auto& p : pts) {
            json r = {{"model", p.label}, {"probability", p.probability}};
            if (!std::isnan(p.se)) r["se"] = p.se;
            rows.push_back(r);
        }
        emit(c, dump({{"manifest", man}, {"rows", rows}}));
        return 0;
    }
    std::string s = csv_header(man) + "model,probability,se\n";
    for (const auto& p : pts)
        s += "\"" + p.label + "\"," + fmt(p.probability) + "," + (std::isnan(p.se) ? std::string() : fmt(p.se)) + "\n";
    emit(c, s);
    return 0;
}

int cmd_power(const Common& c, double critical)
{
    const auto dp = load_design(c);
    const auto est = hardiag::io::parse_estimator(c.est, dp);
    const auto rep = c.seed ? hardiag::power_degeneracy(est, critical, *c.seed) : hardiag::power_degeneracy(est, critical);
    json j;
    j["in_scope"] = rep.in_scope;
    j["classification"] = rep.classification;
    j["critical"] = critical;
    if (std::isfinite(rep.c_lower)) j["c_lower"] = rep.c_lower;
    if (std::isfinite(rep.c_upper)) j["c_upper"] = rep.c_upper;
    j["distinct_constants"] = rep.distinct_constants;
    j["size_one"] = rep.size_one;
    j["infimal_power_zero"] = rep.infimal_power_zero;
    j["undetermined"] = rep.undetermined;
    json subs = json::array();
    for (const auto& s : rep.subspaces)
        subs.push_back({{"gamma", s.gamma},
                        {"order", s.order},
                        {"status", hardiag::constancy_label(s.constancy.status)},
                        {"value", s.constancy.value},
                        {"spread", s.constancy.spread}});
    j["subspaces"] = subs;
    j["evidence"] = rep.evidence;
    j["manifest"] = manifest(c, &dp);
    emit(c, dump(j));
    return 0;
}

int cmd_bound(const Common& c, std::optional<double> gamma, double tol)
{
    const auto dp = load_design(c);
    const auto est = hardiag::io::parse_estimator(c.est, dp);
    const bool exact = est.traits().omega_nnd_off_n || est.sign_weights().has_value();
    hardiag::McConfig cfg;
    cfg.replications = c.reps;
    if (!exact) cfg.master_seed = need_seed(c, "bound for this estimator");
    json j;
    if (gamma) {
        const auto k = hardiag::k_gamma(est, *gamma, cfg, tol);
        j = {{"kind", "K(gamma)"}, {"gamma", k.gamma}, {"order", k.order}, {"value", k.value}, {"exact", k.exact}};
        if (!k.exact) j["se"] = k.se;
    } else {
        const auto b = hardiag::poly_lower_bound(est, cfg, tol);
        j = {{"kind", "polynomial"}, {"value", b.value}, {"exact", b.exact}, {"i0", b.i0}, {"kF", b.kF}};
        if (!b.exact) j["se"] = b.se;
    }
    j["manifest"] = manifest(c, &dp);
    if (c.format == "csv") {
        std::string s = csv_header(j["manifest"]) + "kind,value,se,exact\n";
        s += j["kind"].get<std::string>() + "," + fmt(j["value"].get<double>()) + "," +
             (j.contains("se") ? fmt(j["se"].get<double>()) : std::string()) + "," + (j["exact"].get<bool>() ? "1" : "0") + "\n";
        emit(c, s);
        return 0;
    }
    emit(c, dump(j));
    return 0;
}

struct CriticalOpts {
    double alpha = 0.05, lo = 0.0, hi = 100.0;
    std::string method = "exact";
};

int cmd_critical(const Common& c, const CriticalOpts& o)
{
    const auto dp = load_design(c);
    const auto est = hardiag::io::parse_estimator(c.est, dp);
    const auto grid = hardiag::io::parse_grid(c.grid, dp);
    const bool mc = o.method == "mc";
    hardiag::McConfig cfg;
    cfg.replications = c.reps;
    if (mc) cfg.master_seed = need_seed(c, "critical --method mc");
    hardiag::VerdictOptions vopts;
    if (c.seed) vopts.seed = *c.seed;
    const auto res = hardiag::critical_value_search(est, grid, o.alpha, o.lo, o.hi,
                                                    mc ? hardiag::CurveMethod::MonteCarlo : hardiag::CurveMethod::Exact,
                                                    cfg, vopts);
    json j;
    j["refused"] = res.refused;
    j["verdict"] = verdict_json(res.verdict);
    j["alpha"] = o.alpha;
    if (!res.refused) {
        j["critical"] = res.critical;
        j["achieved"] = res.achieved;
        j["iterations"] = res.iterations;
        j["validity"] = "relative to the supplied grid only";
    } else {
        j["reason"] = "size equals one for every critical value";
    }
    j["manifest"] = manifest(c, &dp);
    emit(c, dump(j));
    return 0;
}

int cmd_check(const Common& c, int trials)
{
    const auto dp = load_design(c);
    const auto est = hardiag::io::parse_estimator(c.est, dp);
    const std::uint64_t seed = need_seed(c, "check");
    const auto a5 = hardiag::check_assumption5(est, trials, hardiag::derive_seed(seed, 5));
    const auto a7 = hardiag::check_assumption7(est, trials, hardiag::derive_seed(seed, 7));
    json j;
    j["estimator"] = est.describe();
    j["equivariance"] = {{"pass", a5.pass},
                         {"trials", a5.trials},
                         {"evaluated", a5.evaluated},
                         {"max_beta_residual", a5.max_beta_residual},
                         {"max_omega_residual", a5.max_omega_residual},
                         {"max_asymmetry", a5.max_asymmetry},
                         {"membership_mismatches", a5.membership_mismatches},
                         {"singular_fraction", a5.singular_fraction},
                         {"level_set_trials", a5.level_set_trials},
                         {"detail", a5.detail}};
    j["nonsingular_directions"] = {{"pass", a7.pass},
                                   {"trials", a7.trials},
                                   {"hits", a7.hits},
                                   {"hit_fraction", a7.hit_fraction},
                                   {"detail", a7.detail}};
    j["pass"] = a5.pass && a7.pass;
    j["manifest"] = manifest(c, &dp);
    emit(c, dump(j));
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    for (int i = 0; i < argc; ++i) g_command_line += (i ? " " : "") + std::string(argv[i]);

    CLI::App app{"Finite-sample size and power diagnostics for autocorrelation-robust tests"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Common c;
    std::uint64_t seed_value = 0;

    auto seed_opt = [&](CLI::App* s) { return s->add_option("--seed", seed_value, "master seed"); };
    std::vector<std::pair<CLI::App*, CLI::Option*>> seeds;

    auto* diag = app.add_subcommand("diagnose", "size-control verdict");
    add_design(diag, c);
    diag->add_option("--est", c.est, "estimator string")->required();
    diag->add_option("--reps", c.reps, "Monte Carlo replications");
    add_output(diag, c);
    seeds.emplace_back(diag, seed_opt(diag));

    Figure1Opts f1;
    auto* fig = app.add_subcommand("figure1", "P(omega_W >= 0) over polynomial designs and bandwidths M = bn");
    fig->add_option("--n", f1.n, "sample size");
    fig->add_option("--kmin", f1.kmin, "smallest number of trend columns");
    fig->add_option("--kmax", f1.kmax, "largest number of trend columns");
    fig->add_option("--bstep", f1.bstep, "b-grid step");
    fig->add_option("--kernel", f1.kernel, "kernel name");
    fig->add_option("--tol", f1.tol, "Imhof tolerance");
    add_output(fig, c);

    CurveOpts co;
    auto* curve = app.add_subcommand("size-curve", "null rejection probabilities over a covariance grid");
    add_design(curve, c);
    curve->add_option("--est", c.est, "estimator string")->required();
    curve->add_option("--grid", c.grid, "covariance grid")->required();
    curve->add_option("--critical", co.critical, "critical value C")->required();
    curve->add_option("--method", co.method, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
    curve->add_flag("--data-driven", co.data_driven, "use the estimator's data-driven critical value");
    curve->add_option("--sigma2", co.sigma2, "error variance scale");
    curve->add_option("--tol", co.tol, "Imhof tolerance");
    curve->add_option("--reps", c.reps, "Monte Carlo replications");
    add_output(curve, c);
    seeds.emplace_back(curve, seed_opt(curve));

    double power_c = 0.0;
    auto* power = app.add_subcommand("power", "power-degeneracy report");
    add_design(power, c);
    power->add_option("--est", c.est, "estimator string")->required();
    power->add_option("--critical", power_c, "critical value C")->required();
    add_output(power, c);
    seeds.emplace_back(power, seed_opt(power));

    std::optional<double> gamma;
    double bound_tol = 1e-8;
    auto* bound = app.add_subcommand("bound", "lower bound on size");
    add_design(bound, c);
    bound->add_option("--est", c.est, "estimator string")->required();
    bound->add_option("--gamma", gamma, "compute K(gamma) instead of the polynomial bound");
    bound->add_option("--tol", bound_tol, "Imhof tolerance");
    bound->add_option("--reps", c.reps, "Monte Carlo replications");
    add_output(bound, c);
    seeds.emplace_back(bound, seed_opt(bound));

    CriticalOpts cr;
    auto* crit = app.add_subcommand("critical", "empirical critical value over a grid");
    add_design(crit, c);
    crit->add_option("--est", c.est, "estimator string")->required();
    crit->add_option("--grid", c.grid, "covariance grid")->required();
    crit->add_option("--alpha", cr.alpha, "nominal level");
    crit->add_option("--lo", cr.lo, "lower end of the C bracket");
    crit->add_option("--hi", cr.hi, "upper end of the C bracket");
    crit->add_option("--method", cr.method, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
    crit->add_option("--reps", c.reps, "Monte Carlo replications");
    add_output(crit, c);
    seeds.emplace_back(crit, seed_opt(crit));

    int trials = 100;
    auto* check = app.add_subcommand("check", "equivariance and nonsingularity checks");
    add_design(check, c);
    check->add_option("--est", c.est, "estimator string")->required();
    check->add_option("--trials", trials, "random trials");
    add_output(check, c);
    seeds.emplace_back(check, seed_opt(check));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }
    for (const auto& [sub, opt] : seeds)
        if (sub->parsed() && opt->count() > 0) c.seed = seed_value;
    if (c.format.empty()) c.format = (fig->parsed() || curve->parsed()) ? "csv" : "json";

    try {
        if (diag->parsed()) return cmd_diagnose(c);
        if (fig->parsed()) return cmd_figure1(c, f1);
        if (curve->parsed()) return cmd_size_curve(c, co);
        if (power->parsed()) return cmd_power(c, power_c);
        if (bound->parsed()) return cmd_bound(c, gamma, bound_tol);
        if (crit->parsed()) return cmd_critical(c, cr);
        if (check->parsed()) return cmd_check(c, trials);
    } catch (const hardiag::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
