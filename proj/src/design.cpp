#include "hardiag/design.hpp"
#include "hardiag/errors.hpp"
#include "hardiag/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace hardiag {

SubspaceBasis::SubspaceBasis(Eigen::MatrixXd vectors) : vectors_(std::move(vectors))
{
    if (vectors_.cols() > 0) {
        const Eigen::MatrixXd gram = vectors_.transpose() * vectors_;
        const double dev = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
        if (dev > 1e-12) throw InputError("SubspaceBasis: columns are not orthonormal");
    }
}

SubspaceBasis SubspaceBasis::span_of(const Eigen::MatrixXd& columns, double rel_tol)
{
    Eigen::MatrixXd q = orthonormal_columns(columns, rel_tol);
    // re-orthogonalise once so the Gram check holds at 1e-12 for large n
    if (q.cols() > 0) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
        q = qr.householderQ() * Eigen::MatrixXd::Identity(q.rows(), q.cols());
    }
    return SubspaceBasis(std::move(q));
}

SubspaceBasis SubspaceBasis::zero(int n)
{
    return SubspaceBasis(Eigen::MatrixXd(n, 0));
}

Eigen::MatrixXd SubspaceBasis::project(const Eigen::MatrixXd& m) const
{
    return m - project_out(m);
}

Eigen::MatrixXd SubspaceBasis::project_out(const Eigen::MatrixXd& m) const
{
    return residual(vectors_, m);
}

Eigen::MatrixXd SubspaceBasis::projector() const
{
    return vectors_ * vectors_.transpose();
}

Eigen::MatrixXd SubspaceBasis::perp_projector() const
{
    return hardiag::perp_projector(vectors_);
}

double SubspaceBasis::inclusion_residual(const Eigen::MatrixXd& m) const
{
    const double nrm = m.norm();
    if (nrm == 0.0) return 0.0;
    return project_out(m).norm() / nrm;
}

bool SubspaceBasis::contains(const Eigen::MatrixXd& m, double tol) const
{
    return inclusion_residual(m) <= tol;
}

bool SubspaceBasis::inside(const SubspaceBasis& other, double tol) const
{
    return dim() == 0 || other.contains(vectors_, tol);
}

DesignProblem::DesignProblem(Eigen::MatrixXd X, Eigen::MatrixXd R, Eigen::VectorXd r)
    : x_(std::move(X)), r_mat_(std::move(R)), r_vec_(std::move(r))
{
    const int n = this->n(), k = this->k(), q = this->q();
    if (k < 1 || k >= n) throw InputError("design: need 1 <= k < n");
    if (!x_.allFinite()) throw InputError("design: X has non-finite entries");
    if (r_mat_.cols() != k) throw InputError("design: R must have k columns");
    if (q < 1 || q > k) throw InputError("design: need 1 <= q <= k");
    if (r_vec_.size() != q) throw InputError("design: r must have q entries");
    if (column_rank(x_) != k) throw InputError("design: X is rank deficient");
    Eigen::JacobiSVD<Eigen::MatrixXd> rsvd(r_mat_);
    const auto& sv = rsvd.singularValues();
    if (sv(q - 1) <= 1e-10 * sv(0)) throw InputError("design: R is rank deficient");

    col_scale_ = x_.colwise().norm().transpose();
    const Eigen::MatrixXd scaled = x_ * col_scale_.cwiseInverse().asDiagonal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(scaled);
    q_thin_ = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
    tri_ = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd tinv =
        tri_.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd sinv = col_scale_.cwiseInverse().asDiagonal();
    xtx_inv_ = symmetrized(Eigen::MatrixXd(sinv * tinv * tinv.transpose() * sinv));
    restricted_cov_ = symmetrized(Eigen::MatrixXd(r_mat_ * xtx_inv_ * r_mat_.transpose()));
    span_x_ = SubspaceBasis::span_of(q_thin_);
    m0lin_ = hardiag::m0lin(*this);
}

Eigen::VectorXd DesignProblem::ols_beta(const Eigen::VectorXd& y) const
{
    const Eigen::VectorXd qty = q_thin_.transpose() * y;
    const Eigen::VectorXd z = tri_.triangularView<Eigen::Upper>().solve(qty);
    return z.cwiseQuotient(col_scale_);
}

Eigen::VectorXd DesignProblem::residuals(const Eigen::VectorXd& y) const
{
    return residual(q_thin_, y);
}

Eigen::VectorXd DesignProblem::beta0() const
{
    const Eigen::MatrixXd rrt = r_mat_ * r_mat_.transpose();
    return r_mat_.transpose() * rrt.ldlt().solve(r_vec_);
}

Eigen::MatrixXd polynomial_design(int n, int kF, const Eigen::MatrixXd& extra)
{
    if (kF < 1) throw InputError("polynomial_design: kF must be at least 1");
    if (extra.size() > 0 && extra.rows() != n) throw InputError("polynomial_design: extra has wrong row count");
    const int k = kF + static_cast<int>(extra.cols());
    if (k >= n) throw InputError("polynomial_design: need k < n");
    Eigen::MatrixXd x(n, k);
    for (int j = 1; j <= n; ++j)
        for (int s = 0; s < kF; ++s) x(j - 1, s) = std::pow(double(j), s);
    if (extra.cols() > 0) x.rightCols(extra.cols()) = extra;
    if (column_rank(x) != k) throw InputError("polynomial_design: (F, extra) is rank deficient");
    return x;
}

Eigen::MatrixXd cyclical_design(int n, double omega, const Eigen::MatrixXd& extra)
{
    if (!(omega > 0.0 && omega < std::numbers::pi)) throw InputError("cyclical_design: omega must lie in (0, pi)");
    if (extra.size() > 0 && extra.rows() != n) throw InputError("cyclical_design: extra has wrong row count");
    const int k = 2 + static_cast<int>(extra.cols());
    if (k > n) throw InputError("cyclical_design: need k <= n");
    Eigen::MatrixXd x(n, k);
    x.leftCols(2) = trig_basis(n, 0, omega);
    if (extra.cols() > 0) x.rightCols(extra.cols()) = extra;
    if (column_rank(x) != k) throw InputError("cyclical_design: design is rank deficient");
    return x;
}

namespace {

// E_{n,s}(omega) with j^s replaced by (j/n)^s; same span, no overflow.
Eigen::MatrixXd scaled_block(int n, int s, double omega)
{
    Eigen::MatrixXd e = reduced_trig_basis(n, 0, omega);
    for (int j = 1; j <= n; ++j) e.row(j - 1) *= std::pow(double(j) / n, s);
    return e;
}

double residual_sq(const Eigen::MatrixXd& basis, int n, double omega)
{
    return residual(basis, trig_basis(n, 0, omega)).squaredNorm();
}

} // namespace

int rho(double omega, const SubspaceBasis& L)
{
    const int n = L.ambient();
    if (L.dim() >= n) throw InputError("rho: dim(L) must be below n");
    if (omega < -1e-12 || omega > std::numbers::pi + 1e-12) throw InputError("rho: omega outside [0, pi]");
    for (int s = 0; s <= L.dim(); ++s)
        if (L.inclusion_residual(scaled_block(n, s, omega)) > kInclusionTol) return s;
    throw NumericalFailure("rho: no escaping order found up to dim(L)");
}

FrequencyProfile singular_frequencies(const SubspaceBasis& L)
{
    const int n = L.ambient();
    if (L.dim() >= n) throw InputError("singular_frequencies: dim(L) must be below n");
    FrequencyProfile out;
    if (L.dim() == 0) return out;

    const Eigen::MatrixXd& b = L.vectors();
    constexpr int cells = 200000;
    const double h = std::numbers::pi / cells;
    std::vector<double> g(cells + 1);
    parallel_for(
        cells + 1,
        [&](std::int64_t i) {
            const double w = i * h;
            const std::complex<double> step(std::cos(w), std::sin(w));
            std::complex<double> z = step;
            Eigen::VectorXd c(n), sn(n);
            for (int j = 0; j < n; ++j) {
                c(j) = z.real();
                sn(j) = z.imag();
                z *= step;
            }
            const Eigen::VectorXd bc = b.transpose() * c, bs = b.transpose() * sn;
            g[static_cast<std::size_t>(i)] = (c - b * bc).squaredNorm() + (sn - b * bs).squaredNorm();
        },
        2048);

    const double sum_j2 = n * (n + 1.0) * (2.0 * n + 1.0) / 6.0;
    const double prefilter = 1e-6 * n + sum_j2 * h * h;
    const double accept = 1e-16 * n;
    std::vector<double> roots;
    for (int i = 0; i <= cells; ++i) {
        const bool left_ok = i == 0 || g[i] <= g[i - 1];
        const bool right_ok = i == cells || g[i] <= g[i + 1];
        if (!(left_ok && right_ok) || g[i] > prefilter) continue;

        double lo = std::max(0, i - 1) * h, hi = std::min(cells, i + 1) * h;
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = residual_sq(b, n, x1), f2 = residual_sq(b, n, x2);
        for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = residual_sq(b, n, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = residual_sq(b, n, x2);
            }
        }
        double w = f1 <= f2 ? x1 : x2;
        double gw = std::min(f1, f2);
        for (double edge : {0.0, std::numbers::pi}) {
            if (std::abs(w - edge) < 1e-8) {
                const double ge = residual_sq(b, n, edge);
                if (ge <= gw || ge < accept) {
                    w = edge;
                    gw = ge;
                }
            }
        }
        if (gw >= 1e-12 * n) continue;
        if (rho(w, L) > 0) {
            roots.push_back(w);
        } else if (gw < accept) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "singular_frequencies: ambiguous near-root at " << w << " with residual " << gw;
            throw NumericalFailure(msg.str());
        }
    }
    std::sort(roots.begin(), roots.end());
    // Roots joined by an included midpoint belong to one flat basin; edges absorb their basin.
    const auto same_basin = [&](double a, double c) { return rho(0.5 * (a + c), L) > 0; };
    for (double w : roots) {
        int order = rho(w, L);
        for (double edge : {0.0, std::numbers::pi}) {
            if (w != edge && std::abs(w - edge) < 1e-3 && rho(edge, L) >= order && same_basin(w, edge)) {
                w = edge;
                order = rho(edge, L);
            }
        }
        if (!out.omegas.empty() && (std::abs(w - out.omegas.back()) < 1e-8 || same_basin(out.omegas.back(), w))) {
            if (order > out.orders.back() || is_boundary_frequency(w)) {
                out.omegas.back() = w;
                out.orders.back() = order;
            }
            continue;
        }
        out.omegas.push_back(w);
        out.orders.push_back(order);
    }
    if (kappa_total(out) > L.dim())
        throw NumericalFailure("singular_frequencies: kappa bound exceeds dim(L); a spurious root was accepted");
    return out;
}

int kappa(double omega, int d)
{
    if (d < 1) throw InputError("kappa: d must be positive");
    return is_boundary_frequency(omega) ? d : 2 * d;
}

int kappa_total(const FrequencyProfile& profile)
{
    int total = 0;
    for (int i = 0; i < profile.p(); ++i) total += kappa(profile.omegas[i], profile.orders[i]);
    return total;
}

SubspaceBasis m0lin(const DesignProblem& dp)
{
    const Eigen::MatrixXd ker = null_space(dp.R());
    if (ker.cols() == 0) return SubspaceBasis::zero(dp.n());
    return SubspaceBasis::span_of(dp.X() * ker);
}

} // namespace hardiag
