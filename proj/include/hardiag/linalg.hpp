#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace hardiag {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Orthonormal basis of the column span. Columns are scaled to unit norm
// first so that Householder QR is accurate columnwise on badly scaled inputs
// (e.g. Vandermonde trends).
template <typename Derived>
Mat<typename Derived::Scalar> orthonormal_columns(const Eigen::MatrixBase<Derived>& m,
                                                  typename Derived::Scalar rel_tol = 1e-10)
{
    using Scalar = typename Derived::Scalar;
    Mat<Scalar> scaled = m;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const Scalar nrm = scaled.col(j).norm();
        if (nrm > Scalar(0)) scaled.col(j) /= nrm;
    }
    if (scaled.cols() == 0) return Mat<Scalar>(m.rows(), 0);
    Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(scaled);
    qr.setThreshold(rel_tol);
    const Eigen::Index r = qr.rank();
    Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(m.rows(), r);
    return q;
}

// Rank of the column span under the same normalisation.
template <typename Derived>
Eigen::Index column_rank(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar rel_tol = 1e-10)
{
    return orthonormal_columns(m, rel_tol).cols();
}

// M - B B' M for B with orthonormal columns.
template <typename DerivedB, typename DerivedM>
Mat<typename DerivedM::Scalar> residual(const Eigen::MatrixBase<DerivedB>& b, const Eigen::MatrixBase<DerivedM>& m)
{
    Mat<typename DerivedM::Scalar> out = m;
    if (b.cols() > 0) {
        // two passes keep the residual orthogonal to working precision
        out -= b * (b.transpose() * out);
        out -= b * (b.transpose() * out);
    }
    return out;
}

// Orthogonal projector onto the complement of span(B), B orthonormal.
template <typename Derived>
Mat<typename Derived::Scalar> perp_projector(const Eigen::MatrixBase<Derived>& b)
{
    using Scalar = typename Derived::Scalar;
    Mat<Scalar> p = Mat<Scalar>::Identity(b.rows(), b.rows());
    if (b.cols() > 0) p.noalias() -= b * b.transpose();
    return p;
}

template <typename Derived>
Mat<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m)
{
    return (m + m.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
typename Derived::Scalar asymmetry(const Eigen::MatrixBase<Derived>& m)
{
    using Scalar = typename Derived::Scalar;
    const Scalar scale = m.cwiseAbs().maxCoeff();
    if (scale == Scalar(0)) return Scalar(0);
    return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

// Orthonormal basis of ker(R) (R is q x k).
template <typename Derived>
Mat<typename Derived::Scalar> null_space(const Eigen::MatrixBase<Derived>& r, typename Derived::Scalar rel_tol = 1e-10)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index k = r.cols();
    if (r.rows() == 0) return Mat<Scalar>::Identity(k, k);
    Eigen::JacobiSVD<Mat<Scalar>> svd(r, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const Scalar smax = s.size() > 0 ? s(0) : Scalar(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * smax) ++rank;
    return svd.matrixV().rightCols(k - rank);
}

} // namespace hardiag
