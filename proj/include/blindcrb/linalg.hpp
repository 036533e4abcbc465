#pragma once

// Dense linear algebra shared by every module: pseudo-inverses, projectors,
// null spaces and the mapping between complex parameters and their real
// (Re/Im stacked) representation.

#include <complex>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "blindcrb/errors.hpp"

namespace blindcrb {

enum class Field { Real, Complex };

const char* to_string(Field f);
Field field_from_string(const std::string& s);

using Complex = std::complex<double>;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Relative eigenvalue threshold for FIM rank decisions and CRB pseudo-inverses.
inline constexpr double kFimRankTol = 1e-10;

/// A dense matrix carrying a hard real/complex tag. A Real matrix is stored
/// as real scalars; promotion to complex only happens through to_complex().
class Mat {
public:
    Mat() = default;
    explicit Mat(RMat m) : data_(std::move(m)) {}
    explicit Mat(CMat m) : data_(std::move(m)) {}

    static Mat real(RMat m) { return Mat(std::move(m)); }
    static Mat complex(CMat m) { return Mat(std::move(m)); }

    Field field() const { return std::holds_alternative<RMat>(data_) ? Field::Real : Field::Complex; }
    Index rows() const;
    Index cols() const;

    const RMat& as_real() const;
    const CMat& as_complex() const;
    CMat to_complex() const;

private:
    std::variant<RMat, CMat> data_{RMat{}};
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& a, const char* what) {
    if (!a.allFinite()) {
        throw InvalidInput(std::string(what) + ": non-finite entries");
    }
}

inline double default_tol(Index rows, Index cols) {
    return static_cast<double>(std::max(rows, cols)) * Eigen::NumTraits<double>::epsilon();
}

}  // namespace detail

template <typename Scalar>
using DenseMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Moore-Penrose pseudo-inverse. Singular values below tol * sigma_max are
/// treated as zero; tol defaults to max(rows, cols) * eps.
template <typename Scalar>
DenseMat<Scalar> pseudo_inverse(const DenseMat<Scalar>& a, std::optional<double> tol = std::nullopt) {
    detail::require_finite(a, "pseudo_inverse");
    if (a.size() == 0) {
        return DenseMat<Scalar>::Zero(a.cols(), a.rows());
    }
    Eigen::JacobiSVD<DenseMat<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    const double cut = tol.value_or(detail::default_tol(a.rows(), a.cols())) * smax;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

template <typename Scalar>
Index numerical_rank(const DenseMat<Scalar>& a, std::optional<double> tol = std::nullopt) {
    detail::require_finite(a, "numerical_rank");
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<DenseMat<Scalar>> svd(a);
    const auto& s = svd.singularValues();
    const double cut = tol.value_or(detail::default_tol(a.rows(), a.cols())) * s(0);
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut && s(i) > 0.0) ++r;
    }
    return r;
}

/// Orthogonal projector onto range(X): X (X^H X)^+ X^H.
template <typename Scalar>
DenseMat<Scalar> projector(const DenseMat<Scalar>& x) {
    if (x.cols() == 0) throw InvalidInput("projector: X has no columns");
    detail::require_finite(x, "projector");
    DenseMat<Scalar> p = x * pseudo_inverse<Scalar>(x);
    return (p + p.adjoint()) / 2.0;
}

template <typename Scalar>
DenseMat<Scalar> complement_projector(const DenseMat<Scalar>& x) {
    DenseMat<Scalar> p = projector<Scalar>(x);
    return DenseMat<Scalar>::Identity(p.rows(), p.cols()) - p;
}

/// Orthonormal basis of {x : ||A x|| <= tol ||A|| ||x||}.
template <typename Scalar>
DenseMat<Scalar> null_space_basis(const DenseMat<Scalar>& a, std::optional<double> tol = std::nullopt) {
    detail::require_finite(a, "null_space_basis");
    const Index n = a.cols();
    if (a.rows() == 0 || a.isZero(0.0)) return DenseMat<Scalar>::Identity(n, n);
    Eigen::JacobiSVD<DenseMat<Scalar>> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cut = tol.value_or(detail::default_tol(a.rows(), a.cols())) * s(0);
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) ++r;
    }
    return svd.matrixV().rightCols(n - r);
}

/// Orthonormal basis of range(X).
template <typename Scalar>
DenseMat<Scalar> range_basis(const DenseMat<Scalar>& x, std::optional<double> tol = std::nullopt) {
    detail::require_finite(x, "range_basis");
    if (x.size() == 0 || x.isZero(0.0)) return DenseMat<Scalar>(x.rows(), 0);
    Eigen::JacobiSVD<DenseMat<Scalar>> svd(x, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cut = tol.value_or(detail::default_tol(x.rows(), x.cols())) * s(0);
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) ++r;
    }
    return svd.matrixU().leftCols(r);
}

/// Spectral-norm distance between the orthogonal projectors onto range(U) and range(V).
template <typename Scalar>
double subspace_distance(const DenseMat<Scalar>& u, const DenseMat<Scalar>& v) {
    const DenseMat<Scalar> pu = u.cols() == 0 ? DenseMat<Scalar>::Zero(u.rows(), u.rows()) : projector<Scalar>(u);
    const DenseMat<Scalar> pv = v.cols() == 0 ? DenseMat<Scalar>::Zero(v.rows(), v.rows()) : projector<Scalar>(v);
    if (pu.rows() != pv.rows()) throw InvalidInput("subspace_distance: dimension mismatch");
    Eigen::JacobiSVD<DenseMat<Scalar>> svd(pu - pv);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

/// Angle (radians) between vector v and the span of the orthonormal columns of basis.
double principal_angle(const RVec& v, const RMat& orthonormal_basis);

// Real <-> complex parameter mapping.

/// 2n x 2n matrix mapping [theta; conj(theta)] to [Re theta; Im theta].
struct RealComplexMap {
    Index n = 0;
    CMat matrix;

    static RealComplexMap make(Index n);
};

RVec realify_params(const CVec& theta);
CVec complexify_params(const RVec& theta_r);

/// Real FIM of [Re theta; Im theta] from J_theta_theta (Hermitian) and
/// J_theta_theta* (symmetric) via the two-block-sum formula.
RMat realify_fim(const CMat& j, const CMat& j_cross);

/// Real matrix acting on [Re x; Im x] as the complex operator X acts on x.
RMat realify_operator(const CMat& x);

/// tr of the real CRB computed directly from J and J*: tr((J - Jx J^{-*} Jx^*)^{-1}).
double trace_crb_complex(const CMat& j, const CMat& j_cross);

/// Symmetric positive semidefinite check with tolerance -rel_tol * ||J||.
bool is_psd(const RMat& j, double rel_tol = 1e-8);

}  // namespace blindcrb
