#include "blindcrb/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace blindcrb {

const char* to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

Field field_from_string(const std::string& s) {
    if (s == "real") return Field::Real;
    if (s == "complex") return Field::Complex;
    throw InvalidInput("unknown field '" + s + "' (expected real|complex)");
}

Index Mat::rows() const {
    return std::visit([](const auto& m) { return m.rows(); }, data_);
}

Index Mat::cols() const {
    return std::visit([](const auto& m) { return m.cols(); }, data_);
}

const RMat& Mat::as_real() const {
    if (const auto* r = std::get_if<RMat>(&data_)) return *r;
    throw InvalidInput("Mat: complex matrix accessed as real");
}

const CMat& Mat::as_complex() const {
    if (const auto* c = std::get_if<CMat>(&data_)) return *c;
    throw InvalidInput("Mat: real matrix accessed as complex (use to_complex)");
}

CMat Mat::to_complex() const {
    if (const auto* r = std::get_if<RMat>(&data_)) return r->cast<Complex>();
    return std::get<CMat>(data_);
}

double principal_angle(const RVec& v, const RMat& basis) {
    const double nv = v.norm();
    if (nv == 0.0) throw InvalidInput("principal_angle: zero vector");
    if (basis.cols() == 0) return M_PI / 2;
    const RVec residual = v - basis * (basis.transpose() * v);
    return std::asin(std::min(1.0, residual.norm() / nv));
}

RealComplexMap RealComplexMap::make(Index n) {
    RealComplexMap map;
    map.n = n;
    const CMat id = CMat::Identity(n, n);
    map.matrix.resize(2 * n, 2 * n);
    map.matrix << id, id, -Complex(0, 1) * id, Complex(0, 1) * id;
    map.matrix *= 0.5;
    return map;
}

RVec realify_params(const CVec& theta) {
    RVec out(2 * theta.size());
    out << theta.real(), theta.imag();
    return out;
}

CVec complexify_params(const RVec& theta_r) {
    if (theta_r.size() % 2 != 0) throw InvalidInput("complexify_params: odd length");
    const Index n = theta_r.size() / 2;
    CVec out(n);
    for (Index i = 0; i < n; ++i) out(i) = Complex(theta_r(i), theta_r(n + i));
    return out;
}

RMat realify_fim(const CMat& j, const CMat& j_cross) {
    if (j.rows() != j.cols() || j_cross.rows() != j.rows() || j_cross.cols() != j.cols()) {
        throw InvalidInput("realify_fim: J and J* dimension mismatch");
    }
    detail::require_finite(j, "realify_fim");
    detail::require_finite(j_cross, "realify_fim");
    const Index n = j.rows();
    RMat out(2 * n, 2 * n);
    const RMat jr = j.real(), ji = j.imag(), cr = j_cross.real(), ci = j_cross.imag();
    out.topLeftCorner(n, n) = 2.0 * (jr + cr);
    out.topRightCorner(n, n) = 2.0 * (-ji + ci);
    out.bottomLeftCorner(n, n) = 2.0 * (ji + ci);
    out.bottomRightCorner(n, n) = 2.0 * (jr - cr);
    return (out + out.transpose()) / 2.0;
}

RMat realify_operator(const CMat& x) {
    const Index r = x.rows(), c = x.cols();
    RMat out(2 * r, 2 * c);
    out.topLeftCorner(r, c) = x.real();
    out.topRightCorner(r, c) = -x.imag();
    out.bottomLeftCorner(r, c) = x.imag();
    out.bottomRightCorner(r, c) = x.real();
    return out;
}

double trace_crb_complex(const CMat& j, const CMat& j_cross) {
    if (j.rows() != j.cols() || j_cross.rows() != j.rows() || j_cross.cols() != j.cols()) {
        throw InvalidInput("trace_crb_complex: J and J* dimension mismatch");
    }
    Eigen::FullPivLU<CMat> lu_conj(j.conjugate());
    lu_conj.setThreshold(kFimRankTol);
    if (!lu_conj.isInvertible()) throw SingularFim("trace_crb_complex: J_theta_theta is singular");
    const CMat inner = j - j_cross * lu_conj.solve(j_cross.conjugate());
    Eigen::FullPivLU<CMat> lu(inner);
    lu.setThreshold(kFimRankTol);
    if (!lu.isInvertible()) throw SingularFim("trace_crb_complex: Schur-type term is singular");
    return lu.inverse().trace().real();
}

bool is_psd(const RMat& j, double rel_tol) {
    if (j.size() == 0) return true;
    const double scale = j.norm();
    if (!j.isApprox(j.transpose(), 1e-10) && (j - j.transpose()).norm() > 1e-10 * scale) return false;
    Eigen::SelfAdjointEigenSolver<RMat> es((j + j.transpose()) / 2.0, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0) >= -rel_tol * scale;
}

}  // namespace blindcrb
