#include "blindcrb/polynomial.hpp"

#include <unsupported/Eigen/Polynomials>

namespace blindcrb::poly {

CVec roots(const CVec& coeffs) {
    Index first = 0, last = coeffs.size() - 1;
    while (first <= last && coeffs(first) == Complex(0.0)) ++first;
    while (last >= first && coeffs(last) == Complex(0.0)) --last;
    if (last - first < 1) return CVec(0);

    // z^d H(z) = c_first z^d + ... + c_last, Eigen wants increasing powers.
    const Index degree = last - first;
    CVec increasing(degree + 1);
    for (Index k = 0; k <= degree; ++k) increasing(k) = coeffs(last - k);

    Eigen::PolynomialSolver<Complex, Eigen::Dynamic> solver;
    solver.compute(increasing);
    return solver.roots();
}

CVec from_roots(const CVec& rts) {
    CVec out = CVec::Ones(1);
    for (Index k = 0; k < rts.size(); ++k) {
        CVec factor(2);
        factor << 1.0, -rts(k);
        out = convolve(out, factor);
    }
    return out;
}

CVec convolve(const CVec& a, const CVec& b) {
    if (a.size() == 0 || b.size() == 0) return CVec(0);
    CVec out = CVec::Zero(a.size() + b.size() - 1);
    for (Index i = 0; i < a.size(); ++i) {
        for (Index j = 0; j < b.size(); ++j) out(i + j) += a(i) * b(j);
    }
    return out;
}

CMat convolution_matrix(const CVec& h, Index n) {
    CMat c = CMat::Zero(h.size() + n - 1, n);
    for (Index j = 0; j < n; ++j) c.block(j, j, h.size(), 1) = h;
    return c;
}

Deconvolution deconvolve(const CVec& y, const CVec& divisor) {
    if (divisor.size() == 0 || divisor.size() > y.size()) {
        throw InvalidInput("deconvolve: divisor longer than signal");
    }
    const Index n = y.size() - divisor.size() + 1;
    const CMat c = convolution_matrix(divisor, n);
    Deconvolution out;
    out.quotient = c.colPivHouseholderQr().solve(y);
    const double ny = y.norm();
    out.relative_residual = ny > 0 ? (c * out.quotient - y).norm() / ny : 0.0;
    return out;
}

}  // namespace blindcrb::poly
