#pragma once

// Shared helpers for the test binaries: seeded random draws and oracles that
// are computed independently of the library code under test.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "blindcrb/channel.hpp"
#include "blindcrb/linalg.hpp"

namespace testing_support {

using namespace blindcrb;

inline std::mt19937_64& rng() {
    static std::mt19937_64 gen(20240611);
    return gen;
}

inline double randn() {
    static std::normal_distribution<double> d;
    return d(rng());
}

inline RMat random_real(Index r, Index c) {
    RMat a(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) a(i, j) = randn();
    return a;
}

inline CMat random_complex(Index r, Index c) {
    CMat a(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) a(i, j) = Complex(randn(), randn());
    return a;
}

inline CMat random_coeffs(Index r, Index c, Field f) {
    return f == Field::Real ? CMat(random_real(r, c).cast<Complex>()) : random_complex(r, c);
}

inline Channel random_channel(Index m, Index n, Field f) {
    return Channel("rand", f, random_coeffs(m, n, f));
}

inline SymbolBurst random_symbols(Index len, Field f) {
    return SymbolBurst{random_coeffs(len, 1, f).col(0), f};
}

// Plain convolution loop: y(k) = sum_i a(i) b(k - i).
inline CVec conv(const CVec& a, const CVec& b) {
    CVec y = CVec::Zero(a.size() + b.size() - 1);
    for (Index i = 0; i < a.size(); ++i)
        for (Index j = 0; j < b.size(); ++j) y(i + j) += a(i) * b(j);
    return y;
}

// Every subchannel of hi convolved with the monic factor hc.
inline Channel reducible_channel(const CMat& hi, const CVec& hc, Field f) {
    CMat h(hi.rows(), hi.cols() + hc.size() - 1);
    for (Index l = 0; l < hi.rows(); ++l) h.row(l) = conv(hi.row(l).transpose(), hc).transpose();
    return Channel("reducible", f, h);
}

// Monic coefficients from roots by repeated convolution.
inline CVec monic(const std::vector<Complex>& roots) {
    CVec p = CVec::Ones(1);
    for (auto r : roots) {
        CVec f(2);
        f << 1.0, -r;
        p = conv(p, f);
    }
    return p;
}

// Noise-free observation stacked backwards in time, computed sample by sample:
// block r holds y(k - r) = sum_i h(i) a(k - r - i), A(0) = a(k).
inline CVec direct_output(const CMat& h, const CVec& a, Index burst) {
    const Index m = h.rows(), n = h.cols();
    CVec y = CVec::Zero(m * burst);
    for (Index r = 0; r < burst; ++r)
        for (Index i = 0; i < n; ++i)
            for (Index l = 0; l < m; ++l) y(r * m + l) += h(l, i) * a(r + i);
    return y;
}

// Real-coordinate Fisher information from mean/covariance maps by central
// differences (exact for maps that are at most quadratic along a coordinate).
// Complex data: 2 Re(dm_i^H C^-1 dm_j) + tr(C^-1 dC_i C^-1 dC_j);
// real data:    dm_i^T C^-1 dm_j + 1/2 tr(C^-1 dC_i C^-1 dC_j).
struct MomentFn {
    std::function<CVec(const RVec&)> mean;
    std::function<CMat(const RVec&)> cov;
};

inline RMat fd_fim(const MomentFn& f, const RVec& theta, bool complex_data, double step = 0.5) {
    const Index k = theta.size();
    const CMat c = f.cov(theta);
    const CMat cinv = c.inverse();
    std::vector<CVec> dm;
    std::vector<CMat> dc;
    for (Index i = 0; i < k; ++i) {
        RVec tp = theta, tm = theta;
        tp(i) += step;
        tm(i) -= step;
        dm.push_back((f.mean(tp) - f.mean(tm)) / (2 * step));
        dc.push_back((f.cov(tp) - f.cov(tm)) / (2 * step));
    }
    RMat j(k, k);
    for (Index a = 0; a < k; ++a) {
        for (Index b = 0; b < k; ++b) {
            const Complex mean_term = dm[a].dot(cinv * dm[b]);
            const Complex cov_term = (cinv * dc[a] * cinv * dc[b]).trace();
            j(a, b) = complex_data ? 2.0 * mean_term.real() + cov_term.real()
                                   : mean_term.real() + 0.5 * cov_term.real();
        }
    }
    return j;
}

// Rank by a full eigen-decomposition with a relative threshold.
inline Index sym_rank(const RMat& j, double rel = 1e-10) {
    Eigen::SelfAdjointEigenSolver<RMat> es((j + j.transpose()) / 2.0);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    Index r = 0;
    for (Index i = 0; i < j.rows(); ++i)
        if (es.eigenvalues()(i) > rel * top) ++r;
    return r;
}

inline double rel_diff(const RMat& a, const RMat& b) {
    return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace testing_support
