#include "blindcrb/channel.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "blindcrb/polynomial.hpp"

namespace blindcrb {

Channel::Channel(std::string name, Field field, CMat coeffs)
    : name_(std::move(name)), field_(field), coeffs_(std::move(coeffs)) {
    if (coeffs_.rows() < 1 || coeffs_.cols() < 1) throw InvalidInput("Channel: m and N must be >= 1");
    if (!coeffs_.allFinite()) throw InvalidInput("Channel: non-finite coefficient");
    if (coeffs_.isZero(0.0)) throw InvalidInput("Channel: all-zero impulse response");
    if (field_ == Field::Real && !coeffs_.imag().isZero(0.0)) {
        throw InvalidInput("Channel: real channel with nonzero imaginary part");
    }
}

Channel Channel::real(std::string name, const RMat& coeffs) {
    return Channel(std::move(name), Field::Real, coeffs.cast<Complex>());
}

Channel Channel::complex(std::string name, const CMat& coeffs) {
    return Channel(std::move(name), Field::Complex, coeffs);
}

Channel Channel::from_stacked(std::string name, Field field, const CVec& h, Index m) {
    if (m < 1 || h.size() % m != 0) throw InvalidInput("Channel::from_stacked: length not a multiple of m");
    const Index n = h.size() / m;
    CMat coeffs(m, n);
    for (Index i = 0; i < n; ++i) coeffs.col(i) = h.segment(i * m, m);
    return Channel(std::move(name), field, std::move(coeffs));
}

CVec Channel::stacked() const {
    return Eigen::Map<const CVec>(coeffs_.data(), coeffs_.size());
}

CMat toeplitz_matrix(const CMat& coeffs, Index burst) {
    if (burst < 1) throw InvalidInput("toeplitz: burst length M must be >= 1");
    const Index m = coeffs.rows(), n = coeffs.cols();
    CMat t = CMat::Zero(burst * m, burst + n - 1);
    for (Index r = 0; r < burst; ++r) t.block(r * m, r, m, n) = coeffs;
    return t;
}

Mat toeplitz_op(const Channel& ch, Index burst) {
    CMat t = toeplitz_matrix(ch.coeffs(), burst);
    if (ch.field() == Field::Real) return Mat::real(t.real());
    return Mat::complex(std::move(t));
}

CMat commutativity_matrix(const CVec& symbols, Index m, Index length, Index burst) {
    if (symbols.size() != burst + length - 1) {
        throw InvalidInput("commutativity_op: symbol vector length must be M+N-1");
    }
    CMat out = CMat::Zero(burst * m, m * length);
    for (Index r = 0; r < burst; ++r) {
        for (Index i = 0; i < length; ++i) {
            out.block(r * m, i * m, m, m).diagonal().setConstant(symbols(r + i));
        }
    }
    return out;
}

Mat commutativity_op(const SymbolBurst& a, Index m, Index length, Index burst) {
    CMat op = commutativity_matrix(a.symbols, m, length, burst);
    if (a.field == Field::Real) {
        if (!a.symbols.imag().isZero(0.0)) throw InvalidInput("commutativity_op: real burst with imaginary part");
        return Mat::real(op.real());
    }
    return Mat::complex(std::move(op));
}

Channel realify_channel(const Channel& ch) {
    if (ch.field() == Field::Real) return ch;
    const Index m = ch.m(), n = ch.length();
    CMat out(2 * m, n);
    for (Index l = 0; l < m; ++l) {
        out.row(2 * l) = ch.coeffs().row(l).real().cast<Complex>();
        out.row(2 * l + 1) = ch.coeffs().row(l).imag().cast<Complex>();
    }
    return Channel(ch.name(), Field::Real, std::move(out));
}

std::vector<CVec> subchannel_zeros(const Channel& ch) {
    std::vector<CVec> out;
    out.reserve(static_cast<std::size_t>(ch.m()));
    for (Index l = 0; l < ch.m(); ++l) out.push_back(poly::roots(ch.subchannel(l)));
    return out;
}

CVec common_zeros(const Channel& ch, double tol) {
    std::vector<CVec> zeros;
    for (Index l = 0; l < ch.m(); ++l) {
        // an identically zero subchannel vanishes everywhere and constrains nothing
        if (ch.subchannel(l).isZero(0.0)) continue;
        zeros.push_back(poly::roots(ch.subchannel(l)));
    }
    if (zeros.empty()) return CVec(0);

    std::vector<std::vector<bool>> used(zeros.size());
    for (std::size_t s = 0; s < zeros.size(); ++s) used[s].assign(static_cast<std::size_t>(zeros[s].size()), false);

    std::vector<Complex> common;
    const CVec& ref = zeros.front();
    for (Index k = 0; k < ref.size(); ++k) {
        std::vector<Index> picks(zeros.size(), -1);
        picks[0] = k;
        Complex sum = ref(k);
        bool shared = true;
        for (std::size_t s = 1; s < zeros.size() && shared; ++s) {
            Index best = -1;
            double best_dist = tol;
            for (Index j = 0; j < zeros[s].size(); ++j) {
                if (used[s][static_cast<std::size_t>(j)]) continue;
                const double d = std::abs(zeros[s](j) - ref(k));
                if (d <= best_dist) {
                    best_dist = d;
                    best = j;
                }
            }
            if (best < 0) {
                shared = false;
            } else {
                picks[s] = best;
                sum += zeros[s](best);
            }
        }
        if (!shared) continue;
        for (std::size_t s = 1; s < zeros.size(); ++s) used[s][static_cast<std::size_t>(picks[s])] = true;
        common.push_back(sum / static_cast<double>(zeros.size()));
    }
    return Eigen::Map<CVec>(common.data(), static_cast<Index>(common.size()));
}

ReducibleDecomposition reducible_decompose(const Channel& ch, double tol) {
    CVec zeros = common_zeros(ch, tol);
    CVec monic = poly::from_roots(zeros);
    if (ch.field() == Field::Real) {
        if (monic.imag().cwiseAbs().maxCoeff() > tol) {
            throw DecompositionFailed("reducible_decompose: common factor of a real channel is not real");
        }
        monic = monic.real().cast<Complex>();
    }
    const Index n_i = ch.length() - monic.size() + 1;
    CMat irreducible(ch.m(), n_i);
    double residual = 0.0;
    for (Index l = 0; l < ch.m(); ++l) {
        const poly::Deconvolution d = poly::deconvolve(ch.subchannel(l), monic);
        irreducible.row(l) = d.quotient.transpose();
        residual = std::max(residual, d.relative_residual);
    }
    if (residual > tol) {
        throw DecompositionFailed("reducible_decompose: deconvolution residual " + std::to_string(residual) +
                                  " exceeds tolerance");
    }
    if (ch.field() == Field::Real) irreducible = irreducible.real().cast<Complex>();
    return ReducibleDecomposition{Channel(ch.name() + "_I", ch.field(), std::move(irreducible)), std::move(monic),
                                  std::move(zeros), residual};
}

CMat tc_matrix(const ReducibleDecomposition& dec) {
    const Index m = dec.irreducible.m();
    const CMat mono_toeplitz = toeplitz_matrix(dec.monic.transpose(), dec.n_i());  // N_I x N
    return Eigen::kroneckerProduct(mono_toeplitz.transpose(), CMat::Identity(m, m)).eval();
}

CMat ti_matrix(const ReducibleDecomposition& dec) {
    const Index m = dec.irreducible.m(), n_i = dec.n_i(), n_c = dec.n_c();
    const CVec h_i = dec.irreducible.stacked();
    CMat out = CMat::Zero(m * (n_i + n_c - 1), n_c);
    for (Index j = 0; j < n_c; ++j) out.block(j * m, j, m * n_i, 1) = h_i;
    return out;
}

ZeroPairing conjugate_reciprocal_pairs(const CVec& coeffs, Field field, double tol) {
    if (coeffs.size() < 2) throw InvalidInput("conjugate_reciprocal_pairs: degree must be >= 1");
    CVec rts = poly::roots(coeffs);
    if (field == Field::Real) {
        // real polynomials: snap numerically real roots onto the axis
        for (Index k = 0; k < rts.size(); ++k) {
            if (std::abs(rts(k).imag()) <= tol) rts(k) = Complex(rts(k).real(), 0.0);
        }
    }
    ZeroPairing out;
    out.root_count = rts.size();
    std::vector<bool> used(static_cast<std::size_t>(rts.size()), false);
    for (Index k = 0; k < rts.size(); ++k) {
        if (std::abs(rts(k) - 1.0) <= tol || std::abs(rts(k) + 1.0) <= tol) {
            out.unit_selfpaired.push_back(rts(k));
            used[static_cast<std::size_t>(k)] = true;
        }
    }
    for (Index k = 0; k < rts.size(); ++k) {
        if (used[static_cast<std::size_t>(k)] || rts(k) == Complex(0.0)) continue;
        const Complex target = 1.0 / std::conj(rts(k));
        const double slack = tol * std::max(1.0, std::abs(target));
        for (Index j = 0; j < rts.size(); ++j) {
            if (j == k || used[static_cast<std::size_t>(j)]) continue;
            if (std::abs(rts(j) - target) <= slack) {
                used[static_cast<std::size_t>(k)] = used[static_cast<std::size_t>(j)] = true;
                out.pairs.emplace_back(rts(k), rts(j));
                break;
            }
        }
    }
    return out;
}

CMat unit_channel(Index m, Index length, Index i) {
    CMat e = CMat::Zero(m, length);
    e(i % m, i / m) = 1.0;
    return e;
}

}  // namespace blindcrb
