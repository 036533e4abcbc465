#pragma once

// FIR SIMO channel H(z) = sum_i h(i) z^{-i}, h(i) in C^m, and the block
// Toeplitz convolution operators built from it.
//
// Stacking: h = [h(0); h(1); ...; h(N-1)], so coefficient (l, i) of the m x N
// coefficient array lands at index i*m + l. Observation blocks run backwards
// in time, Y = [y(k); y(k-1); ...; y(k-M+1)], and the symbol vector
// A = [a(k); ...; a(k-M-N+2)] likewise.

#include <string>
#include <utility>
#include <vector>

#include "blindcrb/linalg.hpp"

namespace blindcrb {

class Channel {
public:
    /// coeffs is m x N. Throws InvalidInput on an all-zero or non-finite
    /// channel, and on nonzero imaginary parts when field == Real.
    Channel(std::string name, Field field, CMat coeffs);

    static Channel real(std::string name, const RMat& coeffs);
    static Channel complex(std::string name, const CMat& coeffs);
    static Channel from_stacked(std::string name, Field field, const CVec& h, Index m);

    const std::string& name() const { return name_; }
    Field field() const { return field_; }
    Index m() const { return coeffs_.rows(); }
    Index length() const { return coeffs_.cols(); }
    Index dim() const { return coeffs_.size(); }
    const CMat& coeffs() const { return coeffs_; }

    CVec stacked() const;
    CVec subchannel(Index l) const { return coeffs_.row(l).transpose(); }

private:
    std::string name_;
    Field field_;
    CMat coeffs_;
};

struct SymbolBurst {
    CVec symbols;
    Field field = Field::Complex;

    Index size() const { return symbols.size(); }
};

struct ReducibleDecomposition {
    Channel irreducible;  ///< H_I(z), length N_I
    CVec monic;           ///< h_c, first coefficient 1, length N_c
    CVec common_zeros;
    double residual = 0.0;

    Index n_i() const { return irreducible.length(); }
    Index n_c() const { return monic.size(); }
    bool reducible() const { return monic.size() > 1; }
};

struct ZeroPairing {
    std::vector<std::pair<Complex, Complex>> pairs;  ///< (z0, 1/conj(z0))
    std::vector<Complex> unit_selfpaired;            ///< roots at +1 or -1
    Index root_count = 0;
};

/// Mm x (M+N-1) block Toeplitz operator with first block row [H 0].
CMat toeplitz_matrix(const CMat& coeffs, Index burst);
Mat toeplitz_op(const Channel& ch, Index burst);

/// Mm x mN operator (A' kron I_m) with T(h) A = calA h for every h.
CMat commutativity_matrix(const CVec& symbols, Index m, Index length, Index burst);
Mat commutativity_op(const SymbolBurst& a, Index m, Index length, Index burst);

/// Real-field channel with 2m subchannels: rows (Re H_l, Im H_l) interleaved.
/// A channel that is already real passes through unchanged.
Channel realify_channel(const Channel& ch);

std::vector<CVec> subchannel_zeros(const Channel& ch);
CVec common_zeros(const Channel& ch, double tol = 1e-6);

/// H(z) = H_I(z) H_c(z) with H_c monic holding the common zeros. Irreducible
/// channels give H_c = 1. Throws DecompositionFailed when the per-subchannel
/// least-squares deconvolution leaves a relative residual above tol.
ReducibleDecomposition reducible_decompose(const Channel& ch, double tol = 1e-6);

/// mN x mN_I matrix T_c with T_c h_I = h.
CMat tc_matrix(const ReducibleDecomposition& dec);
/// mN x N_c matrix T_I with T_I h_c = h.
CMat ti_matrix(const ReducibleDecomposition& dec);

ZeroPairing conjugate_reciprocal_pairs(const CVec& poly, Field field, double tol = 1e-6);

/// Unit vector e_i of the stacked channel coordinates, as an m x N array.
CMat unit_channel(Index m, Index length, Index i);

}  // namespace blindcrb
