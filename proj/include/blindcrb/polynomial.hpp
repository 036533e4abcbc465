#pragma once

// Polynomials in z^{-1}: coefficient i multiplies z^{-i}. Roots are reported
// in the z-plane, so (1 - 0.5 z^{-1}) has the root 0.5.

#include "blindcrb/linalg.hpp"

namespace blindcrb::poly {

/// Finite nonzero roots. Leading zero coefficients (roots at infinity) and
/// trailing zero coefficients (poles at the origin) are stripped first.
CVec roots(const CVec& coeffs);

/// Monic coefficients of prod_k (1 - r_k z^{-1}).
CVec from_roots(const CVec& roots);

CVec convolve(const CVec& a, const CVec& b);

/// (len(h) + n - 1) x n matrix C with C x = h * x.
CMat convolution_matrix(const CVec& h, Index n);

struct Deconvolution {
    CVec quotient;
    double relative_residual = 0.0;
};

/// Least-squares x minimising ||y - divisor * x||, with the relative residual.
Deconvolution deconvolve(const CVec& y, const CVec& divisor);

}  // namespace blindcrb::poly
