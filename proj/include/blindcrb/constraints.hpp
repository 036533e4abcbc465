#pragma once

// Equality constraints on the channel and the constrained CRBs they induce.
//
// Everything works in real coordinates: a complex channel h of length n is
// handled as h_R = [Re h; Im h] (2n entries). A ConstraintSet stores the
// constraint gradients at the true parameter (columns of `jacobian`) and an
// orthonormal basis of the tangent space they leave free.

#include <limits>
#include <string>

#include "blindcrb/channel.hpp"
#include "blindcrb/fim.hpp"

namespace blindcrb {

enum class ConstraintKind { None, Norm, Phase, KnownCoeff, Linear, ReducibleTI, ReducibleProjector, Minimal, Custom };

const char* to_string(ConstraintKind kind);

struct ConstraintSet {
    RMat jacobian;       ///< n x k, columns are constraint gradients
    RMat tangent_basis;  ///< n x (n - rank(jacobian)), orthonormal, V^T jacobian = 0
    ConstraintKind kind = ConstraintKind::Custom;
    Index index = -1;  ///< coefficient index for KnownCoeff (0-based)
    std::string label;
    bool dependent = false;  ///< jacobian columns are linearly dependent

    Index dim() const { return jacobian.rows(); }
    /// Builds the tangent basis as the orthogonal complement of range(jacobian).
    static ConstraintSet from_jacobian(RMat jacobian, ConstraintKind kind, std::string label);
    /// Builds the jacobian as the orthogonal complement of range(tangent).
    static ConstraintSet from_tangent(const RMat& tangent, ConstraintKind kind, std::string label);
};

struct CrbResult {
    RMat crb;  ///< empty when unbounded
    double trace = std::numeric_limits<double>::infinity();
    std::string constraint;
    bool bounded = false;
    std::string warning;
};

/// No constraint: tangent space is everything.
ConstraintSet build_unconstrained(Index dim);

/// h^H h = h°^H h°. Real: gradient 2h°. Complex: [2 h°_R] plus, with
/// include_phase, the phase direction h°_S2 = [-Im h°; Re h°].
ConstraintSet build_norm_constraint(const CVec& h, Field field, bool include_phase = true);
/// h°_S2^T h_R = 0; complex only.
ConstraintSet build_phase_constraint(const CVec& h, Field field);
/// Coefficient i (0-based, stacked index) known.
ConstraintSet build_known_coeff_constraint(const CVec& h, Index i, Field field);
/// C^H h = C^H h°: each complex column c contributes c_R and (j c)_R.
ConstraintSet build_linear_constraint(const Mat& c, Field field);

enum class ReducibleVariant { TI, Projector };

/// TI: T_I°^H h = T_I°^H h°. Projector: P_perp(T_c°) h = 0, with the
/// norm(+phase) directions removed from the tangent space.
ConstraintSet build_reducible_constraints(const ReducibleDecomposition& dec, ReducibleVariant variant);

/// V (V^T J V)^{-1} V^T; bounded = false when V^T J V is singular.
CrbResult constrained_crb(const RMat& j, const ConstraintSet& cs);
/// Constraint on one block of a full FIM (other blocks unconstrained); the
/// returned CRB covers the whole real parameter vector.
CrbResult constrained_crb(const FimResult& fim, const ConstraintSet& cs, const std::string& block = "h");
/// A (A^T J A)^+ A^T, A any matrix whose range is the tangent space.
RMat constrained_crb_projector_form(const RMat& j, const RMat& a);
/// J^+.
CrbResult minimal_crb(const RMat& j);

/// Gaussian-symbol blind CRB on h_R: Schur reduction over sigma_v2, then
/// the pseudo-inverse (complex) or inverse (real). Unbounded when the
/// reduced FIM has more than the phase singularity.
CrbResult gaussian_blind_crb(const Channel& ch, const GaussianModelConfig& cfg);

/// Sub-block of a CRB over the real layout.
RMat crb_block(const RMat& crb, const ParamLayout& real_layout, const std::string& block);

// CLI grammar: norm | phase | norm+phase | known:i (1-based) | linear:<file>
//              | reducible-ti | reducible-proj | minimal

struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::None;
    bool include_phase = false;  ///< norm vs norm+phase
    Index index = -1;            ///< 0-based
    std::string path;
    std::string text;
};

ConstraintSpec parse_constraint_spec(const std::string& text);

/// Builds the constraint for channel ch. Minimal has no constraint set and throws.
ConstraintSet build_constraint(const ConstraintSpec& spec, const Channel& ch);

}  // namespace blindcrb
