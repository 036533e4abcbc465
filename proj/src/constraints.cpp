#include "blindcrb/constraints.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "blindcrb/channel_io.hpp"

namespace blindcrb {

const char* to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::None: return "none";
        case ConstraintKind::Norm: return "norm";
        case ConstraintKind::Phase: return "phase";
        case ConstraintKind::KnownCoeff: return "known";
        case ConstraintKind::Linear: return "linear";
        case ConstraintKind::ReducibleTI: return "reducible-ti";
        case ConstraintKind::ReducibleProjector: return "reducible-proj";
        case ConstraintKind::Minimal: return "minimal";
        case ConstraintKind::Custom: return "custom";
    }
    return "?";
}

ConstraintSet ConstraintSet::from_jacobian(RMat jacobian, ConstraintKind kind, std::string label) {
    detail::require_finite(jacobian, "constraint jacobian");
    ConstraintSet cs;
    cs.kind = kind;
    cs.label = std::move(label);
    const Index n = jacobian.rows();
    if (jacobian.cols() == 0) {
        cs.tangent_basis = RMat::Identity(n, n);
    } else {
        const RMat range = range_basis<double>(jacobian);
        cs.dependent = range.cols() < jacobian.cols();
        cs.tangent_basis = range.cols() == 0 ? RMat::Identity(n, n) : null_space_basis<double>(RMat(range.transpose()));
    }
    cs.jacobian = std::move(jacobian);
    return cs;
}

ConstraintSet ConstraintSet::from_tangent(const RMat& tangent, ConstraintKind kind, std::string label) {
    ConstraintSet cs;
    cs.kind = kind;
    cs.label = std::move(label);
    cs.tangent_basis = range_basis<double>(tangent);
    cs.jacobian = null_space_basis<double>(RMat(cs.tangent_basis.transpose()));
    return cs;
}

ConstraintSet build_unconstrained(Index dim) {
    return ConstraintSet::from_jacobian(RMat(dim, 0), ConstraintKind::None, "none");
}

namespace {

void require_nonzero(const CVec& h, const char* what) {
    if (h.size() == 0 || h.isZero(0.0)) throw InvalidInput(std::string(what) + ": channel must be nonzero");
}

}  // namespace

ConstraintSet build_norm_constraint(const CVec& h, Field field, bool include_phase) {
    require_nonzero(h, "norm constraint");
    if (field == Field::Real) {
        RMat jac = 2.0 * h.real();
        return ConstraintSet::from_jacobian(jac, ConstraintKind::Norm, "norm");
    }
    RMat jac(2 * h.size(), include_phase ? 2 : 1);
    jac.col(0) = 2.0 * realify_params(h);
    if (include_phase) jac.col(1) = realify_params(Complex(0, 1) * h);
    return ConstraintSet::from_jacobian(jac, ConstraintKind::Norm, include_phase ? "norm+phase" : "norm");
}

ConstraintSet build_phase_constraint(const CVec& h, Field field) {
    require_nonzero(h, "phase constraint");
    if (field == Field::Real) throw InvalidInput("phase constraint requires a complex channel");
    RMat jac = realify_params(Complex(0, 1) * h);
    return ConstraintSet::from_jacobian(jac, ConstraintKind::Phase, "phase");
}

ConstraintSet build_known_coeff_constraint(const CVec& h, Index i, Field field) {
    const Index n = h.size();
    if (i < 0 || i >= n) {
        throw InvalidInput("known-coefficient index " + std::to_string(i) + " out of range [0, " + std::to_string(n) +
                           ")");
    }
    const Index dim = field == Field::Real ? n : 2 * n;
    RMat jac = RMat::Zero(dim, field == Field::Real ? 1 : 2);
    jac(i, 0) = 1.0;
    if (field == Field::Complex) jac(n + i, 1) = 1.0;
    ConstraintSet cs = ConstraintSet::from_jacobian(jac, ConstraintKind::KnownCoeff, "known:" + std::to_string(i + 1));
    cs.index = i;
    return cs;
}

ConstraintSet build_linear_constraint(const Mat& c, Field field) {
    if (c.cols() == 0) throw InvalidInput("linear constraint: C has no columns");
    if (field == Field::Real) {
        if (c.field() == Field::Complex && !c.as_complex().imag().isZero(0.0)) {
            throw InvalidInput("linear constraint: complex C for a real channel");
        }
        RMat jac = c.to_complex().real();
        return ConstraintSet::from_jacobian(jac, ConstraintKind::Linear, "linear");
    }
    const CMat cc = c.to_complex();
    RMat jac(2 * cc.rows(), 2 * cc.cols());
    for (Index k = 0; k < cc.cols(); ++k) {
        jac.col(2 * k) = realify_params(cc.col(k));
        jac.col(2 * k + 1) = realify_params(Complex(0, 1) * cc.col(k));
    }
    return ConstraintSet::from_jacobian(jac, ConstraintKind::Linear, "linear");
}

ConstraintSet build_reducible_constraints(const ReducibleDecomposition& dec, ReducibleVariant variant) {
    const CVec h = [&] {
        const CMat tc = tc_matrix(dec);
        return CVec(tc * dec.irreducible.stacked());
    }();
    const Field field = dec.irreducible.field();
    if (variant == ReducibleVariant::TI) {
        ConstraintSet cs = build_linear_constraint(Mat::complex(ti_matrix(dec)), field);
        cs.kind = ConstraintKind::ReducibleTI;
        cs.label = "reducible-ti";
        return cs;
    }
    const CMat tc = tc_matrix(dec);
    RMat range = field == Field::Real ? RMat(tc.real()) : realify_operator(tc);
    const ConstraintSet norm = build_norm_constraint(h, field, true);
    const RMat keep = complement_projector<double>(norm.jacobian) * projector<double>(range);
    ConstraintSet cs = ConstraintSet::from_tangent(keep, ConstraintKind::ReducibleProjector, "reducible-proj");
    return cs;
}

namespace {

double scale_of(const RMat& j) {
    Eigen::SelfAdjointEigenSolver<RMat> es((j + j.transpose()) / 2.0, Eigen::EigenvaluesOnly);
    return es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

CrbResult constrained_crb(const RMat& j, const ConstraintSet& cs) {
    if (j.rows() != j.cols()) throw InvalidInput("constrained_crb: FIM not square");
    if (cs.tangent_basis.rows() != j.rows()) {
        throw InvalidInput("constrained_crb: constraint dimension " + std::to_string(cs.tangent_basis.rows()) +
                           " does not match FIM dimension " + std::to_string(j.rows()));
    }
    CrbResult out;
    out.constraint = cs.label;
    const RMat& v = cs.tangent_basis;
    const Index n = j.rows();
    if (v.cols() == 0) {
        out.crb = RMat::Zero(n, n);
        out.trace = 0.0;
        out.bounded = true;
        return out;
    }
    const RMat k = v.transpose() * ((j + j.transpose()) / 2.0) * v;
    Eigen::SelfAdjointEigenSolver<RMat> es((k + k.transpose()) / 2.0);
    const double scale = scale_of(j);
    if (scale == 0.0 || es.eigenvalues().minCoeff() <= kFimRankTol * scale) {
        out.warning = "V^T J V is singular: a constraint is orthogonal to the FIM null space";
        return out;
    }
    const RMat kinv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    RMat crb = v * kinv * v.transpose();
    out.crb = (crb + crb.transpose()) / 2.0;
    out.trace = out.crb.trace();
    out.bounded = true;
    if (cs.dependent) out.warning = "dependent constraints";
    return out;
}

CrbResult constrained_crb(const FimResult& fim, const ConstraintSet& cs, const std::string& block) {
    const ParamLayout& lay = fim.real_layout;
    const Index off = lay.offset(block);
    const Index len = lay.block(block).length;
    if (cs.tangent_basis.rows() != len) {
        throw InvalidInput("constrained_crb: constraint dimension does not match block '" + block + "'");
    }
    const Index n = lay.dim();
    RMat jac = RMat::Zero(n, cs.jacobian.cols());
    jac.middleRows(off, len) = cs.jacobian;
    RMat v = RMat::Zero(n, n - len + cs.tangent_basis.cols());
    Index col = 0;
    for (Index r = 0; r < n; ++r) {
        if (r < off || r >= off + len) v(r, col++) = 1.0;
    }
    v.block(off, col, len, cs.tangent_basis.cols()) = cs.tangent_basis;
    ConstraintSet full = cs;
    full.jacobian = jac;
    full.tangent_basis = v;
    return constrained_crb(fim.real, full);
}

RMat constrained_crb_projector_form(const RMat& j, const RMat& a) {
    if (a.rows() != j.rows()) throw InvalidInput("constrained_crb_projector_form: dimension mismatch");
    const RMat k = a.transpose() * ((j + j.transpose()) / 2.0) * a;
    const RMat crb = a * pseudo_inverse<double>(RMat((k + k.transpose()) / 2.0), kFimRankTol) * a.transpose();
    return (crb + crb.transpose()) / 2.0;
}

CrbResult minimal_crb(const RMat& j) {
    if (j.rows() != j.cols()) throw InvalidInput("minimal_crb: FIM not square");
    CrbResult out;
    out.constraint = "minimal";
    const RMat p = pseudo_inverse<double>(RMat((j + j.transpose()) / 2.0), kFimRankTol);
    out.crb = (p + p.transpose()) / 2.0;
    out.trace = out.crb.trace();
    out.bounded = true;
    return out;
}

CrbResult gaussian_blind_crb(const Channel& ch, const GaussianModelConfig& cfg) {
    const FimResult fim = gaussian_fim(ch, cfg);
    RMat jhh;
    try {
        jhh = schur_reduce(fim, "h");
    } catch (const SingularFim& e) {
        CrbResult out;
        out.constraint = ch.field() == Field::Complex ? "phase" : "none";
        out.warning = e.what();
        return out;
    }
    const ConstraintSet cs = ch.field() == Field::Complex ? build_phase_constraint(ch.stacked(), ch.field())
                                                          : build_unconstrained(jhh.rows());
    CrbResult out = constrained_crb(jhh, cs);
    if (!out.bounded) {
        out.warning = "FIM has singularities beyond the blind phase ambiguity";
        return out;
    }
    out.crb = minimal_crb(jhh).crb;
    out.trace = out.crb.trace();
    return out;
}

RMat crb_block(const RMat& crb, const ParamLayout& real_layout, const std::string& block) {
    const Index off = real_layout.offset(block);
    const Index len = real_layout.block(block).length;
    return crb.block(off, off, len, len);
}

ConstraintSpec parse_constraint_spec(const std::string& text) {
    ConstraintSpec spec;
    spec.text = text;
    if (text == "norm") {
        spec.kind = ConstraintKind::Norm;
    } else if (text == "norm+phase") {
        spec.kind = ConstraintKind::Norm;
        spec.include_phase = true;
    } else if (text == "phase") {
        spec.kind = ConstraintKind::Phase;
    } else if (text == "reducible-ti") {
        spec.kind = ConstraintKind::ReducibleTI;
    } else if (text == "reducible-proj") {
        spec.kind = ConstraintKind::ReducibleProjector;
    } else if (text == "minimal") {
        spec.kind = ConstraintKind::Minimal;
    } else if (text.rfind("known:", 0) == 0) {
        const std::string num = text.substr(6);
        if (num.empty() || num.size() > 9 ||
            !std::all_of(num.begin(), num.end(), [](unsigned char c) { return std::isdigit(c); })) {
            throw ParseError("constraint '" + text + "': expected known:<positive integer>");
        }
        const long i = std::stol(num);
        if (i < 1) throw ParseError("constraint '" + text + "': coefficient indices start at 1");
        spec.kind = ConstraintKind::KnownCoeff;
        spec.index = i - 1;
    } else if (text.rfind("linear:", 0) == 0) {
        spec.kind = ConstraintKind::Linear;
        spec.path = text.substr(7);
        if (spec.path.empty()) throw ParseError("constraint '" + text + "': missing matrix file");
    } else {
        throw ParseError("unknown constraint '" + text +
                         "' (expected norm, phase, norm+phase, known:i, linear:<file>, reducible-ti, reducible-proj, "
                         "minimal)");
    }
    return spec;
}

ConstraintSet build_constraint(const ConstraintSpec& spec, const Channel& ch) {
    const CVec h = ch.stacked();
    switch (spec.kind) {
        case ConstraintKind::Norm: {
            // "norm" on a complex channel leaves the phase free
            ConstraintSet cs = build_norm_constraint(h, ch.field(), spec.include_phase);
            if (ch.field() == Field::Real) cs.label = spec.text;
            return cs;
        }
        case ConstraintKind::Phase: return build_phase_constraint(h, ch.field());
        case ConstraintKind::KnownCoeff: return build_known_coeff_constraint(h, spec.index, ch.field());
        case ConstraintKind::Linear: {
            const Mat c = load_matrix(spec.path);
            if (c.rows() != ch.dim()) {
                throw InvalidInput("linear constraint: matrix has " + std::to_string(c.rows()) + " rows, channel has " +
                                   std::to_string(ch.dim()) + " coefficients");
            }
            ConstraintSet cs = build_linear_constraint(c, ch.field());
            cs.label = spec.text;
            return cs;
        }
        case ConstraintKind::ReducibleTI:
        case ConstraintKind::ReducibleProjector:
            return build_reducible_constraints(reducible_decompose(ch), spec.kind == ConstraintKind::ReducibleTI
                                                                            ? ReducibleVariant::TI
                                                                            : ReducibleVariant::Projector);
        default: throw InvalidInput("constraint '" + spec.text + "' has no constraint set");
    }
}

}  // namespace blindcrb
