#include "blindcrb/fim.hpp"

#include <cmath>

namespace blindcrb {

const char* to_string(Model model) {
    switch (model) {
        case Model::Deterministic: return "deterministic";
        case Model::Gaussian: return "gaussian";
        case Model::Generic: return "generic";
    }
    return "?";
}

// ---------------------------------------------------------------- layout

Index ParamLayout::dim() const {
    Index n = 0;
    for (const auto& b : blocks_) n += b.length;
    return n;
}

const ParamBlock& ParamLayout::block(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return b;
    }
    throw InvalidInput("ParamLayout: no block named '" + name + "'");
}

Index ParamLayout::offset(const std::string& name) const {
    Index off = 0;
    for (const auto& b : blocks_) {
        if (b.name == name) return off;
        off += b.length;
    }
    throw InvalidInput("ParamLayout: no block named '" + name + "'");
}

bool ParamLayout::has(const std::string& name) const {
    for (const auto& b : blocks_) {
        if (b.name == name) return true;
    }
    return false;
}

ParamLayout ParamLayout::realified() const {
    std::vector<ParamBlock> out;
    for (auto b : blocks_) {
        if (b.field == Field::Complex) b.length *= 2;
        b.field = Field::Real;
        out.push_back(std::move(b));
    }
    return ParamLayout(std::move(out));
}

RVec ParamLayout::to_real(const CVec& theta) const {
    if (theta.size() != dim()) throw InvalidInput("ParamLayout::to_real: dimension mismatch");
    RVec out(realified().dim());
    Index src = 0, dst = 0;
    for (const auto& b : blocks_) {
        const CVec seg = theta.segment(src, b.length);
        if (b.field == Field::Complex) {
            out.segment(dst, b.length) = seg.real();
            out.segment(dst + b.length, b.length) = seg.imag();
            dst += 2 * b.length;
        } else {
            out.segment(dst, b.length) = seg.real();
            dst += b.length;
        }
        src += b.length;
    }
    return out;
}

CVec ParamLayout::from_real(const RVec& theta_r) const {
    if (theta_r.size() != realified().dim()) throw InvalidInput("ParamLayout::from_real: dimension mismatch");
    CVec out(dim());
    Index src = 0, dst = 0;
    for (const auto& b : blocks_) {
        if (b.field == Field::Complex) {
            for (Index i = 0; i < b.length; ++i) out(dst + i) = Complex(theta_r(src + i), theta_r(src + b.length + i));
            src += 2 * b.length;
        } else {
            out.segment(dst, b.length) = theta_r.segment(src, b.length).cast<Complex>();
            src += b.length;
        }
        dst += b.length;
    }
    return out;
}

namespace {

// realify_fim orders coordinates [Re theta; Im theta] over the whole vector;
// regroup them per block and drop Im of blocks that are real-valued.
RMat regroup_realified(const RMat& full, const ParamLayout& layout) {
    const Index n = layout.dim();
    std::vector<Index> idx;
    Index off = 0;
    for (const auto& b : layout.blocks()) {
        for (Index i = 0; i < b.length; ++i) idx.push_back(off + i);
        if (b.field == Field::Complex) {
            for (Index i = 0; i < b.length; ++i) idx.push_back(n + off + i);
        }
        off += b.length;
    }
    const auto k = static_cast<Index>(idx.size());
    RMat out(k, k);
    for (Index r = 0; r < k; ++r) {
        for (Index c = 0; c < k; ++c) out(r, c) = full(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    }
    return out;
}

template <typename M>
M hermitian_part(const M& a) {
    return (a + a.adjoint()) / 2.0;
}

// tr(X Y) without forming the product.
Complex trace_of_product(const CMat& x, const CMat& y) {
    return (x.transpose().cwiseProduct(y)).sum();
}

ParamLayout default_layout(Index k, Field field) {
    return ParamLayout({ParamBlock{"theta", ParamKind::Generic, k, field}});
}

}  // namespace

Index MomentStack::params() const {
    return static_cast<Index>(std::max(d_mean.size(), d_cov.size()));
}

FimResult gaussian_fim_generic(const MomentStack& stack, Field field, std::optional<ParamLayout> layout) {
    const Index k = stack.params();
    const Index p = stack.cov.rows();
    if (stack.cov.cols() != p) throw InvalidInput("gaussian_fim_generic: covariance not square");
    if (!stack.d_mean.empty() && static_cast<Index>(stack.d_mean.size()) != k) {
        throw InvalidInput("gaussian_fim_generic: mean jacobian count mismatch");
    }
    if (!stack.d_cov.empty() && static_cast<Index>(stack.d_cov.size()) != k) {
        throw InvalidInput("gaussian_fim_generic: covariance jacobian count mismatch");
    }
    for (const auto& d : stack.d_mean) {
        if (d.size() != p) throw InvalidInput("gaussian_fim_generic: mean jacobian has wrong length");
    }
    for (const auto& d : stack.d_cov) {
        if (d.rows() != p || d.cols() != p) throw InvalidInput("gaussian_fim_generic: covariance jacobian has wrong size");
    }
    ParamLayout lay = layout.value_or(default_layout(k, field));
    if (lay.dim() != k) throw InvalidInput("gaussian_fim_generic: layout dimension mismatch");

    Eigen::LDLT<CMat> ldlt(hermitian_part(stack.cov));
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().real().minCoeff() <= 0.0) {
        throw InvalidInput("gaussian_fim_generic: covariance is not positive definite");
    }
    const CMat cinv = ldlt.solve(CMat::Identity(p, p));

    std::vector<CMat> w(stack.d_cov.size()), wh(stack.d_cov.size());
    for (std::size_t i = 0; i < stack.d_cov.size(); ++i) {
        w[i] = cinv * stack.d_cov[i];
        wh[i] = cinv * stack.d_cov[i].adjoint();
    }
    std::vector<CVec> cm(stack.d_mean.size());
    for (std::size_t i = 0; i < stack.d_mean.size(); ++i) cm[i] = cinv * stack.d_mean[i];

    FimResult out;
    out.model = Model::Generic;
    out.field = field;
    out.layout = lay;
    out.real_layout = lay.realified();

    if (field == Field::Real) {
        RMat j = RMat::Zero(k, k);
        for (Index a = 0; a < k; ++a) {
            for (Index b = a; b < k; ++b) {
                double v = 0.0;
                if (!cm.empty()) v += stack.d_mean[a].dot(cm[b]).real();
                if (!w.empty()) v += 0.5 * trace_of_product(w[a], w[b]).real();
                j(a, b) = j(b, a) = v;
            }
        }
        out.j = Mat::real(j);
        out.real = j;
        return out;
    }

    CMat j = CMat::Zero(k, k), jc = CMat::Zero(k, k);
    for (Index a = 0; a < k; ++a) {
        for (Index b = 0; b < k; ++b) {
            Complex v = 0.0, vc = 0.0;
            if (!cm.empty()) {
                // holomorphic mean: no contribution to J_theta_theta*
                v += stack.d_mean[a].dot(cm[b]);
            }
            if (!w.empty()) {
                v += trace_of_product(w[a], wh[b]);
                vc += trace_of_product(w[a], w[b]);
            }
            j(a, b) = v;
            jc(a, b) = vc;
        }
    }
    j = hermitian_part(j);
    jc = (jc + jc.transpose()) / 2.0;
    out.j = Mat::complex(j);
    out.cross = jc;
    out.real = regroup_realified(realify_fim(j, jc), lay);
    return out;
}

// ---------------------------------------------------------------- deterministic

namespace {

void check_burst(const Channel& ch, const SymbolBurst& a, Index burst) {
    if (burst < 1) throw InvalidInput("burst length M must be >= 1");
    if (a.size() != burst + ch.length() - 1) throw InvalidInput("symbol burst length must be M+N-1");
    if (a.field != ch.field()) throw InvalidInput("symbol burst and channel must share a field");
    if (a.field == Field::Real && !a.symbols.imag().isZero(0.0)) {
        throw InvalidInput("real symbol burst with imaginary part");
    }
}

ParamLayout deterministic_layout(const Channel& ch, Index burst) {
    return ParamLayout({ParamBlock{"A", ParamKind::Symbols, burst + ch.length() - 1, ch.field()},
                        ParamBlock{"h", ParamKind::Channel, ch.dim(), ch.field()}});
}

ParamLayout gaussian_layout(const Channel& ch) {
    return ParamLayout({ParamBlock{"h", ParamKind::Channel, ch.dim(), ch.field()},
                        ParamBlock{"sigma_v2", ParamKind::NoiseVariance, 1, Field::Real}});
}

}  // namespace

FimResult deterministic_fim(const Channel& ch, const SymbolBurst& a, double sigma_v2, Index burst) {
    check_burst(ch, a, burst);
    if (!(sigma_v2 > 0.0)) throw InvalidInput("deterministic_fim: sigma_v2 must be > 0");
    const CMat t = toeplitz_matrix(ch.coeffs(), burst);
    const CMat calA = commutativity_matrix(a.symbols, ch.m(), ch.length(), burst);
    CMat g(t.rows(), t.cols() + calA.cols());
    g << t, calA;
    const CMat j = hermitian_part(CMat(g.adjoint() * g)) / sigma_v2;

    FimResult out;
    out.model = Model::Deterministic;
    out.field = ch.field();
    out.layout = deterministic_layout(ch, burst);
    out.real_layout = out.layout.realified();
    if (ch.field() == Field::Real) {
        out.j = Mat::real(j.real());
        out.real = j.real();
    } else {
        out.j = Mat::complex(j);
        out.real = regroup_realified(realify_fim(j, CMat::Zero(j.rows(), j.cols())), out.layout);
    }
    return out;
}

ReducedFim deterministic_reduced_fim(const Channel& ch, const SymbolBurst& a, double sigma_v2, Index burst) {
    check_burst(ch, a, burst);
    if (!(sigma_v2 > 0.0)) throw InvalidInput("deterministic_reduced_fim: sigma_v2 must be > 0");
    const CMat t = toeplitz_matrix(ch.coeffs(), burst);
    const CMat calA = commutativity_matrix(a.symbols, ch.m(), ch.length(), burst);
    ReducedFim out;
    out.toeplitz_rank_deficient = numerical_rank<Complex>(t) < t.cols();
    const CMat j = hermitian_part(CMat(calA.adjoint() * complement_projector<Complex>(t) * calA)) / sigma_v2;
    if (ch.field() == Field::Real) {
        out.j = Mat::real(j.real());
    } else {
        out.j = Mat::complex(j);
    }
    return out;
}

// ---------------------------------------------------------------- Gaussian

CMat gaussian_covariance(const Channel& ch, const GaussianModelConfig& cfg) {
    const CMat t = toeplitz_matrix(ch.coeffs(), cfg.burst_for(ch));
    return cfg.sigma_a2 * t * t.adjoint() + cfg.sigma_v2 * CMat::Identity(t.rows(), t.rows());
}

namespace {

void check_config(const GaussianModelConfig& cfg) {
    if (!(cfg.sigma_a2 > 0.0) || !(cfg.sigma_v2 > 0.0)) throw InvalidInput("Gaussian model: variances must be > 0");
    if (cfg.burst < 0) throw InvalidInput("Gaussian model: burst length must be >= 1");
}

}  // namespace

FimResult gaussian_fim_complex(const Channel& ch, const GaussianModelConfig& cfg) {
    if (ch.field() != Field::Complex) throw InvalidInput("gaussian_fim_complex: channel must be complex");
    check_config(cfg);
    const Index burst = cfg.burst_for(ch);
    const CMat t = toeplitz_matrix(ch.coeffs(), burst);
    MomentStack stack;
    stack.mean = CVec::Zero(t.rows());
    stack.cov = gaussian_covariance(ch, cfg);
    for (Index i = 0; i < ch.dim(); ++i) {
        const CMat te = toeplitz_matrix(unit_channel(ch.m(), ch.length(), i), burst);
        stack.d_cov.push_back(cfg.sigma_a2 * t * te.adjoint());
    }
    // sigma_v2 is real: its derivative with respect to the conjugate is half the real one
    stack.d_cov.push_back(0.5 * CMat::Identity(t.rows(), t.rows()));

    FimResult out = gaussian_fim_generic(stack, Field::Complex, gaussian_layout(ch));
    out.model = Model::Gaussian;
    return out;
}

FimResult gaussian_fim_real(const Channel& ch, const GaussianModelConfig& cfg) {
    if (ch.field() != Field::Real) throw InvalidInput("gaussian_fim_real: channel must be real");
    check_config(cfg);
    const Index burst = cfg.burst_for(ch);
    const CMat t = toeplitz_matrix(ch.coeffs(), burst);
    MomentStack stack;
    stack.mean = CVec::Zero(t.rows());
    stack.cov = gaussian_covariance(ch, cfg);
    for (Index i = 0; i < ch.dim(); ++i) {
        const CMat te = toeplitz_matrix(unit_channel(ch.m(), ch.length(), i), burst);
        stack.d_cov.push_back(cfg.sigma_a2 * (t * te.transpose() + te * t.transpose()));
    }
    stack.d_cov.push_back(CMat::Identity(t.rows(), t.rows()));

    FimResult out = gaussian_fim_generic(stack, Field::Real, gaussian_layout(ch));
    out.model = Model::Gaussian;
    return out;
}

FimResult gaussian_fim(const Channel& ch, const GaussianModelConfig& cfg) {
    return ch.field() == Field::Complex ? gaussian_fim_complex(ch, cfg) : gaussian_fim_real(ch, cfg);
}

// ---------------------------------------------------------------- reductions

RMat real_view(const Mat& j) {
    if (j.field() == Field::Real) return j.as_real();
    const CMat& c = j.as_complex();
    return realify_fim(c, CMat::Zero(c.rows(), c.cols()));
}

RMat schur_reduce(const FimResult& fim, const std::string& keep) {
    const ParamLayout& lay = fim.real_layout;
    const Index off = lay.offset(keep);
    const Index len = lay.block(keep).length;
    std::vector<Index> rest;
    std::string nuisance;
    Index pos = 0;
    for (const auto& b : lay.blocks()) {
        if (b.name != keep) {
            for (Index i = 0; i < b.length; ++i) rest.push_back(pos + i);
            nuisance += (nuisance.empty() ? "" : ", ") + b.name;
        }
        pos += b.length;
    }
    if (rest.empty()) return fim.real;

    const auto r = static_cast<Index>(rest.size());
    RMat j12(len, r), j22(r, r);
    for (Index a = 0; a < r; ++a) {
        const Index ra = rest[static_cast<std::size_t>(a)];
        for (Index i = 0; i < len; ++i) j12(i, a) = fim.real(off + i, ra);
        for (Index b = 0; b < r; ++b) j22(a, b) = fim.real(ra, rest[static_cast<std::size_t>(b)]);
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(j22);
    const double lmax = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
    if (lmax == 0.0 || es.eigenvalues().minCoeff() <= kFimRankTol * std::max(lmax, fim.real.norm())) {
        throw SingularFim("schur_reduce: nuisance block [" + nuisance + "] is singular");
    }
    const RMat j11 = fim.real.block(off, off, len, len);
    const RMat reduced = j11 - j12 * es.operatorInverseSqrt() * es.operatorInverseSqrt() * j12.transpose();
    return (reduced + reduced.transpose()) / 2.0;
}

SingularityReport analyze_singularities(const RMat& j, const std::vector<NamedVector>& predicted, double tol) {
    if (j.rows() != j.cols()) throw InvalidInput("analyze_singularities: FIM not square");
    const Index n = j.rows();
    SingularityReport rep;
    Eigen::SelfAdjointEigenSolver<RMat> es((j + j.transpose()) / 2.0);
    const RVec& ev = es.eigenvalues();
    const double lmax = n > 0 ? ev.cwiseAbs().maxCoeff() : 0.0;
    Index nullity = 0;
    for (Index i = 0; i < n; ++i) {
        if (ev(i) <= tol * lmax) ++nullity;
    }
    rep.nullity = nullity;
    rep.rank = n - nullity;
    rep.null_basis = es.eigenvectors().leftCols(nullity);
    rep.relative_gap = (nullity < n && lmax > 0) ? ev(nullity) / lmax : 0.0;
    for (const auto& p : predicted) {
        if (p.vector.size() != n) throw InvalidInput("analyze_singularities: predicted vector '" + p.name + "' has wrong size");
        const double angle = principal_angle(p.vector, rep.null_basis);
        rep.matches.push_back(PredictedMatch{p.name, angle, angle < kNullAngleMatch});
    }
    return rep;
}

SingularityReport analyze_singularities(const FimResult& fim, const std::vector<NamedVector>& predicted, double tol) {
    return analyze_singularities(fim.real, predicted, tol);
}

// ---------------------------------------------------------------- moments

CVec deterministic_mean(const Channel& ch, const SymbolBurst& a, Index burst) {
    return toeplitz_matrix(ch.coeffs(), burst) * a.symbols;
}

std::vector<NamedVector> deterministic_predicted_nulls(const Channel& ch, const SymbolBurst& a) {
    const Index burst = a.size() - ch.length() + 1;
    const ParamLayout lay = deterministic_layout(ch, burst);
    CVec theta_s(lay.dim());
    theta_s << -a.symbols, ch.stacked();
    std::vector<NamedVector> out{{"theta_s", lay.to_real(theta_s)}};
    if (ch.field() == Field::Complex) out.push_back({"j*theta_s", lay.to_real(Complex(0, 1) * theta_s)});
    return out;
}

std::vector<NamedVector> channel_predicted_nulls(const Channel& ch) {
    const CVec h = ch.stacked();
    if (ch.field() == Field::Real) return {{"h_S1", h.real()}};
    return {{"h_S1", realify_params(h)}, {"h_S2", realify_params(Complex(0, 1) * h)}};
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out;
    if (count < 2) return {lo};
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
    return out;
}

namespace {

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

PerturbationSweep deterministic_perturbation_sweep(const Channel& ch, const SymbolBurst& a, Index burst,
                                                   const RVec& direction, const std::vector<double>& eps) {
    const ParamLayout lay = deterministic_layout(ch, burst);
    const CVec d = lay.from_real(direction);
    const Index na = a.size();
    const CVec base = deterministic_mean(ch, a, burst);
    PerturbationSweep out;
    out.eps = eps;
    for (double e : eps) {
        SymbolBurst ap{a.symbols + e * d.head(na), a.field};
        const Channel cp = Channel::from_stacked(ch.name(), ch.field(), ch.stacked() + e * d.tail(ch.dim()), ch.m());
        out.change.push_back((deterministic_mean(cp, ap, burst) - base).norm());
    }
    out.slope = loglog_slope(out.eps, out.change);
    return out;
}

PerturbationSweep gaussian_perturbation_sweep(const Channel& ch, const GaussianModelConfig& cfg, const RVec& direction,
                                              const std::vector<double>& eps) {
    const ParamLayout lay = gaussian_layout(ch);
    const CVec d = lay.from_real(direction);
    const CMat base = gaussian_covariance(ch, cfg);
    PerturbationSweep out;
    out.eps = eps;
    for (double e : eps) {
        const Channel cp = Channel::from_stacked(ch.name(), ch.field(), ch.stacked() + e * d.head(ch.dim()), ch.m());
        GaussianModelConfig cp_cfg = cfg;
        cp_cfg.burst = cfg.burst_for(ch);
        cp_cfg.sigma_v2 = cfg.sigma_v2 + e * d(ch.dim()).real();
        out.change.push_back((gaussian_covariance(cp, cp_cfg) - base).norm());
    }
    out.slope = loglog_slope(out.eps, out.change);
    return out;
}

}  // namespace blindcrb
