#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include "blindcrb/fim.hpp"
#include "support.hpp"

using namespace blindcrb;
using namespace testing_support;

namespace {

Channel h1(Field f = Field::Real) {
    RMat c(2, 4);
    c << 0.9477, -1.1156, 1.1748, 1.6455, -0.5257, -1.5923, 0.4851, -0.4542;
    return Channel("H1", f, c.cast<Complex>());
}

MomentFn deterministic_moments(const Channel& ch, Index burst, double sv) {
    const Index na = burst + ch.length() - 1;
    const ParamLayout lay({ParamBlock{"A", ParamKind::Symbols, na, ch.field()},
                           ParamBlock{"h", ParamKind::Channel, ch.dim(), ch.field()}});
    const Index m = ch.m(), n = ch.length();
    return MomentFn{[=](const RVec& t) {
                        const CVec th = lay.from_real(t);
                        const CMat h = th.tail(m * n).reshaped(m, n);
                        return direct_output(h, th.head(na), burst);
                    },
                    [=](const RVec&) { return CMat(sv * CMat::Identity(m * burst, m * burst)); }};
}

// C(h, s) = sigma_a2 T(h) T(h)^H + s I, with T built by direct convolution.
MomentFn gaussian_moments(const Channel& ch, Index burst, double sa) {
    const ParamLayout lay({ParamBlock{"h", ParamKind::Channel, ch.dim(), ch.field()},
                           ParamBlock{"s", ParamKind::NoiseVariance, 1, Field::Real}});
    const Index m = ch.m(), n = ch.length(), na = burst + n - 1;
    return MomentFn{[=](const RVec&) { return CVec(CVec::Zero(m * burst)); },
                    [=](const RVec& t) {
                        const CVec th = lay.from_real(t);
                        const CMat h = th.head(m * n).reshaped(m, n);
                        CMat tm(m * burst, na);
                        for (Index k = 0; k < na; ++k) {
                            CVec e = CVec::Zero(na);
                            e(k) = 1.0;
                            tm.col(k) = direct_output(h, e, burst);
                        }
                        return CMat(sa * tm * tm.adjoint() + th(m * n).real() * CMat::Identity(m * burst, m * burst));
                    }};
}

RVec gaussian_theta(const Channel& ch, double sv) {
    RVec t(ch.field() == Field::Real ? ch.dim() + 1 : 2 * ch.dim() + 1);
    t << (ch.field() == Field::Real ? RVec(ch.stacked().real()) : realify_params(ch.stacked())), sv;
    return t;
}

}  // namespace

TEST_CASE("ParamLayout real coordinates") {
    const ParamLayout lay({ParamBlock{"a", ParamKind::Generic, 2, Field::Complex},
                           ParamBlock{"s", ParamKind::NoiseVariance, 1, Field::Real}});
    CHECK(lay.dim() == 3);
    CHECK(lay.realified().dim() == 5);
    CHECK(lay.offset("s") == 2);
    CHECK(lay.realified().offset("s") == 4);
    CVec th(3);
    th << Complex(1, 2), Complex(3, 4), 5.0;
    RVec expect(5);
    expect << 1, 3, 2, 4, 5;
    CHECK(lay.to_real(th) == expect);
    CHECK(lay.from_real(expect) == th);
    CHECK_THROWS_AS(lay.block("missing"), InvalidInput);
}

TEST_CASE("generic FIM: textbook models") {
    MomentStack loc;
    loc.mean = CVec::Zero(1);
    loc.cov = 0.25 * CMat::Identity(1, 1);
    loc.d_mean = {CVec::Ones(1)};
    CHECK(gaussian_fim_generic(loc, Field::Real).real(0, 0) == doctest::Approx(4.0));

    MomentStack cov;
    cov.mean = CVec::Zero(5);
    cov.cov = CMat::Identity(5, 5);
    cov.d_cov = {CMat::Identity(5, 5)};
    CHECK(gaussian_fim_generic(cov, Field::Real).real(0, 0) == doctest::Approx(2.5));

    MomentStack bad = cov;
    bad.cov = -CMat::Identity(5, 5);
    CHECK_THROWS_AS(gaussian_fim_generic(bad, Field::Real), InvalidInput);
}

TEST_CASE("generic FIM: elementwise real formula equals the closed form") {
    const Index p = 4, k = 3;
    const RMat b = random_real(p, p);
    const RMat c = b * b.transpose() + RMat::Identity(p, p);
    MomentStack st;
    st.mean = RVec::Zero(p).cast<Complex>();
    st.cov = c.cast<Complex>();
    RMat phi(p + p * p, k);  // stacked [dm; vec dC]
    for (Index i = 0; i < k; ++i) {
        const RVec dm = random_real(p, 1).col(0);
        const RMat s = random_real(p, p);
        const RMat dc = s + s.transpose();
        st.d_mean.push_back(dm.cast<Complex>());
        st.d_cov.push_back(dc.cast<Complex>());
        phi.col(i) << dm, dc.reshaped();
    }
    const RMat ci = c.inverse();
    RMat w = RMat::Zero(p + p * p, p + p * p);
    w.topLeftCorner(p, p) = ci;
    w.bottomRightCorner(p * p, p * p) = 0.5 * Eigen::kroneckerProduct(RMat(ci.transpose()), ci).eval();
    const RMat closed = phi.transpose() * w * phi;
    CHECK(rel_diff(gaussian_fim_generic(st, Field::Real).real, closed) < 1e-10);
}

TEST_CASE("generic FIM: complex model against the real-coordinate oracle") {
    const Index p = 3, k = 2;
    const CMat g = random_complex(p, k);
    const CMat c0h = random_complex(p, p);
    const CMat c0 = c0h * c0h.adjoint() + 4.0 * CMat::Identity(p, p);
    std::vector<CMat> bs;
    for (Index i = 0; i < k; ++i) bs.push_back(0.2 * random_complex(p, p));
    const CVec theta0 = 0.3 * random_complex(k, 1).col(0);
    auto cov = [&](const CVec& th) {
        CMat c = c0;
        for (Index i = 0; i < k; ++i) c += th(i) * bs[i] + std::conj(th(i)) * bs[i].adjoint();
        return c;
    };
    MomentStack st;
    st.mean = g * theta0;
    st.cov = cov(theta0);
    for (Index i = 0; i < k; ++i) {
        st.d_mean.push_back(g.col(i));
        st.d_cov.push_back(bs[i].adjoint());
    }
    const FimResult fim = gaussian_fim_generic(st, Field::Complex);
    REQUIRE(fim.cross.has_value());
    const MomentFn f{[&](const RVec& t) { return CVec(g * complexify_params(t)); },
                     [&](const RVec& t) { return cov(complexify_params(t)); }};
    CHECK(rel_diff(fim.real, fd_fim(f, realify_params(theta0), true)) < 1e-9);
}

TEST_CASE("deterministic FIM matches the oracle and has the blind null vector") {
    for (Field f : {Field::Real, Field::Complex}) {
        const Channel ch = random_channel(2, 3, f);
        const Index burst = 5;
        const SymbolBurst a = random_symbols(burst + 2, f);
        const FimResult fim = deterministic_fim(ch, a, 0.3, burst);
        CHECK_FALSE(fim.cross.has_value());
        CHECK(fim.model == Model::Deterministic);
        const MomentFn mf = deterministic_moments(ch, burst, 0.3);
        CVec th(a.size() + ch.dim());
        th << a.symbols, ch.stacked();
        CHECK(rel_diff(fim.real, fd_fim(mf, fim.layout.to_real(th), f == Field::Complex)) < 1e-10);
        CHECK(is_psd(fim.real));
        CHECK((fim.real - fim.real.transpose()).norm() < 1e-10 * fim.real.norm());

        CVec ts(th.size());
        ts << -a.symbols, ch.stacked();
        const CMat jn = fim.j.to_complex();
        CHECK((jn * ts).norm() < 1e-10 * jn.norm() * ts.norm());
    }
}

TEST_CASE("deterministic FIM for N=1, M=2 equals the hand-built Gram matrix") {
    CMat c(2, 1);
    c << 1.0, -2.0;
    const Channel ch = Channel::real("n1", c.real());
    const SymbolBurst a{(CVec(2) << 0.5, 1.5).finished(), Field::Real};
    // y = [h a0; h a1]: d/dA = blockdiag(h, h), d/dh = [a0 I; a1 I]
    RMat g = RMat::Zero(4, 4);
    g.block(0, 0, 2, 1) = c.real();
    g.block(2, 1, 2, 1) = c.real();
    g.block(0, 2, 2, 2) = 0.5 * RMat::Identity(2, 2);
    g.block(2, 2, 2, 2) = 1.5 * RMat::Identity(2, 2);
    CHECK(rel_diff(deterministic_fim(ch, a, 2.0, 2).real, g.transpose() * g / 2.0) < 1e-14);
}

TEST_CASE("deterministic H1: nullity and null directions") {
    const Index burst = 20;
    for (Field f : {Field::Real, Field::Complex}) {
        const Channel ch = h1(f);
        const SymbolBurst a = random_symbols(burst + 3, f);
        const FimResult fim = deterministic_fim(ch, a, 0.1, burst);
        const SingularityReport rep = analyze_singularities(fim, deterministic_predicted_nulls(ch, a));
        CHECK(rep.nullity == (f == Field::Real ? 1 : 2));
        CHECK(rep.rank + rep.nullity == fim.real.rows());
        for (const auto& m : rep.matches) CHECK(m.matched);
        // complex-parameter FIM has a single singularity
        if (f == Field::Complex) {
            Eigen::SelfAdjointEigenSolver<CMat> es(fim.j.as_complex());
            CHECK(es.eigenvalues()(0) < 1e-10 * es.eigenvalues().maxCoeff());
            CHECK(es.eigenvalues()(1) > 1e-6 * es.eigenvalues().maxCoeff());
        }
        const RMat jhh = real_view(deterministic_reduced_fim(ch, a, 0.1, burst).j);
        const SingularityReport red = analyze_singularities(jhh, channel_predicted_nulls(ch));
        CHECK(red.nullity == (f == Field::Real ? 1 : 2));
        for (const auto& m : red.matches) CHECK(m.matched);
    }
}

TEST_CASE("reduced deterministic FIM is the Schur complement onto h") {
    for (Field f : {Field::Real, Field::Complex}) {
        const Channel ch = random_channel(2, 3, f);
        const SymbolBurst a = random_symbols(10, f);
        const FimResult fim = deterministic_fim(ch, a, 0.2, 8);
        const ReducedFim red = deterministic_reduced_fim(ch, a, 0.2, 8);
        CHECK_FALSE(red.toeplitz_rank_deficient);
        const RMat schur = schur_reduce(fim, "h");
        CHECK(rel_diff(schur, real_view(red.j)) < 1e-9);
        const RMat jhh = real_view(red.j);
        const RVec hr = f == Field::Real ? RVec(ch.stacked().real()) : realify_params(ch.stacked());
        CHECK((jhh * hr).norm() < 1e-10 * jhh.norm() * hr.norm());
    }
}

TEST_CASE("reducible deterministic channel: nullity N_c of J_hh and null = range T_I") {
    const Channel ch = reducible_channel(random_real(2, 3).cast<Complex>(), monic({0.5}), Field::Real);
    const SymbolBurst a = random_symbols(20 + 3, Field::Real);
    const ReducedFim red = deterministic_reduced_fim(ch, a, 0.1, 20);
    CHECK(red.toeplitz_rank_deficient);  // common zero: T(h) loses column rank
    const SingularityReport rep = analyze_singularities(real_view(red.j));
    CHECK(rep.nullity == 2);
    const auto dec = reducible_decompose(ch);
    CHECK(subspace_distance<double>(rep.null_basis, ti_matrix(dec).real()) < 1e-8);
    CHECK(analyze_singularities(deterministic_fim(ch, a, 0.1, 20)).nullity == 3);
}

TEST_CASE("deterministic model decouples from sigma_v2") {
    const Channel ch = random_channel(2, 2, Field::Complex);
    const Index burst = 4, na = 5;
    const SymbolBurst a = random_symbols(na, Field::Complex);
    const double sv = 0.4;
    // extended parameter [A; h; sigma_v2]; complex stack, sigma_v2 real with derivative 1/2 I
    MomentStack st;
    st.mean = toeplitz_matrix(ch.coeffs(), burst) * a.symbols;
    st.cov = sv * CMat::Identity(8, 8);
    const CMat t = toeplitz_matrix(ch.coeffs(), burst), cal = commutativity_matrix(a.symbols, 2, 2, burst);
    for (Index i = 0; i < na; ++i) {
        st.d_mean.push_back(t.col(i));
        st.d_cov.push_back(CMat::Zero(8, 8));
    }
    for (Index i = 0; i < 4; ++i) {
        st.d_mean.push_back(cal.col(i));
        st.d_cov.push_back(CMat::Zero(8, 8));
    }
    st.d_mean.push_back(CVec::Zero(8));
    st.d_cov.push_back(0.5 * CMat::Identity(8, 8));
    const ParamLayout lay({ParamBlock{"A", ParamKind::Symbols, na, Field::Complex},
                           ParamBlock{"h", ParamKind::Channel, 4, Field::Complex},
                           ParamBlock{"s", ParamKind::NoiseVariance, 1, Field::Real}});
    const FimResult ext = gaussian_fim_generic(st, Field::Complex, lay);
    const Index n = ext.real.rows();
    CHECK(ext.real.col(n - 1).head(n - 1).norm() < 1e-10 * ext.real.norm());
    CHECK(rel_diff(ext.real.topLeftCorner(n - 1, n - 1), deterministic_fim(ch, a, sv, burst).real) < 1e-10);
}

TEST_CASE("Gaussian FIMs match the oracle") {
    for (Field f : {Field::Real, Field::Complex}) {
        const Channel ch = random_channel(2, 2, f);
        GaussianModelConfig cfg{1.3, 0.4, 4};
        const FimResult fim = gaussian_fim(ch, cfg);
        CHECK(fim.model == Model::Gaussian);
        CHECK(fim.cross.has_value() == (f == Field::Complex));
        const RMat oracle = fd_fim(gaussian_moments(ch, 4, 1.3), gaussian_theta(ch, 0.4), f == Field::Complex);
        CHECK(rel_diff(fim.real, oracle) < 1e-9);
        CHECK(is_psd(fim.real));
    }
    CHECK_THROWS_AS(gaussian_fim_complex(random_channel(2, 2, Field::Real), {}), InvalidInput);
    CHECK_THROWS_AS(gaussian_fim_real(random_channel(2, 2, Field::Complex), {}), InvalidInput);
    CHECK_THROWS_AS(gaussian_fim(random_channel(2, 2, Field::Real), GaussianModelConfig{1.0, 0.0, 4}), InvalidInput);
    CHECK(GaussianModelConfig{}.burst_for(random_channel(2, 3, Field::Real)) == 5);
}

TEST_CASE("complex Gaussian FIM: 1-singular with h_S2 in the reduced null space") {
    const Channel ch = random_channel(2, 4, Field::Complex);
    const GaussianModelConfig cfg{1.0, 0.1, 6};
    const FimResult fim = gaussian_fim_complex(ch, cfg);
    CHECK(analyze_singularities(fim).nullity == 1);
    const RMat jhh = schur_reduce(fim, "h");
    const SingularityReport rep = analyze_singularities(jhh, channel_predicted_nulls(ch));
    CHECK(rep.nullity == 1);
    CHECK_FALSE(rep.matches[0].matched);  // h_S1 (scale) is identifiable
    CHECK(rep.matches[1].matched);         // h_S2 (phase) is not

    // the null vector (h', s') satisfies sigma_a2 (T(h) T(h')^H + T(h') T(h)^H) + s' I = 0
    const RVec v = analyze_singularities(fim).null_basis.col(0);
    const ParamLayout lay = fim.layout;
    const CVec th = lay.from_real(v);
    const CMat hp = th.head(ch.dim()).reshaped(2, 4);
    const CMat t = toeplitz_matrix(ch.coeffs(), 6), tp = toeplitz_matrix(hp, 6);
    const CMat resid = cfg.sigma_a2 * (t * tp.adjoint() + tp * t.adjoint()) + th(ch.dim()).real() * CMat::Identity(12, 12);
    CHECK(resid.norm() < 1e-8 * t.squaredNorm());
}

TEST_CASE("real Gaussian FIM: regular, pair zero and monochannel singularities") {
    const Channel clean = random_channel(2, 4, Field::Real);
    CHECK(analyze_singularities(gaussian_fim_real(clean, {1.0, 0.1, 6})).nullity == 0);
    const Channel pair = reducible_channel(random_real(2, 2).cast<Complex>(), monic({0.5, 2.0}), Field::Real);
    CHECK(analyze_singularities(gaussian_fim_real(pair, {1.0, 0.1, 6})).nullity == 1);
    const Channel mono = random_channel(1, 3, Field::Real);
    const FimResult mf = gaussian_fim_real(mono, {1.0, 0.1, 6});
    CHECK(analyze_singularities(mf).nullity == 1);
}

TEST_CASE("schur_reduce") {
    const RMat b = random_real(5, 5);
    RMat bd = RMat::Zero(5, 5);
    bd.topLeftCorner(3, 3) = b.topLeftCorner(3, 3) * b.topLeftCorner(3, 3).transpose();
    bd.bottomRightCorner(2, 2) = RMat::Identity(2, 2);
    FimResult fim;
    fim.real = bd;
    fim.real_layout = ParamLayout({ParamBlock{"x", ParamKind::Generic, 3, Field::Real},
                                   ParamBlock{"y", ParamKind::Generic, 2, Field::Real}});
    CHECK(schur_reduce(fim, "x").isApprox(bd.topLeftCorner(3, 3)));
    fim.real.bottomRightCorner(2, 2).setZero();
    try {
        schur_reduce(fim, "x");
        FAIL("expected SingularFim");
    } catch (const SingularFim& e) {
        CHECK(std::string(e.what()).find("y") != std::string::npos);
    }
}

TEST_CASE("moments change quadratically along null directions") {
    const std::vector<double> eps = log_spaced(1e-5, 1e-2, 7);
    REQUIRE(eps.size() == 7);
    CHECK(eps.front() == doctest::Approx(1e-5));
    CHECK(eps.back() == doctest::Approx(1e-2));

    const Channel ch = random_channel(2, 3, Field::Complex);
    const SymbolBurst a = random_symbols(10, Field::Complex);
    const FimResult fim = deterministic_fim(ch, a, 0.1, 8);
    const SingularityReport rep = analyze_singularities(fim);
    REQUIRE(rep.nullity == 2);
    for (Index k = 0; k < rep.nullity; ++k) {
        CHECK(deterministic_perturbation_sweep(ch, a, 8, rep.null_basis.col(k), eps).slope >= 1.9);
    }
    RVec generic = random_real(fim.real.rows(), 1).col(0);
    CHECK(deterministic_perturbation_sweep(ch, a, 8, generic, eps).slope == doctest::Approx(1.0).epsilon(0.05));

    const GaussianModelConfig cfg{1.0, 0.2, 5};
    const FimResult g = gaussian_fim_complex(ch, cfg);
    const SingularityReport gr = analyze_singularities(g);
    REQUIRE(gr.nullity == 1);
    CHECK(gaussian_perturbation_sweep(ch, cfg, gr.null_basis.col(0), eps).slope >= 1.9);
}
