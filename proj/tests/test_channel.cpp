#include <doctest.h>

#include <algorithm>

#include "blindcrb/channel.hpp"
#include "blindcrb/channel_io.hpp"
#include "blindcrb/polynomial.hpp"
#include "support.hpp"

using namespace blindcrb;
using namespace testing_support;

namespace {

// Greedy set match of two root lists; returns the worst pairing distance.
double root_set_distance(const CVec& a, const std::vector<Complex>& b) {
    if (a.size() != static_cast<Index>(b.size())) return INFINITY;
    std::vector<bool> used(b.size(), false);
    double worst = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        double best = INFINITY;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (!used[k] && std::abs(a(i) - b[k]) < best) {
                best = std::abs(a(i) - b[k]);
                arg = k;
            }
        }
        used[arg] = true;
        worst = std::max(worst, best);
    }
    return worst;
}

Channel h1() {
    RMat c(2, 4);
    c << 0.9477, -1.1156, 1.1748, 1.6455, -0.5257, -1.5923, 0.4851, -0.4542;
    return Channel::real("H1", c);
}

Channel h2() {
    RMat c(2, 4);
    c << 1.0, 0.5, -0.15, 0.0695, 1.5, -0.95, 0.305, 0.055;
    return Channel::real("H2", c);
}

}  // namespace

TEST_CASE("polynomial roots round-trip") {
    for (int deg = 1; deg <= 8; ++deg) {
        std::vector<Complex> r;
        for (int k = 0; k < deg; ++k) r.emplace_back(randn(), randn());
        const CVec p = monic(r);
        const CVec found = poly::roots(p);
        CHECK(root_set_distance(found, r) < 1e-6);
        const CVec rebuilt = poly::from_roots(found);
        CHECK((rebuilt - p).norm() / p.norm() < 1e-8);
    }
    CVec lin(2);
    lin << 1.0, -0.5;
    CHECK(std::abs(poly::roots(lin)(0) - 0.5) < 1e-14);
    CVec with_zeros(4);
    with_zeros << 0.0, 1.0, -2.0, 0.0;  // z^{-1} (1 - 2 z^{-1}): one finite nonzero root
    const CVec rz = poly::roots(with_zeros);
    REQUIRE(rz.size() == 1);
    CHECK(std::abs(rz(0) - 2.0) < 1e-12);
    CHECK(poly::roots(CVec::Ones(1)).size() == 0);
}

TEST_CASE("convolution and deconvolution") {
    const CVec a = random_complex(4, 1).col(0), b = random_complex(3, 1).col(0);
    CHECK((poly::convolve(a, b) - conv(a, b)).norm() < 1e-13);
    CHECK((poly::convolution_matrix(a, 3) * b - conv(a, b)).norm() < 1e-13);
    const poly::Deconvolution d = poly::deconvolve(conv(a, b), b);
    CHECK((d.quotient - a).norm() < 1e-10);
    CHECK(d.relative_residual < 1e-12);
    CVec y = conv(a, b);
    y(0) += 1.0;
    CHECK(poly::deconvolve(y, b).relative_residual > 1e-3);
}

TEST_CASE("channel validation and accessors") {
    CHECK_THROWS_AS(Channel::real("z", RMat::Zero(2, 3)), InvalidInput);
    CMat bad = CMat::Ones(2, 2);
    bad(0, 0) = Complex(1, 1);
    CHECK_THROWS_AS(Channel("bad", Field::Real, bad), InvalidInput);
    CMat inf = CMat::Ones(1, 2);
    inf(0, 1) = Complex(INFINITY, 0);
    CHECK_THROWS_AS(Channel("inf", Field::Complex, inf), InvalidInput);

    const Channel ch = h1();
    CHECK(ch.m() == 2);
    CHECK(ch.length() == 4);
    const CVec h = ch.stacked();
    CHECK(h(0) == Complex(0.9477));
    CHECK(h(1) == Complex(-0.5257));
    CHECK(h(2) == Complex(-1.1156));
    const Channel back = Channel::from_stacked("b", Field::Real, h, 2);
    CHECK(back.coeffs() == ch.coeffs());
}

TEST_CASE("block Toeplitz operator performs the convolution") {
    CMat c(2, 1);
    c << 1.0, 2.0;
    const CMat t = toeplitz_matrix(c, 3);
    CHECK(t.rows() == 6);
    CHECK(t.cols() == 3);
    const CVec a = random_complex(3, 1).col(0);
    CHECK((t * a - direct_output(c, a, 3)).norm() < 1e-14);

    const Channel ch = h2();
    const CMat t2 = toeplitz_matrix(ch.coeffs(), 8);
    CHECK(t2.rows() == 16);
    CHECK(t2.cols() == 11);
    const CVec a2 = random_real(11, 1).cast<Complex>().col(0);
    CHECK((t2 * a2 - direct_output(ch.coeffs(), a2, 8)).norm() < 1e-13);
    CHECK(toeplitz_op(ch, 8).field() == Field::Real);
}

TEST_CASE("commutativity identity T(h) A = calA h") {
    for (int trial = 0; trial < 200; ++trial) {
        const Field f = trial % 2 ? Field::Complex : Field::Real;
        const Index m = 1 + trial % 3, n = 1 + (trial / 3) % 4, burst = 1 + (trial / 12) % 7;
        const Channel ch = random_channel(m, n, f);
        const SymbolBurst a = random_symbols(burst + n - 1, f);
        const CVec lhs = toeplitz_matrix(ch.coeffs(), burst) * a.symbols;
        const CVec rhs = commutativity_matrix(a.symbols, m, n, burst) * ch.stacked();
        CHECK((lhs - rhs).norm() < 1e-10 * std::max(1.0, lhs.norm()));
    }
    // constant input: each output block is sum_i h(i)
    const Channel ch = random_channel(2, 3, Field::Complex);
    const CVec y = commutativity_matrix(CVec::Ones(7), 2, 3, 5) * ch.stacked();
    const CVec total = ch.coeffs().rowwise().sum();
    for (Index r = 0; r < 5; ++r) CHECK((y.segment(r * 2, 2) - total).norm() < 1e-13);
    CHECK_THROWS_AS(commutativity_matrix(CVec::Ones(6), 2, 3, 5), InvalidInput);
    CHECK(commutativity_op(SymbolBurst{CVec::Ones(7), Field::Real}, 2, 3, 5).field() == Field::Real);
}

TEST_CASE("realify_channel interleaves Re/Im per subchannel") {
    CMat c(1, 2);
    c << Complex(1, 1), Complex(2, 0);
    const Channel r = realify_channel(Channel::complex("c", c));
    CHECK(r.field() == Field::Real);
    RMat expect(2, 2);
    expect << 1, 2, 1, 0;
    CHECK(r.coeffs().real() == expect);
    CMat j(1, 1);
    j << Complex(0, 1);
    CHECK(realify_channel(Channel::complex("j", j)).coeffs().real() == (RMat(2, 1) << 0, 1).finished());
    CHECK(realify_channel(h1()).coeffs() == h1().coeffs());

    // noise-free outputs agree for real symbols
    const Channel ch = random_channel(2, 3, Field::Complex);
    const CVec a = random_real(8, 1).cast<Complex>().col(0);
    const CVec yc = toeplitz_matrix(ch.coeffs(), 6) * a;
    const CVec yr = toeplitz_matrix(realify_channel(ch).coeffs(), 6) * a;
    for (Index k = 0; k < yc.size(); ++k) {
        CHECK(std::abs(yr(2 * k) - yc(k).real()) < 1e-13);
        CHECK(std::abs(yr(2 * k + 1) - yc(k).imag()) < 1e-13);
    }
}

TEST_CASE("zeros and common zeros") {
    CMat c(2, 2);
    c << 1, -0.5, 1, -0.5;
    const CVec cz = common_zeros(Channel::complex("c", c));
    REQUIRE(cz.size() == 1);
    CHECK(std::abs(cz(0) - 0.5) < 1e-10);
    c << 1, -0.5, 1, -2;
    CHECK(common_zeros(Channel::complex("c", c)).size() == 0);
    CHECK(common_zeros(h1()).size() == 0);
    CHECK(subchannel_zeros(h1()).size() == 2);
    CHECK(subchannel_zeros(h1())[0].size() == 3);
    CHECK(subchannel_zeros(Channel::real("n1", RMat::Ones(2, 1)))[0].size() == 0);
}

TEST_CASE("reducible decomposition recovers the common factor") {
    const auto irr = reducible_decompose(h1());
    CHECK(irr.n_c() == 1);
    CHECK(irr.monic(0) == Complex(1.0));
    CHECK((irr.irreducible.coeffs() - h1().coeffs()).norm() < 1e-12);
    CHECK(tc_matrix(irr).isApprox(CMat::Identity(8, 8)));

    const CMat hi = random_real(2, 3).cast<Complex>();
    const Channel one = reducible_channel(hi, monic({0.5}), Field::Real);
    const auto d1 = reducible_decompose(one);
    REQUIRE(d1.n_c() == 2);
    CHECK(std::abs(d1.monic(1) + 0.5) < 1e-8);
    CHECK((d1.irreducible.coeffs() - hi).norm() < 1e-8);

    const Channel two = reducible_channel(random_real(2, 3).cast<Complex>(), monic({0.5, -0.3}), Field::Real);
    const auto d2 = reducible_decompose(two);
    REQUIRE(d2.n_c() == 3);
    CHECK(root_set_distance(d2.common_zeros, {0.5, -0.3}) < 1e-8);
    CHECK(d2.residual < 1e-10);
}

TEST_CASE("T_c and T_I rebuild h; Toeplitz factorisation") {
    for (Field f : {Field::Real, Field::Complex}) {
        const CMat hi = random_coeffs(3, 3, f);
        const CVec hc = monic({0.5, f == Field::Complex ? Complex(0.2, 0.7) : Complex(-0.4)});
        const Channel ch = reducible_channel(hi, hc, f);
        const auto dec = reducible_decompose(ch);
        REQUIRE(dec.n_c() == 3);
        const CVec h = ch.stacked();
        CHECK((tc_matrix(dec) * dec.irreducible.stacked() - h).norm() < 1e-12 * h.norm());
        CHECK((ti_matrix(dec) * dec.monic - h).norm() < 1e-12 * h.norm());
        const Index burst = 6;
        const CMat t = toeplitz_matrix(ch.coeffs(), burst);
        const CMat ti = toeplitz_matrix(dec.irreducible.coeffs(), burst);
        const CMat tcz = toeplitz_matrix(dec.monic.transpose(), burst + dec.n_i() - 1);
        CHECK((ti * tcz - t).norm() < 1e-10 * t.norm());
        CHECK((projector<Complex>(t) - projector<Complex>(ti)).norm() < 1e-10);
    }
    // monochannel: T_c is the plain transposed Toeplitz of h_c
    CMat mono(1, 3);
    mono.row(0) = monic({0.5, -0.25}).transpose();
    const auto dm = reducible_decompose(Channel::real("mono", mono.real()));
    CHECK(dm.n_i() == 1);
    CHECK((tc_matrix(dm) * dm.irreducible.stacked() - mono.row(0).transpose()).norm() < 1e-10);
}

TEST_CASE("conjugate reciprocal pairs") {
    const ZeroPairing p = conjugate_reciprocal_pairs(monic({0.5, 2.0}), Field::Real);
    CHECK(p.pairs.size() == 1);
    CHECK(p.unit_selfpaired.empty());
    const ZeroPairing u = conjugate_reciprocal_pairs(monic({1.0, 0.3}), Field::Real);
    CHECK(u.pairs.empty());
    CHECK(u.unit_selfpaired.size() == 1);
    const Complex z0(0.5, 0.5);
    const ZeroPairing c = conjugate_reciprocal_pairs(monic({z0, 1.0 / std::conj(z0)}), Field::Complex);
    CHECK(c.pairs.size() == 1);
    const ZeroPairing none = conjugate_reciprocal_pairs(monic({0.5, -0.3}), Field::Real);
    CHECK(none.pairs.empty());
    CHECK(none.unit_selfpaired.empty());
    CHECK_THROWS_AS(conjugate_reciprocal_pairs(CVec::Ones(1), Field::Real), InvalidInput);
}

TEST_CASE("channel JSON round-trip and parse errors") {
    const Channel ch = random_channel(2, 3, Field::Complex);
    const Channel back = parse_channel(channel_to_json(ch));
    CHECK((back.coeffs() - ch.coeffs()).norm() == 0.0);
    CHECK(back.field() == Field::Complex);

    const Channel h = load_channel(BLINDCRB_FIXTURES "/h1.json");
    CHECK(h.coeffs() == h1().coeffs());
    CHECK(load_channel(BLINDCRB_FIXTURES "/h2.json").coeffs() == h2().coeffs());

    try {
        parse_channel("{\n  \"field\": \"real\",\n  \"m\": 1, \"N\": 1,\n  \"coeffs\": [[1.0,]]\n}", "broken.json");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("broken.json") != std::string::npos);
        CHECK(msg.find("line 4") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_channel(R"({"field": "real", "m": 2, "N": 1, "coeffs": [[1.0]]})"), ParseError);
    CHECK_THROWS_AS(parse_channel(R"({"field": "real", "m": 1, "N": 1, "coeffs": [[[1.0, 2.0]]]})"), ParseError);
    CHECK_THROWS_AS(parse_channel(R"({"field": "real", "m": 1, "N": 1, "coeffs": [["x"]]})"), ParseError);
    CHECK_THROWS_AS(load_channel("/nonexistent/channel.json"), ParseError);

    const Mat c = parse_matrix(R"({"field": "complex", "columns": [[[1, 2], 3], [0, [0, 1]]]})");
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 2);
    CHECK(c.as_complex()(0, 0) == Complex(1, 2));
    CHECK(c.as_complex()(1, 1) == Complex(0, 1));
    CHECK_THROWS_AS(parse_matrix(R"({"field": "real", "columns": [[1, 2], [3]]})"), ParseError);
}
