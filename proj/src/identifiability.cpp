#include "blindcrb/identifiability.hpp"

#include <algorithm>
#include <sstream>

namespace blindcrb {

const char* to_string(Ambiguity a) {
    switch (a) {
        case Ambiguity::Scale: return "scale";
        case Ambiguity::Phase: return "phase";
        case Ambiguity::Sign: return "sign";
        case Ambiguity::Full: return "full";
        case Ambiguity::No: return "no";
        case Ambiguity::Indeterminate: return "indeterminate";
    }
    return "?";
}

namespace {

// A decomposition that cannot be computed reliably is treated as irreducible.
ReducibleDecomposition decompose_or_irreducible(const Channel& ch, double tol, std::vector<std::string>& reasons) {
    try {
        return reducible_decompose(ch, tol);
    } catch (const DecompositionFailed& e) {
        reasons.push_back(std::string("common-factor extraction failed, treated as irreducible: ") + e.what());
        return ReducibleDecomposition{ch, CVec::Ones(1), CVec(0), 0.0};
    }
}

std::string fmt(const char* label, Index v) {
    return std::string(label) + std::to_string(v);
}

}  // namespace

IdentifiabilityVerdict deterministic_verdict(const Channel& ch, Index burst, const std::optional<SymbolBurst>& symbols,
                                             double zero_tol) {
    IdentifiabilityVerdict v;
    v.model = Model::Deterministic;
    v.field = ch.field();
    const Index per_real = ch.field() == Field::Complex ? 2 : 1;
    const ReducibleDecomposition dec = decompose_or_irreducible(ch, zero_tol, v.reasons);
    v.n_i = dec.n_i();
    v.n_c = dec.n_c();
    const Index n = ch.length();

    if (symbols) {
        if (symbols->size() != burst + n - 1) throw InvalidInput("deterministic_verdict: symbol burst length must be M+N-1");
        const CMat calA = commutativity_matrix(symbols->symbols, ch.m(), n, burst);
        if (numerical_rank<Complex>(calA) < calA.cols()) {
            v.identifiable_up_to = Ambiguity::No;
            v.reasons.push_back("symbol burst lacks excitation: calA is column-rank deficient");
            return v;
        }
        v.reasons.push_back("calA has full column rank");
    }

    if (dec.reducible()) {
        const Index ni = dec.n_i();
        const bool burst_ok = burst >= 2 * (ni - 1) || (ch.m() == 2 && burst >= ni);
        v.identifiable_up_to = Ambiguity::No;
        v.reasons.push_back(fmt("reducible channel, N_c = ", dec.n_c()));
        if (!burst_ok) {
            v.identifiable_up_to = Ambiguity::Indeterminate;
            v.reasons.push_back(fmt("burst too short for the irreducible part, M = ", burst));
            return v;
        }
        v.predicted_nullity = per_real * (2 * dec.n_c() - 1);
        v.predicted_reduced_nullity = per_real * dec.n_c();
        return v;
    }

    const bool burst_ok = burst >= 2 * (n - 1) || (ch.m() == 2 && burst >= n);
    if (!burst_ok) {
        v.identifiable_up_to = Ambiguity::No;
        v.reasons.push_back(fmt("insufficient burst length, M = ", burst));
        return v;
    }
    v.identifiable_up_to = Ambiguity::Scale;
    v.reasons.push_back("irreducible channel with sufficient burst: identifiable up to a scale factor");
    v.predicted_nullity = per_real;
    v.predicted_reduced_nullity = per_real;
    return v;
}

IdentifiabilityVerdict gaussian_verdict(const Channel& ch, const GaussianModelConfig& cfg,
                                        const GaussianVerdictOptions& opts) {
    IdentifiabilityVerdict v;
    v.model = Model::Gaussian;
    v.field = ch.field();
    const ReducibleDecomposition dec = decompose_or_irreducible(ch, opts.zero_tol, v.reasons);
    v.n_i = dec.n_i();
    v.n_c = dec.n_c();
    const Index burst = cfg.burst_for(ch);
    const Index min_i = opts.min_irreducible_burst.value_or(dec.n_i());
    v.depends_on_min_irreducible_burst = !opts.min_irreducible_burst.has_value();

    const Index need = std::max(min_i + 1, dec.n_c() - 1);
    if (burst < need) {
        v.identifiable_up_to = Ambiguity::Indeterminate;
        v.reasons.push_back("burst condition M >= max(M_I + 1, N_c - 1) = " + std::to_string(need) +
                            " fails (M = " + std::to_string(burst) + "): indeterminate by rule");
        return v;
    }

    Index pairs = 0, units = 0;
    if (dec.reducible()) {
        const ZeroPairing zp = conjugate_reciprocal_pairs(dec.monic, ch.field(), opts.zero_tol);
        pairs = static_cast<Index>(zp.pairs.size());
        units = static_cast<Index>(zp.unit_selfpaired.size());
    }
    const bool complex = ch.field() == Field::Complex;
    Index nullity = complex ? 1 : 0;
    nullity += (complex ? 2 : 1) * pairs + units;
    if (pairs > 0) v.reasons.push_back(fmt("conjugate reciprocal common-zero pairs: ", pairs));
    if (units > 0) v.reasons.push_back(fmt("common zeros at +1/-1: ", units));
    if (ch.m() == 1 && pairs == 0 && units == 0) {
        ++nullity;
        v.reasons.push_back("monochannel: sigma_v2 not identifiable");
    }
    v.predicted_nullity = nullity;
    if (complex) {
        v.identifiable_up_to = nullity == 1 ? Ambiguity::Phase : Ambiguity::No;
        if (nullity == 1) v.reasons.push_back("FIM 1-singular: identifiable up to a phase");
    } else {
        v.identifiable_up_to = nullity == 0 ? Ambiguity::Sign : Ambiguity::No;
        if (nullity == 0) v.reasons.push_back("FIM regular: identifiable up to a sign");
    }
    if (v.depends_on_min_irreducible_burst) v.reasons.push_back(fmt("M_I taken as N_I = ", min_i));
    return v;
}

ConsistencyRecord verdict_vs_fim(const IdentifiabilityVerdict& v, const SingularityReport& report,
                                 const std::string& context) {
    ConsistencyRecord rec;
    rec.predicted = v.predicted_nullity;
    rec.computed = report.nullity;
    std::ostringstream os;
    os << to_string(v.model) << "/" << to_string(v.field);
    if (!context.empty()) os << " [" << context << "]";
    os << ": N_I=" << v.n_i << " N_c=" << v.n_c << " computed nullity " << report.nullity << " (rank " << report.rank
       << ", relative gap " << report.relative_gap << ", tol " << kFimRankTol << ")";
    if (!v.predicted_nullity) {
        os << "; no rule prediction (" << to_string(v.identifiable_up_to) << "), regular by rank: "
           << (report.nullity == 0 ? "yes" : "no");
        rec.pass = false;
    } else {
        os << "; predicted " << *v.predicted_nullity;
        rec.pass = *v.predicted_nullity == report.nullity;
    }
    for (const auto& r : v.reasons) os << "; " << r;
    rec.diagnostic = os.str();
    return rec;
}

}  // namespace blindcrb
