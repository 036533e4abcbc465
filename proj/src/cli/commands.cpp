#include "blindcrb/cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "blindcrb/channel_io.hpp"
#include "blindcrb/cli/manifest.hpp"
#include "blindcrb/constraints.hpp"
#include "blindcrb/identifiability.hpp"
#include "blindcrb/simulation.hpp"

namespace blindcrb::cli {

std::uint64_t default_seed() {
    if (const char* s = std::getenv(kSeedEnv)) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(s, &end, 10);
        if (end != s && *end == '\0') return v;
        throw InvalidInput(std::string(kSeedEnv) + " must be a non-negative integer, got '" + s + "'");
    }
    return 1;
}

Model ModelOptions::parsed_model() const {
    if (model == "deterministic") return Model::Deterministic;
    if (model == "gaussian") return Model::Gaussian;
    throw InvalidInput("unknown model '" + model + "' (expected deterministic or gaussian)");
}

Channel ModelOptions::load() const {
    Channel ch = load_channel(channel_path);
    if (!field) return ch;
    const Field f = field_from_string(*field);
    if (f == ch.field()) return ch;
    if (f == Field::Real) throw InvalidInput("--field real: cannot demote a complex channel");
    return Channel(ch.name(), Field::Complex, ch.coeffs());
}

double ModelOptions::noise(const Channel& ch) const {
    if (sigma_v2 && snr_db) throw InvalidInput("give either --sigma-v2 or --snr-db, not both");
    if (sigma_v2) {
        if (!(*sigma_v2 > 0.0)) throw InvalidInput("--sigma-v2 must be > 0");
        return *sigma_v2;
    }
    if (snr_db) return sigma_v2_for_snr(ch, sigma_a2, *snr_db);
    return 0.1;
}

std::string ModelOptions::describe() const {
    std::ostringstream os;
    os << "channel=" << channel_path << " model=" << model << " field=" << field.value_or("native") << " M=" << burst
       << " sigma_a2=" << sigma_a2;
    if (sigma_v2) os << " sigma_v2=" << *sigma_v2;
    if (snr_db) os << " snr_db=" << *snr_db;
    os << " seed=" << seed;
    return os.str();
}

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

std::string cnum(Complex z) {
    std::ostringstream os;
    os << std::setprecision(6) << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "j";
    return os.str();
}

std::string zeros_text(const CVec& z) {
    if (z.size() == 0) return "none";
    std::string s;
    for (Index i = 0; i < z.size(); ++i) s += (i ? " " : "") + cnum(z(i));
    return s;
}

// Real-coordinate names of the stacked channel: h<i> or re_h<i>/im_h<i>, 1-based.
std::vector<std::string> coordinate_names(const Channel& ch) {
    std::vector<std::string> names;
    if (ch.field() == Field::Real) {
        for (Index i = 0; i < ch.dim(); ++i) names.push_back("h" + std::to_string(i + 1));
    } else {
        for (Index i = 0; i < ch.dim(); ++i) names.push_back("re_h" + std::to_string(i + 1));
        for (Index i = 0; i < ch.dim(); ++i) names.push_back("im_h" + std::to_string(i + 1));
    }
    return names;
}

SymbolBurst symbols_for(const ModelOptions& opt, const Channel& ch) {
    ExperimentConfig cfg(ch);
    cfg.burst = opt.burst;
    cfg.sigma_a2 = opt.sigma_a2;
    cfg.seed = opt.seed;
    return experiment_symbols(cfg);
}

void check_burst(const ModelOptions& opt) {
    if (opt.burst < 1) throw InvalidInput("--M must be >= 1");
    if (!(opt.sigma_a2 > 0.0)) throw InvalidInput("--sigma-a2 must be > 0");
}

// Channel-block FIM on which constraints act: J_hh for the deterministic
// model, the Schur complement over sigma_v2 for the Gaussian one.
RMat channel_fim(const ModelOptions& opt, const Channel& ch) {
    check_burst(opt);
    const double sv = opt.noise(ch);
    if (opt.parsed_model() == Model::Deterministic) {
        return real_view(deterministic_reduced_fim(ch, symbols_for(opt, ch), sv, opt.burst).j);
    }
    return schur_reduce(gaussian_fim(ch, GaussianModelConfig{opt.sigma_a2, sv, opt.burst}), "h");
}

RunManifest manifest_for(const std::string& command, const std::string& config, const std::string& channel_path) {
    RunManifest m = RunManifest::make(command, config);
    m.add_input(channel_path);
    return m;
}

void write_report(std::ostream& out, const char* label, const SingularityReport& rep) {
    out << label << "_rank: " << rep.rank << "\n";
    out << label << "_nullity: " << rep.nullity << "\n";
    out << label << "_relative_gap: " << num(rep.relative_gap) << "\n";
    for (const auto& m : rep.matches) {
        out << label << "_null_direction: " << m.name << " angle=" << num(m.angle)
            << (m.matched ? " (in null space)" : " (not in null space)") << "\n";
    }
}

void write_verdict(std::ostream& out, const IdentifiabilityVerdict& v) {
    out << "verdict: identifiable up to " << to_string(v.identifiable_up_to) << "\n";
    out << "predicted_nullity: " << (v.predicted_nullity ? std::to_string(*v.predicted_nullity) : "none") << "\n";
    if (v.predicted_reduced_nullity) out << "predicted_reduced_nullity: " << *v.predicted_reduced_nullity << "\n";
    for (const auto& r : v.reasons) out << "reason: " << r << "\n";
}

}  // namespace

int cmd_analyze(const ModelOptions& opt, std::ostream& out) {
    check_burst(opt);
    const Channel ch = opt.load();
    const double sv = opt.noise(ch);
    const Model model = opt.parsed_model();
    RunManifest man = manifest_for("analyze", opt.describe(), opt.channel_path);
    man.write(out);

    out << "channel: " << ch.name() << " (" << to_string(ch.field()) << ", m=" << ch.m() << ", N=" << ch.length()
        << ")\n";
    const auto zs = subchannel_zeros(ch);
    for (std::size_t l = 0; l < zs.size(); ++l) out << "subchannel_zeros[" << l + 1 << "]: " << zeros_text(zs[l]) << "\n";
    try {
        const ReducibleDecomposition dec = reducible_decompose(ch);
        out << "common_zeros: " << zeros_text(dec.common_zeros) << "\n";
        out << "reducible: " << (dec.reducible() ? "yes" : "no") << " (N_I=" << dec.n_i() << ", N_c=" << dec.n_c()
            << ")\n";
        if (dec.reducible()) {
            const ZeroPairing zp = conjugate_reciprocal_pairs(dec.monic, ch.field());
            for (const auto& [a, b] : zp.pairs) out << "conjugate_reciprocal_pair: " << cnum(a) << " " << cnum(b) << "\n";
            for (const auto& u : zp.unit_selfpaired) out << "zero_at_unit: " << cnum(u) << "\n";
        }
    } catch (const DecompositionFailed& e) {
        out << "reducible: unknown (" << e.what() << ")\n";
    }
    out << "model: " << to_string(model) << " (M=" << opt.burst << ", sigma_a2=" << num(opt.sigma_a2)
        << ", sigma_v2=" << num(sv) << ", snr_db=" << num(snr_db(ch, opt.sigma_a2, sv)) << ")\n";

    bool consistent = true;
    if (model == Model::Deterministic) {
        const SymbolBurst a = symbols_for(opt, ch);
        const IdentifiabilityVerdict v = deterministic_verdict(ch, opt.burst, a);
        write_verdict(out, v);
        const FimResult fim = deterministic_fim(ch, a, sv, opt.burst);
        out << "fim_dim: " << fim.real.rows() << "\n";
        const SingularityReport rep = analyze_singularities(fim, deterministic_predicted_nulls(ch, a));
        write_report(out, "fim", rep);
        const RMat jhh = real_view(deterministic_reduced_fim(ch, a, sv, opt.burst).j);
        const SingularityReport red = analyze_singularities(jhh, channel_predicted_nulls(ch));
        write_report(out, "reduced_fim", red);
        if (v.predicted_nullity) {
            const ConsistencyRecord rec = verdict_vs_fim(v, rep, ch.name());
            out << "consistency: " << (rec.pass ? "PASS" : "FAIL") << " " << rec.diagnostic << "\n";
            consistent = rec.pass;
            if (v.predicted_reduced_nullity) {
                const bool ok = *v.predicted_reduced_nullity == red.nullity;
                out << "reduced_consistency: " << (ok ? "PASS" : "FAIL") << " predicted "
                    << *v.predicted_reduced_nullity << ", computed " << red.nullity << "\n";
                consistent = consistent && ok;
            }
        } else {
            out << "consistency: indeterminate by rule, " << (rep.nullity == 0 ? "regular" : "singular")
                << " by rank\n";
        }
    } else {
        const GaussianModelConfig cfg{opt.sigma_a2, sv, opt.burst};
        const IdentifiabilityVerdict v = gaussian_verdict(ch, cfg);
        write_verdict(out, v);
        const FimResult fim = gaussian_fim(ch, cfg);
        out << "fim_dim: " << fim.real.rows() << "\n";
        std::vector<NamedVector> pred;
        for (const auto& p : channel_predicted_nulls(ch)) {
            if (ch.field() == Field::Real) continue;  // the sign ambiguity is discrete
            RVec w = RVec::Zero(fim.real.rows());
            w.head(p.vector.size()) = p.vector;
            pred.push_back({p.name, w});
        }
        RVec e_sigma = RVec::Zero(fim.real.rows());
        e_sigma(e_sigma.size() - 1) = 1.0;
        pred.push_back({"sigma_v2", e_sigma});
        const SingularityReport rep = analyze_singularities(fim, pred);
        write_report(out, "fim", rep);
        if (v.predicted_nullity) {
            const ConsistencyRecord rec = verdict_vs_fim(v, rep, ch.name());
            out << "consistency: " << (rec.pass ? "PASS" : "FAIL") << " " << rec.diagnostic << "\n";
            consistent = rec.pass;
        } else {
            out << "consistency: indeterminate by rule, " << (rep.nullity == 0 ? "regular" : "singular")
                << " by rank\n";
        }
    }
    return consistent ? 0 : 1;
}

int cmd_crb(const CrbOptions& opt, std::ostream& out) {
    const Channel ch = opt.model.load();
    std::vector<ConstraintSpec> specs;
    for (const auto& c : opt.constraints) specs.push_back(parse_constraint_spec(c));
    if (specs.empty()) throw InvalidInput("no --constraint given");

    std::string config = opt.model.describe() + " constraints=";
    for (std::size_t i = 0; i < opt.constraints.size(); ++i) config += (i ? "," : "") + opt.constraints[i];
    RunManifest man = manifest_for("crb", config, opt.model.channel_path);
    for (const auto& s : specs) {
        if (s.kind == ConstraintKind::Linear) man.add_input(s.path);
    }

    const RMat jhh = channel_fim(opt.model, ch);
    std::vector<std::pair<ConstraintSpec, CrbResult>> rows;
    for (const auto& s : specs) {
        CrbResult r = s.kind == ConstraintKind::Minimal ? minimal_crb(jhh) : constrained_crb(jhh, build_constraint(s, ch));
        r.constraint = s.text;
        if (!r.bounded) man.warnings.push_back("constraint '" + s.text + "' gives an unbounded CRB: " + r.warning);
        rows.emplace_back(s, std::move(r));
    }
    man.write(out);
    out << "constraint,bounded,trace";
    const auto names = coordinate_names(ch);
    for (const auto& n : names) out << ",crb_" << n;
    out << "\n";
    for (const auto& [s, r] : rows) {
        out << s.text << "," << (r.bounded ? "true" : "false") << "," << num(r.trace);
        for (Index i = 0; i < static_cast<Index>(names.size()); ++i) {
            out << "," << (r.bounded ? num(r.crb(i, i)) : "nan");
        }
        out << "\n";
    }
    return 0;
}

int cmd_sweep_known(const ModelOptions& opt, std::ostream& out) {
    const Channel ch = opt.load();
    RunManifest man = manifest_for("sweep-known", opt.describe(), opt.channel_path);
    const RMat jhh = channel_fim(opt, ch);
    const CrbResult base = minimal_crb(jhh);
    const CVec h = ch.stacked();
    man.write(out);
    out << "kind,index,abs_coeff,trace,bounded,excess_over_minimal\n";
    for (Index i = 0; i < ch.dim(); ++i) {
        const CrbResult r = constrained_crb(jhh, build_known_coeff_constraint(h, i, ch.field()));
        out << "known," << i + 1 << "," << num(std::abs(h(i))) << "," << num(r.trace) << ","
            << (r.bounded ? "true" : "false") << "," << num(r.bounded ? r.trace - base.trace : INFINITY) << "\n";
    }
    out << "minimal,,," << num(base.trace) << ",true,0\n";
    return 0;
}

int cmd_fim_check(const FimCheckOptions& opt, std::ostream& out) {
    check_burst(opt.model);
    const Channel ch = opt.model.load();
    const double sv = opt.model.noise(ch);
    ExperimentConfig cfg(ch);
    cfg.model = opt.model.parsed_model();
    cfg.burst = opt.model.burst;
    cfg.sigma_a2 = opt.model.sigma_a2;
    cfg.sigma_v2 = sv;
    cfg.trials = opt.trials;
    cfg.seed = opt.model.seed;
    const double sv_analytic = opt.analytic_sigma_v2.value_or(sv);
    const SymbolBurst a = experiment_symbols(cfg);
    const RMat analytic = cfg.model == Model::Deterministic
                              ? deterministic_fim(ch, a, sv_analytic, cfg.burst).real
                              : gaussian_fim(ch, GaussianModelConfig{cfg.sigma_a2, sv_analytic, cfg.burst}).real;
    const McFimEstimate mc = score_covariance_fim(cfg, a);
    const FimComparison cmp = compare_fim(analytic, mc);

    std::ostringstream config;
    config << opt.model.describe() << " trials=" << opt.trials;
    if (opt.analytic_sigma_v2) config << " analytic_sigma_v2=" << *opt.analytic_sigma_v2;
    RunManifest man = manifest_for("fim-check", config.str(), opt.model.channel_path);
    if (!cmp.pass) man.warnings.push_back("Monte Carlo FIM disagrees with the analytic FIM");
    man.write(out);
    if (opt.entries) {
        out << "i,j,analytic,monte_carlo,std_err,z\n";
        for (Index i = 0; i < analytic.rows(); ++i) {
            for (Index j = i; j < analytic.cols(); ++j) {
                const double se = mc.std_err(i, j);
                const double diff = mc.j_hat(i, j) - analytic(i, j);
                out << i + 1 << "," << j + 1 << "," << num(analytic(i, j)) << "," << num(mc.j_hat(i, j)) << ","
                    << num(se) << "," << num(se > 0 ? diff / se : (diff == 0 ? 0.0 : INFINITY)) << "\n";
            }
        }
    } else {
        out << "metric,value\n";
        out << "trace_analytic," << num(analytic.trace()) << "\n";
        out << "trace_monte_carlo," << num(mc.j_hat.trace()) << "\n";
        out << "trace_rel_err," << num(cmp.trace_rel_err) << "\n";
        out << "max_abs_z," << num(cmp.max_abs_z) << "\n";
        out << "entries_over_3se," << cmp.entries_over << "\n";
        out << "pass," << (cmp.pass ? "true" : "false") << "\n";
    }
    return cmp.pass ? 0 : 1;
}

int cmd_mse(const MseOptions& opt, std::ostream& out) {
    using nlohmann::json;
    std::ifstream in(opt.experiment_path);
    if (!in) throw ParseError("cannot open experiment file '" + opt.experiment_path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json doc;
    try {
        doc = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ParseError(opt.experiment_path + ": malformed JSON (" + e.what() + ")");
    }

    std::filesystem::path channel_path;
    ExperimentConfig base = [&] {
        try {
            channel_path = doc.at("channel").get<std::string>();
            if (channel_path.is_relative()) {
                channel_path = std::filesystem::path(opt.experiment_path).parent_path() / channel_path;
            }
            return ExperimentConfig(load_channel(channel_path.string()));
        } catch (const json::exception& e) {
            throw ParseError(opt.experiment_path + ": " + e.what());
        }
    }();
    std::vector<double> noise_levels;
    bool by_snr = true;
    try {
        const std::string model = doc.value("model", std::string("deterministic"));
        if (model == "deterministic") {
            base.model = Model::Deterministic;
        } else if (model == "gaussian") {
            base.model = Model::Gaussian;
        } else {
            throw ParseError(opt.experiment_path + ": unknown model '" + model + "'");
        }
        base.burst = doc.value("burst", Index{100});
        base.sigma_a2 = doc.value("sigma_a2", 1.0);
        base.trials = opt.trials.value_or(doc.value("trials", Index{500}));
        base.seed = opt.seed.value_or(doc.value("seed", std::uint64_t{1}));
        const std::string est = doc.value("estimator", std::string("als"));
        if (est == "als") {
            base.estimator = Estimator::AlternatingLS;
        } else if (est == "none") {
            base.estimator = Estimator::None;
        } else {
            throw ParseError(opt.experiment_path + ": unknown estimator '" + est + "' (expected als or none)");
        }
        if (doc.contains("adjustments")) {
            base.adjustments.clear();
            for (const auto& a : doc.at("adjustments")) base.adjustments.push_back(adjustment_from_string(a.get<std::string>()));
        }
        base.als_iters = doc.value("als_iters", 100);
        if (doc.contains("snr_db") == doc.contains("sigma_v2")) {
            throw ParseError(opt.experiment_path + ": give exactly one of 'snr_db' or 'sigma_v2'");
        }
        by_snr = doc.contains("snr_db");
        const json& levels = by_snr ? doc.at("snr_db") : doc.at("sigma_v2");
        if (levels.is_number()) {
            noise_levels.push_back(levels.get<double>());
        } else {
            noise_levels = levels.get<std::vector<double>>();
        }
        if (noise_levels.empty()) throw ParseError(opt.experiment_path + ": empty noise-level list");
    } catch (const json::exception& e) {
        throw ParseError(opt.experiment_path + ": " + e.what());
    }

    std::vector<MseRow> rows;
    for (double level : noise_levels) {
        ExperimentConfig cfg = base;
        cfg.sigma_v2 = by_snr ? sigma_v2_for_snr(cfg.channel, cfg.sigma_a2, level) : level;
        rows.push_back(mse_vs_crb_experiment(cfg));
    }

    std::ostringstream config;
    config << "experiment=" << opt.experiment_path << " " << doc.dump() << " seed=" << base.seed
           << " trials=" << base.trials;
    RunManifest man = RunManifest::make("mse", config.str());
    man.add_input(opt.experiment_path);
    man.add_input(channel_path.string());
    for (const auto& r : rows) {
        if (2 * r.nonconverged > r.trials) {
            man.warnings.push_back("estimator failed to converge in " + std::to_string(r.nonconverged) + " of " +
                                   std::to_string(r.trials) + " trials at snr_db=" + num(r.snr_db));
        }
    }
    man.write(out);
    out << "snr_db,sigma_v2,trace_crb,crb_bounded";
    for (const auto a : base.adjustments) out << ",mse_" << to_string(a) << ",se_" << to_string(a);
    out << ",trials,nonconverged,degenerate\n";
    for (const auto& r : rows) {
        out << num(r.snr_db) << "," << num(r.sigma_v2) << "," << num(r.trace_crb) << ","
            << (r.crb_bounded ? "true" : "false");
        for (const auto& rm : r.rules) out << "," << num(rm.mse) << "," << num(rm.std_err);
        out << "," << r.trials << "," << r.nonconverged << "," << r.degenerate << "\n";
    }
    return 0;
}

}  // namespace blindcrb::cli
