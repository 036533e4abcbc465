#include "blindcrb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <type_traits>

#include "blindcrb/constraints.hpp"

namespace blindcrb {

const char* to_string(Adjustment a) {
    switch (a) {
        case Adjustment::NO: return "NO";
        case Adjustment::LS: return "LS";
        case Adjustment::LIN: return "LIN";
    }
    return "?";
}

Adjustment adjustment_from_string(const std::string& s) {
    if (s == "NO" || s == "no") return Adjustment::NO;
    if (s == "LS" || s == "ls") return Adjustment::LS;
    if (s == "LIN" || s == "lin") return Adjustment::LIN;
    throw InvalidInput("unknown adjustment rule '" + s + "' (expected NO, LS or LIN)");
}

namespace {

void check_config(const ExperimentConfig& cfg) {
    if (cfg.trials < 1) throw InvalidInput("experiment: trials must be >= 1");
    if (cfg.burst < 1) throw InvalidInput("experiment: burst length must be >= 1");
    if (!(cfg.sigma_a2 > 0.0) || !(cfg.sigma_v2 >= 0.0)) throw InvalidInput("experiment: invalid variances");
}

// Runs body(trial) for every trial on a small thread pool. Results are
// written into per-trial slots, so the outcome is independent of scheduling.
template <typename Body>
void for_each_trial(Index trials, Body body) {
    const auto hw = std::max(1u, std::thread::hardware_concurrency());
    const auto workers = static_cast<Index>(std::min<std::size_t>(hw, static_cast<std::size_t>(trials)));
    if (workers <= 1) {
        for (Index t = 0; t < trials; ++t) body(t);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex mu;
    for (Index w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (Index t = w; t < trials; t += workers) body(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

// Kahan-compensated running sum.
struct Accumulator {
    double sum = 0.0, comp = 0.0, sum_sq = 0.0, comp_sq = 0.0;
    Index n = 0;

    static void add(double& s, double& c, double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    void push(double x) {
        add(sum, comp, x);
        add(sum_sq, comp_sq, x * x);
        ++n;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double std_err() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
        return std::sqrt(var / static_cast<double>(n));
    }
};

}  // namespace

SymbolBurst experiment_symbols(const ExperimentConfig& cfg) {
    Philox rng(cfg.seed, kSymbolStream);
    const Index len = cfg.burst + cfg.channel.length() - 1;
    return SymbolBurst{gaussian_vector(rng, len, cfg.sigma_a2, cfg.field()), cfg.field()};
}

Observation simulate_burst(const ExperimentConfig& cfg, const SymbolBurst& fixed, std::uint64_t trial) {
    check_config(cfg);
    Philox rng(cfg.seed, trial);
    const Channel& ch = cfg.channel;
    const Index len = cfg.burst + ch.length() - 1;
    Observation obs;
    if (cfg.model == Model::Gaussian) {
        obs.symbols = SymbolBurst{gaussian_vector(rng, len, cfg.sigma_a2, cfg.field()), cfg.field()};
    } else {
        if (fixed.size() != len) throw InvalidInput("simulate_burst: fixed symbol burst must have length M+N-1");
        obs.symbols = fixed;
    }
    obs.y = toeplitz_matrix(ch.coeffs(), cfg.burst) * obs.symbols.symbols;
    if (cfg.sigma_v2 > 0.0) obs.y += gaussian_vector(rng, obs.y.size(), cfg.sigma_v2, cfg.field());
    return obs;
}

// ---------------------------------------------------------------- FIM oracle

namespace {

struct MomentMaps {
    ParamLayout layout;  // native layout; real coordinates via realified()
    RVec theta;          // true parameter, real coordinates
    CVec mean;
    CMat cov;
    std::vector<CVec> d_mean;  // per real coordinate
    std::vector<CMat> d_cov;
};

MomentMaps moment_maps(const ExperimentConfig& cfg, const SymbolBurst& fixed) {
    const Channel& ch = cfg.channel;
    const Field f = ch.field();
    const Index n_a = cfg.burst + ch.length() - 1;
    const Index p = ch.m() * cfg.burst;
    MomentMaps mm;
    CVec theta;
    if (cfg.model == Model::Deterministic) {
        mm.layout = ParamLayout({ParamBlock{"A", ParamKind::Symbols, n_a, f}, ParamBlock{"h", ParamKind::Channel, ch.dim(), f}});
        theta.resize(n_a + ch.dim());
        theta << fixed.symbols, ch.stacked();
    } else {
        mm.layout = ParamLayout({ParamBlock{"h", ParamKind::Channel, ch.dim(), f},
                                 ParamBlock{"sigma_v2", ParamKind::NoiseVariance, 1, Field::Real}});
        theta.resize(ch.dim() + 1);
        theta << ch.stacked(), Complex(cfg.sigma_v2, 0.0);
    }
    mm.theta = mm.layout.to_real(theta);

    auto eval = [&](const RVec& t, CVec& mean, CMat& cov) {
        const CVec th = mm.layout.from_real(t);
        if (cfg.model == Model::Deterministic) {
            const CMat h = th.tail(ch.dim()).reshaped(ch.m(), ch.length());
            mean = toeplitz_matrix(h, cfg.burst) * th.head(n_a);
            cov = cfg.sigma_v2 * CMat::Identity(p, p);
        } else {
            const CMat h = th.head(ch.dim()).reshaped(ch.m(), ch.length());
            const CMat t_h = toeplitz_matrix(h, cfg.burst);
            mean = CVec::Zero(p);
            cov = cfg.sigma_a2 * t_h * t_h.adjoint() + th(ch.dim()).real() * CMat::Identity(p, p);
        }
    };
    eval(mm.theta, mm.mean, mm.cov);
    // mean is bilinear and covariance quadratic along any single coordinate,
    // so central differences are exact up to rounding
    const double step = 0.5;
    for (Index k = 0; k < mm.theta.size(); ++k) {
        RVec tp = mm.theta, tm = mm.theta;
        tp(k) += step;
        tm(k) -= step;
        CVec mp, mn;
        CMat cp, cn;
        eval(tp, mp, cp);
        eval(tm, mn, cn);
        mm.d_mean.push_back((mp - mn) / (2 * step));
        mm.d_cov.push_back((cp - cn) / (2 * step));
    }
    return mm;
}

}  // namespace

McFimEstimate score_covariance_fim(const ExperimentConfig& cfg, const SymbolBurst& fixed) {
    check_config(cfg);
    if (!(cfg.sigma_v2 > 0.0)) throw InvalidInput("score_covariance_fim: sigma_v2 must be > 0");
    const MomentMaps mm = moment_maps(cfg, fixed);
    const Index k = mm.theta.size();
    const bool complex = cfg.field() == Field::Complex;
    const Eigen::LLT<CMat> llt(mm.cov);
    const CMat cinv = llt.solve(CMat::Identity(mm.cov.rows(), mm.cov.cols()));
    RVec tr_term(k);
    for (Index i = 0; i < k; ++i) tr_term(i) = (cinv * mm.d_cov[static_cast<std::size_t>(i)]).trace().real();

    std::vector<RVec> scores(static_cast<std::size_t>(cfg.trials));
    for_each_trial(cfg.trials, [&](Index t) {
        const Observation obs = simulate_burst(cfg, fixed, static_cast<std::uint64_t>(t));
        const CVec w = cinv * (obs.y - mm.mean);
        RVec s(k);
        for (Index i = 0; i < k; ++i) {
            const auto& dm = mm.d_mean[static_cast<std::size_t>(i)];
            const auto& dc = mm.d_cov[static_cast<std::size_t>(i)];
            const double quad = w.dot(dc * w).real();
            if (complex) {
                s(i) = 2.0 * dm.dot(w).real() + quad - tr_term(i);
            } else {
                s(i) = dm.dot(w).real() + 0.5 * (quad - tr_term(i));
            }
        }
        scores[static_cast<std::size_t>(t)] = s;
    });

    McFimEstimate est;
    est.trials = cfg.trials;
    est.j_hat = RMat::Zero(k, k);
    est.std_err = RMat::Zero(k, k);
    est.score_mean = RVec::Zero(k);
    est.score_std_err = RVec::Zero(k);
    for (Index i = 0; i < k; ++i) {
        Accumulator acc;
        for (const auto& s : scores) acc.push(s(i));
        est.score_mean(i) = acc.mean();
        est.score_std_err(i) = acc.std_err();
        for (Index j = i; j < k; ++j) {
            Accumulator prod;
            for (const auto& s : scores) prod.push(s(i) * s(j));
            est.j_hat(i, j) = est.j_hat(j, i) = prod.mean();
            est.std_err(i, j) = est.std_err(j, i) = prod.std_err();
        }
    }
    return est;
}

FimComparison compare_fim(const RMat& analytic, const McFimEstimate& mc, double trace_tol, double z_gate) {
    if (analytic.rows() != mc.j_hat.rows() || analytic.cols() != mc.j_hat.cols()) {
        throw InvalidInput("compare_fim: dimension mismatch");
    }
    FimComparison out;
    const double tr = analytic.trace();
    out.trace_rel_err = std::abs(mc.j_hat.trace() - tr) / std::abs(tr);
    for (Index i = 0; i < analytic.rows(); ++i) {
        for (Index j = i; j < analytic.cols(); ++j) {
            const double diff = std::abs(mc.j_hat(i, j) - analytic(i, j));
            const double se = mc.std_err(i, j);
            const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
            out.max_abs_z = std::max(out.max_abs_z, z);
            if (z > z_gate) ++out.entries_over;
        }
    }
    out.pass = out.trace_rel_err <= trace_tol && out.entries_over == 0;
    return out;
}

// ---------------------------------------------------------------- estimators

CVec adjust_estimate(const CVec& h_hat, const CVec& h_true, Adjustment rule) {
    if (h_hat.size() != h_true.size()) throw InvalidInput("adjust_estimate: dimension mismatch");
    const double nh = h_hat.norm();
    if (nh == 0.0) throw InvalidInput("adjust_estimate: zero estimate");
    const Complex c = h_true.dot(h_hat);  // h°^H h
    const double tiny = 1e-12 * nh * h_true.norm();
    switch (rule) {
        case Adjustment::NO: {
            if (std::abs(c) <= tiny) throw DegenerateAdjustment("NO adjustment: estimate orthogonal to the channel");
            return h_hat * (std::conj(c) / std::abs(c)) * (h_true.norm() / nh);
        }
        case Adjustment::LS: return h_hat * (h_hat.dot(h_true) / (nh * nh));
        case Adjustment::LIN: {
            if (std::abs(c) <= tiny) throw DegenerateAdjustment("LIN adjustment: h°^H h is zero");
            return h_hat * (h_true.squaredNorm() / c);
        }
    }
    return h_hat;
}

CVec cross_relation_estimate(const CVec& y, Index m, Index length, Index burst, Field field) {
    if (m < 2) throw InvalidInput("cross_relation_estimate: needs at least two subchannels");
    if (burst < length) throw InvalidInput("cross_relation_estimate: burst must be >= channel length");
    if (y.size() != m * burst) throw InvalidInput("cross_relation_estimate: observation has wrong length");
    const Index per_pair = burst - length + 1;
    const Index rows = m * (m - 1) / 2 * per_pair;
    CMat x = CMat::Zero(rows, m * length);
    Index row = 0;
    for (Index i = 0; i < m; ++i) {
        for (Index j = i + 1; j < m; ++j) {
            for (Index r = 0; r < per_pair; ++r, ++row) {
                for (Index p = 0; p < length; ++p) {
                    x(row, p * m + j) = y((r + p) * m + i);
                    x(row, p * m + i) = -y((r + p) * m + j);
                }
            }
        }
    }
    CVec h;
    if (field == Field::Real) {
        Eigen::JacobiSVD<RMat> svd(x.real(), Eigen::ComputeFullV);
        h = svd.matrixV().col(m * length - 1).cast<Complex>();
    } else {
        Eigen::JacobiSVD<CMat> svd(x, Eigen::ComputeFullV);
        h = svd.matrixV().col(m * length - 1);
    }
    return h / h.norm();
}

namespace {

template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
DenseMat<Scalar> cast_field(const CMat& a) {
    if constexpr (std::is_same_v<Scalar, double>) {
        return a.real();
    } else {
        return a;
    }
}

template <typename Scalar>
AlsResult als_impl(const CVec& y_in, Index m, Index length, Index burst, const CVec& init, int iters, double tol) {
    const VecT<Scalar> y = cast_field<Scalar>(y_in);
    VecT<Scalar> h = cast_field<Scalar>(init);
    h /= h.norm();
    VecT<Scalar> a;
    AlsResult out;
    double best = std::numeric_limits<double>::infinity();
    VecT<Scalar> best_h = h, best_a;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < iters; ++it) {
        const DenseMat<Scalar> t = cast_field<Scalar>(toeplitz_matrix(CMat(h.template cast<Complex>().reshaped(m, length)), burst));
        a = (t.adjoint() * t).ldlt().solve(t.adjoint() * y);
        const DenseMat<Scalar> cal = cast_field<Scalar>(commutativity_matrix(a.template cast<Complex>(), m, length, burst));
        h = (cal.adjoint() * cal).ldlt().solve(cal.adjoint() * y);
        const double s = h.norm();
        if (!(s > 0.0) || !h.allFinite()) break;
        h /= s;
        a *= s;
        const double res = (y - cal * h * s).squaredNorm();
        out.residuals.push_back(res);
        out.iterations = it + 1;
        if (res < best) {
            best = res;
            best_h = h;
            best_a = a;
        }
        if (prev - res <= tol * prev) {
            out.converged = true;
            break;
        }
        prev = res;
    }
    out.h = best_h.template cast<Complex>();
    out.a = best_a.size() ? CVec(best_a.template cast<Complex>()) : CVec();
    return out;
}

}  // namespace

AlsResult alternating_ls_estimator(const CVec& y, Index m, Index length, Index burst, Field field, const CVec& init,
                                   int iters, double tol) {
    if (y.size() != m * burst) throw InvalidInput("alternating_ls_estimator: observation has wrong length");
    if (init.size() != m * length || init.isZero(0.0)) throw InvalidInput("alternating_ls_estimator: bad initial channel");
    if (iters < 1) throw InvalidInput("alternating_ls_estimator: iters must be >= 1");
    return field == Field::Real ? als_impl<double>(y, m, length, burst, init, iters, tol)
                                : als_impl<Complex>(y, m, length, burst, init, iters, tol);
}

double sigma_v2_for_snr(const Channel& ch, double sigma_a2, double snr) {
    return sigma_a2 * ch.stacked().squaredNorm() / (static_cast<double>(ch.m()) * std::pow(10.0, snr / 10.0));
}

double snr_db(const Channel& ch, double sigma_a2, double sigma_v2) {
    return 10.0 * std::log10(sigma_a2 * ch.stacked().squaredNorm() / (static_cast<double>(ch.m()) * sigma_v2));
}

MseRow mse_vs_crb_experiment(const ExperimentConfig& cfg) {
    check_config(cfg);
    if (!(cfg.sigma_v2 > 0.0)) throw InvalidInput("mse experiment: sigma_v2 must be > 0");
    const Channel& ch = cfg.channel;
    const CVec h_true = ch.stacked();
    const SymbolBurst fixed = experiment_symbols(cfg);

    MseRow row;
    row.sigma_v2 = cfg.sigma_v2;
    row.snr_db = snr_db(ch, cfg.sigma_a2, cfg.sigma_v2);
    row.trials = cfg.trials;
    if (cfg.model == Model::Deterministic) {
        const ReducedFim red = deterministic_reduced_fim(ch, fixed, cfg.sigma_v2, cfg.burst);
        const RMat jhh = real_view(red.j);
        const CrbResult crb = constrained_crb(jhh, build_norm_constraint(h_true, ch.field(), true));
        row.crb_bounded = crb.bounded;
        row.trace_crb = crb.trace;
    } else {
        GaussianModelConfig g{cfg.sigma_a2, cfg.sigma_v2, cfg.burst};
        const CrbResult crb = gaussian_blind_crb(ch, g);
        row.crb_bounded = crb.bounded;
        row.trace_crb = crb.trace;
    }

    const std::size_t nrules = cfg.adjustments.size();
    // per trial: squared error per rule (NaN when the rule is undefined), convergence flag
    std::vector<std::vector<double>> err(static_cast<std::size_t>(cfg.trials), std::vector<double>(nrules));
    std::vector<char> converged(static_cast<std::size_t>(cfg.trials), 1);
    for_each_trial(cfg.trials, [&](Index t) {
        const Observation obs = simulate_burst(cfg, fixed, static_cast<std::uint64_t>(t));
        CVec h_hat = cross_relation_estimate(obs.y, ch.m(), ch.length(), cfg.burst, ch.field());
        if (cfg.estimator == Estimator::AlternatingLS) {
            const AlsResult als = alternating_ls_estimator(obs.y, ch.m(), ch.length(), cfg.burst, ch.field(), h_hat,
                                                           cfg.als_iters, cfg.als_tol);
            h_hat = als.h;
            converged[static_cast<std::size_t>(t)] = als.converged ? 1 : 0;
        }
        for (std::size_t r = 0; r < nrules; ++r) {
            try {
                err[static_cast<std::size_t>(t)][r] = (adjust_estimate(h_hat, h_true, cfg.adjustments[r]) - h_true).squaredNorm();
            } catch (const DegenerateAdjustment&) {
                err[static_cast<std::size_t>(t)][r] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    });

    for (std::size_t r = 0; r < nrules; ++r) {
        Accumulator acc;
        for (const auto& e : err) {
            if (std::isnan(e[r])) continue;
            acc.push(e[r]);
        }
        row.rules.push_back(RuleMse{cfg.adjustments[r], acc.mean(), acc.std_err()});
    }
    for (std::size_t t = 0; t < err.size(); ++t) {
        if (!converged[t]) ++row.nonconverged;
        if (std::any_of(err[t].begin(), err[t].end(), [](double e) { return std::isnan(e); })) ++row.degenerate;
    }
    return row;
}

}  // namespace blindcrb
