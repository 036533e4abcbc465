#pragma once

// Monte Carlo harness: burst synthesis, the score-covariance FIM oracle,
// scale/phase adjustment rules and MSE-versus-CRB experiments.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blindcrb/channel.hpp"
#include "blindcrb/fim.hpp"
#include "blindcrb/random.hpp"

namespace blindcrb {

/// None: the closed-form cross-relation estimate without ALS refinement.
enum class Estimator { AlternatingLS, None };
enum class Adjustment { NO, LS, LIN };

const char* to_string(Adjustment a);
Adjustment adjustment_from_string(const std::string& s);

struct ExperimentConfig {
    explicit ExperimentConfig(Channel ch) : channel(std::move(ch)) {}

    Channel channel;
    Model model = Model::Deterministic;
    Index burst = 10;  ///< M
    double sigma_a2 = 1.0;
    double sigma_v2 = 0.1;
    Index trials = 100;
    std::uint64_t seed = 1;
    Estimator estimator = Estimator::AlternatingLS;
    std::vector<Adjustment> adjustments{Adjustment::NO, Adjustment::LS, Adjustment::LIN};
    int als_iters = 100;
    double als_tol = 1e-10;

    Field field() const { return channel.field(); }
};

/// Stream reserved for the fixed deterministic-model symbol burst.
inline constexpr std::uint64_t kSymbolStream = ~std::uint64_t{0};

/// The experiment's fixed symbol burst (deterministic model), length M+N-1.
SymbolBurst experiment_symbols(const ExperimentConfig& cfg);

struct Observation {
    CVec y;
    SymbolBurst symbols;
};

/// Y = T(h) A + V for one trial. Deterministic: A = `fixed`; Gaussian: fresh
/// A ~ N(0, sigma_a2) from the trial stream. Noise is circular for complex.
Observation simulate_burst(const ExperimentConfig& cfg, const SymbolBurst& fixed, std::uint64_t trial);

struct McFimEstimate {
    RMat j_hat;
    RMat std_err;  ///< per-entry standard error of j_hat
    Index trials = 0;
    RVec score_mean;
    RVec score_std_err;
};

/// Empirical E[s s^T] of the real-parameter score over cfg.trials bursts, in
/// the real layout of deterministic_fim / gaussian_fim. Derivatives of the
/// mean and covariance maps are central finite differences, independent of
/// the analytic FIM code.
McFimEstimate score_covariance_fim(const ExperimentConfig& cfg, const SymbolBurst& fixed);

struct FimComparison {
    double trace_rel_err = 0.0;
    double max_abs_z = 0.0;
    Index entries_over = 0;  ///< entries with |z| > gate
    bool pass = false;
};

FimComparison compare_fim(const RMat& analytic, const McFimEstimate& mc, double trace_tol = 0.05,
                          double z_gate = 3.0);

/// NO: rescale to ||h°||, rotate so h°^H h is real positive. LS: P_h h°.
/// LIN: h (h°^H h°) / (h°^H h).
CVec adjust_estimate(const CVec& h_hat, const CVec& h_true, Adjustment rule);

/// Unit-norm blind estimate from the subchannel cross-relations
/// h_j * y_i = h_i * y_j (least right singular vector).
CVec cross_relation_estimate(const CVec& y, Index m, Index length, Index burst, Field field);

struct AlsResult {
    CVec h;  ///< unit norm
    CVec a;
    std::vector<double> residuals;  ///< ||Y - T(h) A||^2 after each sweep
    int iterations = 0;
    bool converged = false;
};

/// Alternating least squares over A given h and h given A. The residual is
/// non-increasing; the best iterate is returned when iters run out.
AlsResult alternating_ls_estimator(const CVec& y, Index m, Index length, Index burst, Field field, const CVec& init,
                                   int iters = 100, double tol = 1e-10);

/// sigma_v2 for a target SNR = sigma_a2 ||h||^2 / (m sigma_v2).
double sigma_v2_for_snr(const Channel& ch, double sigma_a2, double snr_db);
double snr_db(const Channel& ch, double sigma_a2, double sigma_v2);

struct RuleMse {
    Adjustment rule = Adjustment::NO;
    double mse = 0.0;
    double std_err = 0.0;
};

struct MseRow {
    double snr_db = 0.0;
    double sigma_v2 = 0.0;
    std::vector<RuleMse> rules;
    double trace_crb = 0.0;
    bool crb_bounded = false;
    Index trials = 0;
    Index nonconverged = 0;
    Index degenerate = 0;  ///< trials where an adjustment rule was undefined
};

/// One SNR point: estimator over cfg.trials bursts, MSE per adjustment rule
/// after sign/phase resolution, and tr(CRB_C) of the matching model.
MseRow mse_vs_crb_experiment(const ExperimentConfig& cfg);

}  // namespace blindcrb
