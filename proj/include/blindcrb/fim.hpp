#pragma once

// Fisher information matrices for the Gaussian observation model
// Y ~ N(m_Y(theta), C_YY(theta)), specialised to blind FIR multichannel
// estimation with deterministic or Gaussian symbols.
//
// Every FimResult carries two views: `j`, the FIM in the native field of its
// parameters (complex J_theta_theta for complex parameters), and `real`, the
// FIM of the real parameter vector in which each complex block of length n
// is laid out as [Re; Im] (2n coordinates) and real blocks stay as they are.

#include <optional>
#include <string>
#include <vector>

#include "blindcrb/channel.hpp"
#include "blindcrb/linalg.hpp"

namespace blindcrb {

enum class ParamKind { Symbols, Channel, NoiseVariance, Generic };
enum class Model { Deterministic, Gaussian, Generic };

const char* to_string(Model model);

struct ParamBlock {
    std::string name;
    ParamKind kind = ParamKind::Generic;
    Index length = 0;
    Field field = Field::Real;
};

class ParamLayout {
public:
    ParamLayout() = default;
    explicit ParamLayout(std::vector<ParamBlock> blocks) : blocks_(std::move(blocks)) {}

    const std::vector<ParamBlock>& blocks() const { return blocks_; }
    Index dim() const;
    const ParamBlock& block(const std::string& name) const;
    Index offset(const std::string& name) const;
    bool has(const std::string& name) const;

    /// Layout of the real representation (complex blocks doubled).
    ParamLayout realified() const;
    /// Maps a native parameter vector to real coordinates of realified().
    RVec to_real(const CVec& theta) const;
    CVec from_real(const RVec& theta_r) const;

private:
    std::vector<ParamBlock> blocks_;
};

struct FimResult {
    Model model = Model::Generic;
    Field field = Field::Real;
    Mat j;
    std::optional<CMat> cross;  ///< J_theta_theta*, complex Gaussian models only
    ParamLayout layout;
    RMat real;
    ParamLayout real_layout;
};

/// Mean/covariance of Y and their parameter derivatives.
///
/// Real field: d_mean[i] = dm/dtheta_i and d_cov[i] = dC/dtheta_i.
/// Complex field: d_mean[i] = dm/dtheta_i (m holomorphic) and d_cov[i] = dC/dtheta_i^*.
/// Either list may be empty when that moment does not depend on theta.
struct MomentStack {
    CVec mean;
    CMat cov;
    std::vector<CVec> d_mean;
    std::vector<CMat> d_cov;

    Index params() const;
};

struct GaussianModelConfig {
    double sigma_a2 = 1.0;
    double sigma_v2 = 0.1;
    Index burst = 0;  ///< M; 0 means "N + 2"

    Index burst_for(const Channel& ch) const { return burst > 0 ? burst : ch.length() + 2; }
};

struct NamedVector {
    std::string name;
    RVec vector;
};

struct PredictedMatch {
    std::string name;
    double angle = 0.0;  ///< principal angle to the computed null space, radians
    bool matched = false;
};

struct SingularityReport {
    Index rank = 0;
    Index nullity = 0;
    RMat null_basis;
    std::vector<PredictedMatch> matches;
    double relative_gap = 0.0;  ///< smallest retained eigenvalue / largest
};

inline constexpr double kNullAngleMatch = 1e-6;

/// Real field: Slepian-Bangs elementwise formula with 1/2 on the covariance
/// term. Complex field: the pair (J, J*) for a circular complex Gaussian,
/// realified through realify_fim.
FimResult gaussian_fim_generic(const MomentStack& stack, Field field, std::optional<ParamLayout> layout = std::nullopt);

/// (1/sigma_v2) [T(h) calA]^H [T(h) calA] over theta = [A; h].
FimResult deterministic_fim(const Channel& ch, const SymbolBurst& a, double sigma_v2, Index burst);

struct ReducedFim {
    Mat j;
    bool toeplitz_rank_deficient = false;
};

/// J_hh(theta) = (1/sigma_v2) calA^H P_perp_{T(h)} calA.
ReducedFim deterministic_reduced_fim(const Channel& ch, const SymbolBurst& a, double sigma_v2, Index burst);

/// theta = [h; sigma_v2] with complex symbols; real view over [Re h; Im h; sigma_v2].
FimResult gaussian_fim_complex(const Channel& ch, const GaussianModelConfig& cfg);

/// theta = [h; sigma_v2] with real symbols and a real channel.
FimResult gaussian_fim_real(const Channel& ch, const GaussianModelConfig& cfg);

/// Dispatches on the channel field.
FimResult gaussian_fim(const Channel& ch, const GaussianModelConfig& cfg);

/// Real-coordinate view of a native FIM with no J_theta_theta* term
/// (deterministic models): [Re; Im] layout for complex matrices.
RMat real_view(const Mat& j);

/// Schur complement of the real FIM onto the named block. Throws SingularFim
/// naming the nuisance blocks when they are not invertible.
RMat schur_reduce(const FimResult& fim, const std::string& keep);

SingularityReport analyze_singularities(const RMat& j, const std::vector<NamedVector>& predicted = {},
                                        double tol = kFimRankTol);
SingularityReport analyze_singularities(const FimResult& fim, const std::vector<NamedVector>& predicted = {},
                                        double tol = kFimRankTol);

// Moments, for identifiability checks.

CVec deterministic_mean(const Channel& ch, const SymbolBurst& a, Index burst);
CMat gaussian_covariance(const Channel& ch, const GaussianModelConfig& cfg);

/// Real-coordinate null directions predicted by the blind ambiguities:
/// [-A; h] (and j[-A; h] for complex) in the real layout of deterministic_fim.
std::vector<NamedVector> deterministic_predicted_nulls(const Channel& ch, const SymbolBurst& a);
/// h_R and h_S2 = [-Im h; Re h] (real channels: h only) in channel coordinates.
std::vector<NamedVector> channel_predicted_nulls(const Channel& ch);

struct PerturbationSweep {
    std::vector<double> eps;
    std::vector<double> change;
    double slope = 0.0;  ///< least-squares slope of log(change) against log(eps)
};

/// ||m_Y(theta + eps d) - m_Y(theta)|| over eps; d in deterministic_fim real coordinates.
PerturbationSweep deterministic_perturbation_sweep(const Channel& ch, const SymbolBurst& a, Index burst,
                                                   const RVec& direction, const std::vector<double>& eps);
/// ||C_YY(theta + eps d) - C_YY(theta)||_F over eps; d in gaussian_fim real coordinates.
PerturbationSweep gaussian_perturbation_sweep(const Channel& ch, const GaussianModelConfig& cfg,
                                              const RVec& direction, const std::vector<double>& eps);

std::vector<double> log_spaced(double lo, double hi, int count);

}  // namespace blindcrb
