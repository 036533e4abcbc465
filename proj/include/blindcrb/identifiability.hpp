#pragma once

// Rule-based identifiability verdicts and FIM-nullity predictions, and their
// cross-check against a computed FIM rank.

#include <optional>
#include <string>
#include <vector>

#include "blindcrb/channel.hpp"
#include "blindcrb/fim.hpp"

namespace blindcrb {

enum class Ambiguity { Scale, Phase, Sign, Full, No, Indeterminate };

const char* to_string(Ambiguity a);

struct IdentifiabilityVerdict {
    Model model = Model::Deterministic;
    Field field = Field::Real;
    Ambiguity identifiable_up_to = Ambiguity::Indeterminate;
    /// Predicted nullity of the real-coordinate FIM (deterministic: over
    /// [A; h]; Gaussian: over [h; sigma_v2]). Empty when no rule applies.
    std::optional<Index> predicted_nullity;
    /// Deterministic only: nullity of the reduced FIM J_hh.
    std::optional<Index> predicted_reduced_nullity;
    Index n_i = 0;
    Index n_c = 1;
    std::vector<std::string> reasons;
    bool depends_on_min_irreducible_burst = false;
};

/// symbols (optional) enables the full-column-rank check on calA.
IdentifiabilityVerdict deterministic_verdict(const Channel& ch, Index burst,
                                             const std::optional<SymbolBurst>& symbols = std::nullopt,
                                             double zero_tol = 1e-6);

struct GaussianVerdictOptions {
    /// Minimal burst of the irreducible part; defaults to N_I.
    std::optional<Index> min_irreducible_burst;
    double zero_tol = 1e-6;
};

IdentifiabilityVerdict gaussian_verdict(const Channel& ch, const GaussianModelConfig& cfg,
                                        const GaussianVerdictOptions& opts = {});

struct ConsistencyRecord {
    bool pass = false;
    std::optional<Index> predicted;
    Index computed = 0;
    std::string diagnostic;
};

/// Passes iff the predicted nullity equals the computed one. Verdicts without
/// a prediction never pass; their diagnostic reports the computed rank.
ConsistencyRecord verdict_vs_fim(const IdentifiabilityVerdict& v, const SingularityReport& report,
                                 const std::string& context = "");

}  // namespace blindcrb
