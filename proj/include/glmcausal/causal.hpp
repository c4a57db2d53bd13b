#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "glmcausal/dag.hpp"
#include "glmcausal/dataset.hpp"
#include "glmcausal/glm.hpp"

namespace glmc {

struct CausalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No valid adjustment set exists; `unblockable_paths` names the open
// spurious paths no candidate set can block.
struct NoValidAdjustmentSet : CausalError {
    NoValidAdjustmentSet(const std::string& msg, std::vector<std::string> paths)
        : CausalError(msg), unblockable_paths(std::move(paths)) {}
    std::vector<std::string> unblockable_paths;
};

// A user-supplied set failed one of the three adjustment conditions; the
// tool refuses to fit a known-invalid causal model.
struct InvalidAdjustmentOverride : CausalError {
    InvalidAdjustmentOverride(const std::string& msg, int condition,
                              std::string witnessing_path)
        : CausalError(msg), condition(condition), witnessing_path(std::move(witnessing_path)) {}
    int condition;
    std::string witnessing_path;
};

struct EffectReport {
    std::string exposure;
    std::string outcome;
    double estimate = 0.0;       // exposure coefficient, link scale
    double std_error = 0.0;
    double ci_low = 0.0;         // 95% Wald interval
    double ci_high = 0.0;
    std::string scale;           // "identity", "log-odds", or "log"
    std::vector<std::string> adjustment_set;
    // Retained for diagnostics only; every entry carries the fixed label
    // "adjustment - not causally interpretable" when rendered.
    std::vector<std::pair<std::string, double>> non_causal_coefficients;
    Family family = Family::Gaussian;
    std::string dag_fingerprint;
    std::vector<std::string> warnings;
};

// Fits outcome ~ exposure + adjustment set. The default set is the first
// minimal adjustment set in deterministic order; an override must pass
// check_adjustment or the call errors.
EffectReport estimate_total_effect(const Dag& dag, const Dataset& data, Family family,
                                   const std::optional<std::set<int>>& set_override =
                                       std::nullopt);

// Text output leads with the single causal estimate; covariate coefficients
// appear only under an explicit non-causal section.
std::string render_effect_report_text(const EffectReport& report);
nlohmann::ordered_json effect_report_to_json(const EffectReport& report);
EffectReport effect_report_from_json(const nlohmann::ordered_json& j);

struct IndependenceTestResult {
    std::string x;
    std::string y;
    std::vector<std::string> z;
    double statistic = 0.0;  // Fisher z
    double p_value = 1.0;
    bool consistent = false;  // p >= alpha
};

// Tests each implied conditional independency by zero partial correlation
// (Fisher z transform). All DAG nodes must be numeric data columns.
std::vector<IndependenceTestResult> test_implied_independencies(const Dag& dag,
                                                                const Dataset& data,
                                                                double alpha,
                                                                int max_set_size);

// Partial correlation of x and y given z (residual-on-residual Pearson r),
// with the Fisher z statistic and two-sided p-value.
struct PartialCorrelation {
    double r;
    double statistic;
    double p_value;
};
PartialCorrelation partial_correlation_test(const Dataset& data, const std::string& x,
                                            const std::string& y,
                                            const std::vector<std::string>& z);

}  // namespace glmc
