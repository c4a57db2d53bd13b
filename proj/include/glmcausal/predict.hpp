#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glmcausal/dataset.hpp"
#include "glmcausal/glm.hpp"

namespace glmc {

enum class Criterion { Aic, Bic };
std::string criterion_name(Criterion c);
double criterion_value(const FittedGlm& fit, Criterion c);

enum class SelectionMethod { BestSubsets, Forward, Backward, Lasso, LassoBackward };
enum class Direction { Forward, Backward };

struct TraceEntry {
    std::vector<Term> terms;
    double criterion = 0.0;
    bool ok = true;
    std::string note;
};

struct SelectionResult {
    ModelSpec chosen;
    std::string criterion;
    double criterion_value = 0.0;
    std::vector<TraceEntry> trace;
    SelectionMethod method = SelectionMethod::BestSubsets;
    std::vector<std::string> warnings;
};

// Exhaustive search over all 2^k candidate subsets (k <= 20). Ties break
// toward fewer terms, then earlier candidate order.
SelectionResult best_subsets(const Dataset& data, const std::string& outcome,
                             const std::vector<Term>& candidates, Family family,
                             Criterion criterion);

// Greedy single-term add (forward, from intercept-only) or drop (backward,
// from the full model); stops when no move improves the criterion.
SelectionResult stepwise(const Dataset& data, const std::string& outcome,
                         const std::vector<Term>& candidates, Family family,
                         Direction direction, Criterion criterion);

struct LassoPath {
    std::vector<std::string> names;            // penalized columns
    std::vector<double> lambdas;               // decreasing
    std::vector<Eigen::VectorXd> beta_std;     // standardized scale
    std::vector<Eigen::VectorXd> beta_orig;    // original scale, intercept first
    std::vector<std::vector<int>> active_sets; // indices into names
};

// Gaussian LASSO by cyclic coordinate descent on standardized covariates,
// objective (1/2n) sum (y - Xb)^2 + lambda sum |b_j|; warm starts along the
// grid. Auto grid: 100 log-spaced values from lambda_max down to
// 0.001 * lambda_max.
LassoPath lasso_path(const Dataset& data, const std::string& outcome,
                     const std::vector<Term>& candidates,
                     const std::optional<std::vector<double>>& lambdas = std::nullopt);

enum class Metric { Rmse, Auc };
std::string metric_name(Metric m);

struct EvalReport {
    std::string metric;
    double value = 0.0;
    std::string source;  // "training", "cv(k=5,seed=42)", or a dataset id
    int k = 0;
    std::uint64_t seed = 0;
};

// Seeded Fisher-Yates shuffle into k near-equal folds; reports the mean
// held-out metric. Deterministic for a fixed seed.
EvalReport cross_validate(const Dataset& data, const ModelSpec& spec, int k,
                          std::uint64_t seed, Metric metric);

// Mean held-out RMSE for each lambda of the path (gaussian LASSO).
std::vector<double> cross_validate_lasso(const Dataset& data, const std::string& outcome,
                                         const std::vector<Term>& candidates,
                                         const std::vector<double>& lambdas, int k,
                                         std::uint64_t seed);

// LASSO active set at the CV-best lambda, then backward stepwise on it.
// one_se selects the sparsest lambda within one standard error of the best.
SelectionResult lasso_then_backward(const Dataset& data, const std::string& outcome,
                                    const std::vector<Term>& candidates, Family family,
                                    Criterion criterion, int k = 5,
                                    std::uint64_t seed = 42, bool one_se = false);

// Mann-Whitney rank AUC; ties contribute 1/2.
double roc_auc(const std::vector<double>& scores, const std::vector<double>& labels);

double rmse(const std::vector<double>& predictions, const std::vector<double>& observations);

}  // namespace glmc
