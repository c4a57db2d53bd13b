#include "glmcausal/predict.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "glmcausal/rng.hpp"

namespace glmc {

std::string criterion_name(Criterion c) { return c == Criterion::Aic ? "aic" : "bic"; }

double criterion_value(const FittedGlm& fit, Criterion c) {
    return c == Criterion::Aic ? aic(fit) : bic(fit);
}

std::string metric_name(Metric m) { return m == Metric::Rmse ? "rmse" : "auc"; }

namespace {

std::string terms_label(const std::vector<Term>& terms) {
    if (terms.empty()) return "(intercept only)";
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out += " + ";
        out += t.label();
    }
    return out;
}

Dataset subset_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
    std::vector<Column> cols;
    cols.reserve(data.n_cols());
    for (const auto& c : data.columns()) {
        Column out;
        out.name = c.name;
        out.kind = c.kind;
        if (c.kind == ColumnKind::Numeric) {
            out.values.reserve(rows.size());
            for (std::size_t r : rows) out.values.push_back(c.values[r]);
        } else {
            out.levels = c.levels;
            out.codes.reserve(rows.size());
            for (std::size_t r : rows) out.codes.push_back(c.codes[r]);
        }
        cols.push_back(std::move(out));
    }
    return Dataset(std::move(cols));
}

// Shuffled fold assignment: fold f holds indices [offsets[f], offsets[f+1]).
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw FitError("cross-validation requires 2 <= k <= n");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t base = n / k, extra = n % k, pos = 0;
    for (int f = 0; f < k; ++f) {
        std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        folds[f].assign(order.begin() + pos, order.begin() + pos + size);
        pos += size;
    }
    return folds;
}

}  // namespace

// ---------------------------------------------------------------------------
// Subset and stepwise selection

SelectionResult best_subsets(const Dataset& data, const std::string& outcome,
                             const std::vector<Term>& candidates, Family family,
                             Criterion criterion) {
    if (candidates.size() > 20)
        throw FitError("best subsets is limited to 20 candidates (got " +
                       std::to_string(candidates.size()) + ")");
    SelectionResult result;
    result.method = SelectionMethod::BestSubsets;
    result.criterion = criterion_name(criterion);

    double best = std::numeric_limits<double>::infinity();
    std::vector<Term> best_terms;
    bool any_ok = false;

    // Subsets by size, then candidate order within a size; the first strict
    // improvement wins, which realizes the documented tie-break.
    const int k = static_cast<int>(candidates.size());
    for (int size = 0; size <= k; ++size) {
        std::vector<int> pick(size);
        std::function<void(int, int)> choose = [&](int start, int depth) {
            if (depth == size) {
                std::vector<Term> terms;
                for (int i : pick) terms.push_back(candidates[i]);
                TraceEntry entry;
                entry.terms = terms;
                try {
                    FittedGlm fit = fit_glm(data, {outcome, terms, family});
                    entry.criterion = criterion_value(fit, criterion);
                    if (entry.criterion < best) {
                        best = entry.criterion;
                        best_terms = terms;
                    }
                    any_ok = true;
                } catch (const FitError& e) {
                    entry.ok = false;
                    entry.note = e.what();
                    result.warnings.push_back("skipped " + terms_label(terms) + ": " +
                                              e.what());
                }
                result.trace.push_back(std::move(entry));
                return;
            }
            for (int i = start; i < k; ++i) {
                pick[depth] = i;
                choose(i + 1, depth + 1);
            }
        };
        choose(0, 0);
    }
    if (!any_ok) throw FitError("no candidate subset could be fitted");
    result.chosen = {outcome, best_terms, family};
    result.criterion_value = best;
    return result;
}

SelectionResult stepwise(const Dataset& data, const std::string& outcome,
                         const std::vector<Term>& candidates, Family family,
                         Direction direction, Criterion criterion) {
    SelectionResult result;
    result.method =
        direction == Direction::Forward ? SelectionMethod::Forward : SelectionMethod::Backward;
    result.criterion = criterion_name(criterion);

    std::vector<Term> current =
        direction == Direction::Forward ? std::vector<Term>{} : candidates;
    FittedGlm fit = fit_glm(data, {outcome, current, family});  // backward: full model
    double current_value = criterion_value(fit, criterion);
    result.trace.push_back({current, current_value, true, "start"});

    while (true) {
        double best_move = current_value;
        std::vector<Term> best_terms;
        bool moved = false;
        if (direction == Direction::Forward) {
            for (const auto& cand : candidates) {
                if (std::find(current.begin(), current.end(), cand) != current.end()) continue;
                std::vector<Term> trial = current;
                trial.push_back(cand);
                TraceEntry entry;
                entry.terms = trial;
                try {
                    double v = criterion_value(fit_glm(data, {outcome, trial, family}), criterion);
                    entry.criterion = v;
                    if (v < best_move) {
                        best_move = v;
                        best_terms = trial;
                        moved = true;
                    }
                } catch (const FitError& e) {
                    entry.ok = false;
                    entry.note = e.what();
                    result.warnings.push_back("skipped " + terms_label(trial) + ": " + e.what());
                }
                result.trace.push_back(std::move(entry));
            }
        } else {
            for (std::size_t drop = 0; drop < current.size(); ++drop) {
                std::vector<Term> trial;
                for (std::size_t i = 0; i < current.size(); ++i)
                    if (i != drop) trial.push_back(current[i]);
                TraceEntry entry;
                entry.terms = trial;
                try {
                    double v = criterion_value(fit_glm(data, {outcome, trial, family}), criterion);
                    entry.criterion = v;
                    if (v < best_move) {
                        best_move = v;
                        best_terms = trial;
                        moved = true;
                    }
                } catch (const FitError& e) {
                    entry.ok = false;
                    entry.note = e.what();
                    result.warnings.push_back("skipped " + terms_label(trial) + ": " + e.what());
                }
                result.trace.push_back(std::move(entry));
            }
        }
        if (!moved) break;
        current = best_terms;
        current_value = best_move;
    }
    result.chosen = {outcome, current, family};
    result.criterion_value = current_value;
    return result;
}

// ---------------------------------------------------------------------------
// LASSO

namespace {

double soft_threshold(double rho, double lambda) {
    if (rho > lambda) return rho - lambda;
    if (rho < -lambda) return rho + lambda;
    return 0.0;
}

struct LassoProblem {
    Eigen::MatrixXd Xs;       // standardized covariates (unit 1/n variance)
    Eigen::VectorXd yc;       // centered response
    Eigen::VectorXd means;    // covariate means
    Eigen::VectorXd sds;      // covariate sds (1/n)
    double y_mean = 0.0;
    std::vector<std::string> names;
    DesignInfo info;          // raw (unstandardized) expansion metadata
};

LassoProblem standardize_problem(const Dataset& data, const std::string& outcome,
                                 const std::vector<Term>& candidates) {
    if (data.n_rows() < 2) throw FitError("LASSO requires at least 2 rows");
    Design design = build_design(data, {outcome, candidates, Family::Gaussian});
    const Eigen::Index n = design.X.rows();
    const Eigen::Index k = design.X.cols() - 1;  // drop the intercept column

    LassoProblem prob;
    prob.info = design.info;
    prob.names.assign(design.info.column_names.begin() + 1, design.info.column_names.end());
    prob.Xs.resize(n, k);
    prob.means.resize(k);
    prob.sds.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::VectorXd col = design.X.col(j + 1);
        double m = col.mean();
        double sd = std::sqrt((col.array() - m).square().sum() / static_cast<double>(n));
        if (sd <= 0.0)
            throw FitError("zero-variance covariate '" + prob.names[j] + "'");
        prob.means[j] = m;
        prob.sds[j] = sd;
        prob.Xs.col(j) = (col.array() - m) / sd;
    }
    prob.y_mean = design.y.mean();
    prob.yc = design.y.array() - prob.y_mean;
    return prob;
}

// One coordinate-descent solve at fixed lambda, warm-started from beta.
void coordinate_descent(const LassoProblem& prob, double lambda, Eigen::VectorXd& beta,
                        Eigen::VectorXd& residual) {
    constexpr double kTol = 1e-7;
    constexpr int kMaxSweeps = 100000;
    const double n = static_cast<double>(prob.Xs.rows());
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            double old = beta[j];
            // With unit-variance columns the coordinate update is a pure
            // soft-threshold of the partial correlation.
            double rho = prob.Xs.col(j).dot(residual) / n + old;
            double updated = soft_threshold(rho, lambda);
            if (updated != old) {
                residual -= (updated - old) * prob.Xs.col(j);
                beta[j] = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        if (max_change < kTol) return;
    }
    throw FitError("LASSO coordinate descent failed to converge");
}

std::vector<double> auto_lambda_grid(const LassoProblem& prob) {
    const double n = static_cast<double>(prob.Xs.rows());
    double lambda_max = 0.0;
    for (Eigen::Index j = 0; j < prob.Xs.cols(); ++j)
        lambda_max = std::max(lambda_max, std::abs(prob.Xs.col(j).dot(prob.yc)) / n);
    if (lambda_max <= 0.0) lambda_max = 1e-12;
    constexpr int kGridSize = 100;
    std::vector<double> grid(kGridSize);
    double log_max = std::log(lambda_max);
    double log_min = std::log(0.001 * lambda_max);
    for (int i = 0; i < kGridSize; ++i)
        grid[i] = std::exp(log_max + (log_min - log_max) * i / (kGridSize - 1));
    return grid;
}

LassoPath lasso_path_impl(const LassoProblem& prob,
                          const std::optional<std::vector<double>>& lambdas) {
    LassoPath path;
    path.names = prob.names;
    path.lambdas = lambdas ? *lambdas : auto_lambda_grid(prob);
    if (path.lambdas.empty()) throw FitError("empty lambda grid");
    for (std::size_t i = 1; i < path.lambdas.size(); ++i)
        if (path.lambdas[i] > path.lambdas[i - 1])
            throw FitError("lambda grid must be non-increasing");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(prob.Xs.cols());
    Eigen::VectorXd residual = prob.yc;
    for (double lambda : path.lambdas) {
        coordinate_descent(prob, lambda, beta, residual);
        path.beta_std.push_back(beta);
        Eigen::VectorXd orig(beta.size() + 1);
        double intercept = prob.y_mean;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            orig[j + 1] = beta[j] / prob.sds[j];
            intercept -= orig[j + 1] * prob.means[j];
        }
        orig[0] = intercept;
        path.beta_orig.push_back(std::move(orig));
        std::vector<int> active;
        for (Eigen::Index j = 0; j < beta.size(); ++j)
            if (beta[j] != 0.0) active.push_back(static_cast<int>(j));
        path.active_sets.push_back(std::move(active));
    }
    return path;
}

}  // namespace

LassoPath lasso_path(const Dataset& data, const std::string& outcome,
                     const std::vector<Term>& candidates,
                     const std::optional<std::vector<double>>& lambdas) {
    return lasso_path_impl(standardize_problem(data, outcome, candidates), lambdas);
}

// ---------------------------------------------------------------------------
// Evaluation

double rmse(const std::vector<double>& predictions, const std::vector<double>& observations) {
    if (predictions.size() != observations.size())
        throw FitError("rmse: length mismatch (" + std::to_string(predictions.size()) +
                       " vs " + std::to_string(observations.size()) + ")");
    if (predictions.empty()) throw FitError("rmse: empty input");
    double ss = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double r = predictions[i] - observations[i];
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(predictions.size()));
}

double roc_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size()) throw FitError("roc_auc: length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (double l : labels) {
        if (l == 1.0)
            ++n_pos;
        else if (l == 0.0)
            ++n_neg;
        else
            throw FitError("roc_auc: labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw FitError("roc_auc: both classes must be present");

    // Mann-Whitney via mid-ranks: ties get the average rank.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1.0) rank_sum_pos += mid_rank;
        i = j;
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalReport cross_validate(const Dataset& data, const ModelSpec& spec, int k,
                          std::uint64_t seed, Metric metric) {
    if (metric == Metric::Auc && spec.family != Family::Binomial)
        throw FitError("auc requires the binomial family");
    auto folds = make_folds(data.n_rows(), k, seed);

    double total = 0.0;
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_rows;
        for (int g = 0; g < k; ++g)
            if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
        std::sort(train_rows.begin(), train_rows.end());
        Dataset train = subset_rows(data, train_rows);
        Dataset test = subset_rows(data, folds[f]);

        FittedGlm fit = fit_glm(train, spec);
        Eigen::VectorXd pred = predict(fit, test);
        const Column& yc = test.column(spec.outcome);
        std::vector<double> p(pred.data(), pred.data() + pred.size());
        if (metric == Metric::Rmse) {
            total += rmse(p, yc.values);
        } else {
            total += roc_auc(p, yc.values);
        }
    }
    EvalReport report;
    report.metric = metric_name(metric);
    report.value = total / k;
    report.k = k;
    report.seed = seed;
    report.source = "cv(k=" + std::to_string(k) + ",seed=" + std::to_string(seed) + ")";
    return report;
}

std::vector<double> cross_validate_lasso(const Dataset& data, const std::string& outcome,
                                         const std::vector<Term>& candidates,
                                         const std::vector<double>& lambdas, int k,
                                         std::uint64_t seed) {
    auto folds = make_folds(data.n_rows(), k, seed);
    std::vector<double> mean_rmse(lambdas.size(), 0.0);
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_rows;
        for (int g = 0; g < k; ++g)
            if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
        std::sort(train_rows.begin(), train_rows.end());
        Dataset train = subset_rows(data, train_rows);
        Dataset test = subset_rows(data, folds[f]);

        LassoProblem prob = standardize_problem(train, outcome, candidates);
        LassoPath path = lasso_path_impl(prob, lambdas);
        Eigen::MatrixXd Xt = expand_design(test, prob.info);
        const Column& yc = test.column(outcome);
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            Eigen::VectorXd pred = Xt * path.beta_orig[l];
            std::vector<double> p(pred.data(), pred.data() + pred.size());
            mean_rmse[l] += rmse(p, yc.values);
        }
    }
    for (auto& v : mean_rmse) v /= k;
    return mean_rmse;
}

SelectionResult lasso_then_backward(const Dataset& data, const std::string& outcome,
                                    const std::vector<Term>& candidates, Family family,
                                    Criterion criterion, int k, std::uint64_t seed,
                                    bool one_se) {
    if (family != Family::Gaussian)
        throw FitError("the LASSO pipeline supports the gaussian family only");
    LassoProblem prob = standardize_problem(data, outcome, candidates);
    LassoPath path = lasso_path_impl(prob, std::nullopt);
    std::vector<double> cv = cross_validate_lasso(data, outcome, candidates, path.lambdas,
                                                  k, seed);

    std::size_t best = 0;
    for (std::size_t l = 1; l < cv.size(); ++l)
        if (cv[l] < cv[best]) best = l;
    std::size_t chosen_lambda = best;
    if (one_se) {
        // Per-fold spread around the CV-best value; pick the sparsest lambda
        // whose mean CV error is within one SE of the minimum.
        double se = 0.0;
        {
            auto folds = make_folds(data.n_rows(), k, seed);
            std::vector<double> fold_rmse;
            for (int f = 0; f < k; ++f) {
                std::vector<std::size_t> train_rows;
                for (int g = 0; g < k; ++g)
                    if (g != f)
                        train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
                std::sort(train_rows.begin(), train_rows.end());
                Dataset train = subset_rows(data, train_rows);
                Dataset test = subset_rows(data, folds[f]);
                LassoProblem fp = standardize_problem(train, outcome, candidates);
                LassoPath fpath = lasso_path_impl(fp, std::vector<double>{path.lambdas[best]});
                Eigen::MatrixXd Xt = expand_design(test, fp.info);
                Eigen::VectorXd pred = Xt * fpath.beta_orig[0];
                std::vector<double> p(pred.data(), pred.data() + pred.size());
                fold_rmse.push_back(rmse(p, test.column(outcome).values));
            }
            double mean = std::accumulate(fold_rmse.begin(), fold_rmse.end(), 0.0) / k;
            double var = 0.0;
            for (double v : fold_rmse) var += (v - mean) * (v - mean);
            se = std::sqrt(var / (k - 1)) / std::sqrt(static_cast<double>(k));
        }
        for (std::size_t l = 0; l <= best; ++l)
            if (cv[l] <= cv[best] + se) {
                chosen_lambda = l;
                break;
            }
    }

    // Map active penalized columns back to candidate terms.
    std::vector<bool> term_active(candidates.size(), false);
    {
        std::vector<int> col_to_term;
        for (std::size_t t = 0; t < prob.info.terms.size(); ++t) {
            const TermInfo& ti = prob.info.terms[t];
            std::size_t width = ti.categorical ? ti.levels.size() - 1 : 1;
            for (std::size_t w = 0; w < width; ++w) col_to_term.push_back(static_cast<int>(t));
        }
        for (int j : path.active_sets[chosen_lambda]) term_active[col_to_term[j]] = true;
    }
    std::vector<Term> active_terms;
    for (std::size_t t = 0; t < candidates.size(); ++t)
        if (term_active[t]) active_terms.push_back(candidates[t]);

    SelectionResult result;
    result.method = SelectionMethod::LassoBackward;
    result.criterion = criterion_name(criterion);
    TraceEntry lasso_stage;
    lasso_stage.terms = active_terms;
    lasso_stage.note = "lasso stage: lambda=" + std::to_string(path.lambdas[chosen_lambda]) +
                       ", cv_rmse=" + std::to_string(cv[chosen_lambda]);
    result.trace.push_back(lasso_stage);

    if (active_terms.empty()) {
        result.warnings.push_back("LASSO selected no covariates; returning intercept-only");
        FittedGlm fit = fit_glm(data, {outcome, {}, family});
        result.chosen = {outcome, {}, family};
        result.criterion_value = criterion_value(fit, criterion);
        result.trace.push_back({{}, result.criterion_value, true, "intercept-only"});
        return result;
    }

    SelectionResult backward =
        stepwise(data, outcome, active_terms, family, Direction::Backward, criterion);
    result.chosen = backward.chosen;
    result.criterion_value = backward.criterion_value;
    for (auto& e : backward.trace) result.trace.push_back(std::move(e));
    for (auto& w : backward.warnings) result.warnings.push_back(std::move(w));
    return result;
}

}  // namespace glmc
