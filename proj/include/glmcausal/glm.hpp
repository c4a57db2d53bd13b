#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "glmcausal/dataset.hpp"

namespace glmc {

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Family { Gaussian, Binomial, Poisson };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

enum class Transform { Identity, Log, Standardize };

struct Term {
    std::string column;
    Transform transform = Transform::Identity;

    bool operator==(const Term&) const = default;
    std::string label() const;  // "col", "log(col)", "std(col)"
};

struct ModelSpec {
    std::string outcome;
    std::vector<Term> terms;
    Family family = Family::Gaussian;
};

// Per-term expansion metadata captured at training time, so new data is
// expanded with the same levels and standardization statistics.
struct TermInfo {
    Term term;
    bool categorical = false;
    std::vector<std::string> levels;  // first level is the reference
    double mean = 0.0;                // Transform::Standardize only
    double sd = 1.0;
};

struct DesignInfo {
    std::vector<TermInfo> terms;
    std::vector<std::string> column_names;  // intercept first
};

struct Design {
    Eigen::MatrixXd X;  // leading column of ones
    Eigen::VectorXd y;
    DesignInfo info;
};

struct FittedGlm {
    ModelSpec spec;
    DesignInfo design;
    Eigen::VectorXd beta;           // intercept first
    Eigen::MatrixXd covariance;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd fitted_means;   // training data, mean scale
    double log_lik = 0.0;
    double deviance = 0.0;
    double null_deviance = 0.0;  // deviance of the intercept-only mean
    Eigen::Index n = 0;
    Eigen::Index p = 0;             // estimated coefficients (incl. intercept)
    int iterations = 0;
    double final_step_norm = 0.0;
    bool converged = false;
    bool separation_warning = false;

    const std::string& coef_name(Eigen::Index j) const { return design.column_names[j]; }
};

// Validates the spec against the data and expands terms: intercept, then
// transforms / dummy indicators in spec order.
Design build_design(const Dataset& data, const ModelSpec& spec);

// Expands new data using training-time metadata (no response required).
Eigen::MatrixXd expand_design(const Dataset& data, const DesignInfo& info);

FittedGlm fit_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                   const std::vector<std::string>& column_names);
FittedGlm fit_glm(const Dataset& data, const ModelSpec& spec);

Eigen::VectorXd predict(const FittedGlm& fit, const Dataset& newdata);

// Family log-likelihood at given means (mean scale). Gaussian uses the
// profile MLE variance deviance/n.
double family_log_lik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, Family family);
double family_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, Family family);
double log_lik_at(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                  const Eigen::VectorXd& beta);
Eigen::VectorXd inverse_link(const Eigen::VectorXd& eta, Family family);

// The gaussian likelihood carries a variance parameter, so its AIC/BIC count
// one extra parameter beyond the coefficients.
double aic(const FittedGlm& fit);
double bic(const FittedGlm& fit);
double adjusted_r2(const FittedGlm& fit);  // gaussian only

}  // namespace glmc
