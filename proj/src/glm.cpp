#include "glmcausal/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace glmc {

namespace {

constexpr double kProbEps = 1e-12;
constexpr double kDevianceTol = 1e-8;
constexpr int kMaxIterations = 100;
constexpr int kMaxHalvings = 30;

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::Gaussian: return "gaussian";
        case Family::Binomial: return "binomial";
        case Family::Poisson: return "poisson";
    }
    return "gaussian";
}

Family family_from_name(const std::string& name) {
    if (name == "gaussian") return Family::Gaussian;
    if (name == "binomial") return Family::Binomial;
    if (name == "poisson") return Family::Poisson;
    throw FitError("unknown family '" + name + "'");
}

std::string Term::label() const {
    switch (transform) {
        case Transform::Identity: return column;
        case Transform::Log: return "log(" + column + ")";
        case Transform::Standardize: return "std(" + column + ")";
    }
    return column;
}

// ---------------------------------------------------------------------------
// Design construction

namespace {

void validate_outcome(const Dataset& data, const ModelSpec& spec) {
    const Column& yc = data.column(spec.outcome);
    if (yc.kind != ColumnKind::Numeric)
        throw FitError("outcome column '" + spec.outcome + "' must be numeric");
    for (const auto& t : spec.terms)
        if (t.column == spec.outcome)
            throw FitError("outcome '" + spec.outcome + "' also appears as a term");
    if (spec.family == Family::Binomial) {
        for (double v : yc.values)
            if (v != 0.0 && v != 1.0)
                throw FitError("binomial outcome '" + spec.outcome +
                               "' must contain only 0 and 1");
    } else if (spec.family == Family::Poisson) {
        for (double v : yc.values)
            if (v < 0.0 || v != std::floor(v))
                throw FitError("poisson outcome '" + spec.outcome +
                               "' must contain non-negative integers");
    }
}

}  // namespace

Design build_design(const Dataset& data, const ModelSpec& spec) {
    validate_outcome(data, spec);
    const Column& yc = data.column(spec.outcome);
    Eigen::Index n = static_cast<Eigen::Index>(data.n_rows());

    Design design;
    design.info.column_names.push_back("(Intercept)");
    std::vector<Eigen::VectorXd> cols;
    cols.push_back(Eigen::VectorXd::Ones(n));

    for (const auto& term : spec.terms) {
        const Column& c = data.column(term.column);
        TermInfo info;
        info.term = term;
        if (c.kind == ColumnKind::Categorical) {
            if (term.transform != Transform::Identity)
                throw FitError("transform on categorical column '" + term.column +
                               "' is not supported");
            info.categorical = true;
            info.levels = c.levels;
            for (std::size_t l = 1; l < c.levels.size(); ++l) {
                Eigen::VectorXd col(n);
                for (Eigen::Index i = 0; i < n; ++i)
                    col[i] = c.codes[i] == static_cast<int>(l) ? 1.0 : 0.0;
                cols.push_back(col);
                design.info.column_names.push_back(term.column + "=" + c.levels[l]);
            }
        } else {
            Eigen::VectorXd col =
                Eigen::Map<const Eigen::VectorXd>(c.values.data(), n);
            if (term.transform == Transform::Log) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (col[i] <= 0.0)
                        throw FitError("log transform of non-positive value in column '" +
                                       term.column + "'");
                    col[i] = std::log(col[i]);
                }
            } else if (term.transform == Transform::Standardize) {
                info.mean = col.mean();
                double var = (col.array() - info.mean).square().sum() /
                             static_cast<double>(n);
                info.sd = std::sqrt(var);
                if (info.sd <= 0.0)
                    throw FitError("cannot standardize constant column '" + term.column + "'");
                col = (col.array() - info.mean) / info.sd;
            }
            cols.push_back(col);
            design.info.column_names.push_back(term.label());
        }
        design.info.terms.push_back(std::move(info));
    }

    design.X.resize(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) design.X.col(j) = cols[j];
    design.y = Eigen::Map<const Eigen::VectorXd>(yc.values.data(), n);
    return design;
}

Eigen::MatrixXd expand_design(const Dataset& data, const DesignInfo& info) {
    Eigen::Index n = static_cast<Eigen::Index>(data.n_rows());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(info.column_names.size()));
    X.col(0).setOnes();
    Eigen::Index j = 1;
    for (const auto& ti : info.terms) {
        const Column& c = data.column(ti.term.column);
        if (ti.categorical) {
            if (c.kind != ColumnKind::Categorical)
                throw FitError("column '" + ti.term.column + "' was categorical at training time");
            // Map new codes onto training levels.
            std::vector<int> remap(c.levels.size(), -1);
            for (std::size_t l = 0; l < c.levels.size(); ++l) {
                auto it = std::find(ti.levels.begin(), ti.levels.end(), c.levels[l]);
                if (it == ti.levels.end())
                    throw FitError("unseen level '" + c.levels[l] + "' in column '" +
                                   ti.term.column + "'");
                remap[l] = static_cast<int>(it - ti.levels.begin());
            }
            for (std::size_t l = 1; l < ti.levels.size(); ++l) {
                for (Eigen::Index i = 0; i < n; ++i)
                    X(i, j) = remap[c.codes[i]] == static_cast<int>(l) ? 1.0 : 0.0;
                ++j;
            }
        } else {
            if (c.kind != ColumnKind::Numeric)
                throw FitError("column '" + ti.term.column + "' was numeric at training time");
            for (Eigen::Index i = 0; i < n; ++i) {
                double v = c.values[i];
                if (ti.term.transform == Transform::Log) {
                    if (v <= 0.0)
                        throw FitError("log transform of non-positive value in column '" +
                                       ti.term.column + "'");
                    v = std::log(v);
                } else if (ti.term.transform == Transform::Standardize) {
                    v = (v - ti.mean) / ti.sd;
                }
                X(i, j) = v;
            }
            ++j;
        }
    }
    return X;
}

// ---------------------------------------------------------------------------
// Families

Eigen::VectorXd inverse_link(const Eigen::VectorXd& eta, Family family) {
    switch (family) {
        case Family::Gaussian:
            return eta;
        case Family::Binomial:
            return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        case Family::Poisson:
            return eta.array().exp().matrix();
    }
    return eta;
}

double family_log_lik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, Family family) {
    const Eigen::Index n = y.size();
    switch (family) {
        case Family::Gaussian: {
            double rss = (y - mu).squaredNorm();
            double sigma2 = rss / static_cast<double>(n);
            if (sigma2 <= 0.0) return std::numeric_limits<double>::infinity();
            return -0.5 * static_cast<double>(n) *
                   (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
        }
        case Family::Binomial: {
            double ll = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                double p = clamp_prob(mu[i]);
                ll += y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
            }
            return ll;
        }
        case Family::Poisson: {
            double ll = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                ll += y[i] * std::log(mu[i]) - mu[i] - std::lgamma(y[i] + 1.0);
            return ll;
        }
    }
    return 0.0;
}

double family_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, Family family) {
    const Eigen::Index n = y.size();
    switch (family) {
        case Family::Gaussian:
            return (y - mu).squaredNorm();
        case Family::Binomial: {
            double dev = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                double p = clamp_prob(mu[i]);
                if (y[i] > 0.0) dev += y[i] * std::log(y[i] / p);
                if (y[i] < 1.0) dev += (1.0 - y[i]) * std::log((1.0 - y[i]) / (1.0 - p));
            }
            return 2.0 * dev;
        }
        case Family::Poisson: {
            double dev = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (y[i] > 0.0) dev += y[i] * std::log(y[i] / mu[i]);
                dev -= y[i] - mu[i];
            }
            return 2.0 * dev;
        }
    }
    return 0.0;
}

double log_lik_at(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                  const Eigen::VectorXd& beta) {
    return family_log_lik(y, inverse_link(X * beta, family), family);
}

// ---------------------------------------------------------------------------
// IRLS

namespace {

void check_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    // Rank tolerance: 1e-10 times the largest diagonal of R.
    double max_diag = qr.matrixR().diagonal().cwiseAbs().maxCoeff();
    Eigen::Index rank = 0;
    const auto& R = qr.matrixR();
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        if (std::abs(R(j, j)) > 1e-10 * max_diag) ++rank;
    if (rank < X.cols()) {
        auto perm = qr.colsPermutation().indices();
        std::string offender = names[perm[rank]];
        throw FitError("design matrix is rank deficient: column '" + offender +
                       "' is collinear with earlier columns");
    }
}

Eigen::VectorXd solve_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& w) {
    Eigen::VectorXd sw = w.array().sqrt();
    Eigen::MatrixXd Xw = sw.asDiagonal() * X;
    Eigen::VectorXd zw = sw.asDiagonal() * z;
    return Xw.householderQr().solve(zw);
}

void working_quantities(const Eigen::VectorXd& y, const Eigen::VectorXd& eta, Family family,
                        Eigen::VectorXd& mu, Eigen::VectorXd& w, Eigen::VectorXd& z) {
    const Eigen::Index n = y.size();
    mu = inverse_link(eta, family);
    w.resize(n);
    z.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (family) {
            case Family::Gaussian:
                w[i] = 1.0;
                z[i] = y[i];
                break;
            case Family::Binomial: {
                double m = clamp_prob(mu[i]);
                double dmu = m * (1.0 - m);
                w[i] = dmu;
                z[i] = eta[i] + (y[i] - m) / dmu;
                break;
            }
            case Family::Poisson: {
                double m = std::max(mu[i], kProbEps);
                w[i] = m;
                z[i] = eta[i] + (y[i] - m) / m;
                break;
            }
        }
    }
}

}  // namespace

FittedGlm fit_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Family family,
                   const std::vector<std::string>& column_names) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (n < p)
        throw FitError("cannot fit " + std::to_string(p) + " coefficients to " +
                       std::to_string(n) + " rows");
    check_rank(X, column_names);

    FittedGlm fit;
    fit.n = n;
    fit.p = p;
    fit.design.column_names = column_names;

    // Starting values.
    Eigen::VectorXd eta;
    switch (family) {
        case Family::Gaussian:
            eta = Eigen::VectorXd::Zero(n);
            break;
        case Family::Binomial:
            eta = ((y.array() + 0.5) / 2.0).matrix();
            eta = (eta.array() / (1.0 - eta.array())).log().matrix();
            break;
        case Family::Poisson:
            eta = (y.array() + 0.1).log().matrix();
            break;
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd mu, w, z;
    double deviance = std::numeric_limits<double>::infinity();
    double log_lik = -std::numeric_limits<double>::infinity();
    bool have_beta = false;

    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        working_quantities(y, eta, family, mu, w, z);
        Eigen::VectorXd beta_new = solve_wls(X, z, w);

        if (have_beta && family != Family::Gaussian) {
            // Step-halving keeps the log-likelihood non-decreasing.
            double ll_new = log_lik_at(X, y, family, beta_new);
            int halvings = 0;
            while (ll_new < log_lik && halvings < kMaxHalvings) {
                beta_new = 0.5 * (beta_new + beta);
                ll_new = log_lik_at(X, y, family, beta_new);
                ++halvings;
            }
        }

        fit.final_step_norm = have_beta ? (beta_new - beta).norm() : beta_new.norm();
        beta = beta_new;
        have_beta = true;
        eta = X * beta;
        mu = inverse_link(eta, family);
        double dev_new = family_deviance(y, mu, family);
        log_lik = family_log_lik(y, mu, family);
        fit.iterations = iter;

        if (family == Family::Gaussian) {
            // Identity link with unit weights: one WLS step is exactly OLS.
            deviance = dev_new;
            fit.converged = true;
            break;
        }
        if (std::abs(deviance - dev_new) / (std::abs(dev_new) + 0.1) < kDevianceTol) {
            deviance = dev_new;
            fit.converged = true;
            break;
        }
        deviance = dev_new;
    }
    if (!fit.converged)
        throw FitError("IRLS failed to converge in " + std::to_string(kMaxIterations) +
                       " iterations");

    fit.beta = beta;
    fit.fitted_means = mu;
    fit.deviance = deviance;
    fit.log_lik = log_lik;
    fit.null_deviance =
        family_deviance(y, Eigen::VectorXd::Constant(n, y.mean()), family);

    if (family == Family::Binomial) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (mu[i] < 1e-10 || mu[i] > 1.0 - 1e-10) {
                fit.separation_warning = true;
                break;
            }
    }

    if (n > p) {
        working_quantities(y, eta, family, mu, w, z);
        Eigen::MatrixXd XtWX = X.transpose() * w.asDiagonal() * X;
        double dispersion = 1.0;
        if (family == Family::Gaussian)
            dispersion = deviance / static_cast<double>(n - p);
        fit.covariance = dispersion * XtWX.inverse();
        fit.std_errors = fit.covariance.diagonal().cwiseSqrt();
    } else {
        fit.covariance = Eigen::MatrixXd::Zero(p, p);
        fit.std_errors = Eigen::VectorXd::Zero(p);
    }
    return fit;
}

FittedGlm fit_glm(const Dataset& data, const ModelSpec& spec) {
    Design design = build_design(data, spec);
    FittedGlm fit = fit_irls(design.X, design.y, spec.family, design.info.column_names);
    fit.spec = spec;
    fit.design = design.info;
    return fit;
}

Eigen::VectorXd predict(const FittedGlm& fit, const Dataset& newdata) {
    Eigen::MatrixXd X = expand_design(newdata, fit.design);
    return inverse_link(X * fit.beta, fit.spec.family);
}

// ---------------------------------------------------------------------------
// Summaries

namespace {

double effective_params(const FittedGlm& fit) {
    double p = static_cast<double>(fit.p);
    if (fit.spec.family == Family::Gaussian) p += 1.0;  // variance parameter
    return p;
}

}  // namespace

double aic(const FittedGlm& fit) { return 2.0 * effective_params(fit) - 2.0 * fit.log_lik; }

double bic(const FittedGlm& fit) {
    return effective_params(fit) * std::log(static_cast<double>(fit.n)) - 2.0 * fit.log_lik;
}

double adjusted_r2(const FittedGlm& fit) {
    if (fit.spec.family != Family::Gaussian)
        throw FitError("adjusted R^2 is defined for the gaussian family only");
    double tss = fit.null_deviance;
    double r2 = tss > 0.0 ? 1.0 - fit.deviance / tss : 1.0;
    double n = static_cast<double>(fit.n);
    double p = static_cast<double>(fit.p);
    return 1.0 - (1.0 - r2) * (n - 1.0) / (n - p);
}

}  // namespace glmc
