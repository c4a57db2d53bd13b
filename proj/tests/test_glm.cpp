#include <doctest.h>

#include <cmath>

#include "glmcausal/glm.hpp"
#include "glmcausal/rng.hpp"

using namespace glmc;

namespace {

Dataset make_data(std::vector<Column> cols) { return Dataset(std::move(cols)); }

Column num(std::string name, std::vector<double> v) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Numeric;
    c.values = std::move(v);
    return c;
}

Column cat(std::string name, std::vector<std::string> raw) {
    Column c;
    c.name = std::move(name);
    c.kind = ColumnKind::Categorical;
    for (auto& s : raw) {
        auto it = std::find(c.levels.begin(), c.levels.end(), s);
        if (it == c.levels.end()) {
            c.codes.push_back(static_cast<int>(c.levels.size()));
            c.levels.push_back(s);
        } else {
            c.codes.push_back(static_cast<int>(it - c.levels.begin()));
        }
    }
    return c;
}

}  // namespace

TEST_CASE("build_design expands dummies against the first level") {
    auto data = make_data({num("y", {1, 2, 3, 4}), cat("x", {"a", "b", "c", "a"})});
    ModelSpec spec{"y", {{"x", Transform::Identity}}, Family::Gaussian};
    Design d = build_design(data, spec);
    CHECK(d.info.column_names ==
          std::vector<std::string>{"(Intercept)", "x=b", "x=c"});
    CHECK(d.X.rows() == 4);
    CHECK(d.X.cols() == 3);
    CHECK(d.X(0, 1) == 0.0);
    CHECK(d.X(1, 1) == 1.0);
    CHECK(d.X(2, 2) == 1.0);
    CHECK(d.X(3, 1) == 0.0);
}

TEST_CASE("build_design applies log and std transforms") {
    double e = std::exp(1.0);
    auto data = make_data({num("y", {0, 0, 0}), num("x", {1.0, e, e * e})});
    ModelSpec spec{"y", {{"x", Transform::Log}}, Family::Gaussian};
    Design d = build_design(data, spec);
    CHECK(d.X(0, 1) == doctest::Approx(0.0));
    CHECK(d.X(1, 1) == doctest::Approx(1.0));
    CHECK(d.X(2, 1) == doctest::Approx(2.0));
    CHECK(d.info.column_names[1] == "log(x)");

    ModelSpec sspec{"y", {{"x", Transform::Standardize}}, Family::Gaussian};
    Design sd = build_design(data, sspec);
    CHECK(sd.X.col(1).mean() == doctest::Approx(0.0));
    CHECK(sd.X.col(1).squaredNorm() / 3.0 == doctest::Approx(1.0));
}

TEST_CASE("build_design rejects bad specs") {
    auto data = make_data({num("y", {1, 2}), num("x", {0.0, 1.0}),
                           cat("g", {"a", "b"})});
    CHECK_THROWS_AS(build_design(data, {"y", {{"x", Transform::Log}}, Family::Gaussian}),
                    FitError);  // log of 0
    CHECK_THROWS_AS(build_design(data, {"y", {{"g", Transform::Log}}, Family::Gaussian}),
                    FitError);  // transform on categorical
    CHECK_THROWS_AS(build_design(data, {"y", {{"y", Transform::Identity}}, Family::Gaussian}),
                    FitError);  // outcome as term
    CHECK_THROWS_AS(build_design(data, {"g", {}, Family::Gaussian}), FitError);
    auto bad_bin = make_data({num("y", {0, 2})});
    CHECK_THROWS_AS(build_design(bad_bin, {"y", {}, Family::Binomial}), FitError);
    auto bad_pois = make_data({num("y", {1.5, 2})});
    CHECK_THROWS_AS(build_design(bad_pois, {"y", {}, Family::Poisson}), FitError);
}

TEST_CASE("gaussian intercept-only matches closed forms") {
    auto data = make_data({num("y", {1, 2, 3})});
    auto fit = fit_glm(data, {"y", {}, Family::Gaussian});
    CHECK(fit.beta[0] == doctest::Approx(2.0));
    CHECK(fit.deviance == doctest::Approx(2.0));
    CHECK(fit.null_deviance == doctest::Approx(2.0));
    CHECK(fit.converged);
    CHECK(fit.iterations == 1);
    // sigma^2-hat (MLE) = 2/3; logLik = -(3/2)(log(2*pi*2/3) + 1).
    CHECK(fit.log_lik == doctest::Approx(-3.6486179374517713).epsilon(1e-10));
    CHECK(aic(fit) == doctest::Approx(11.2972358749035).epsilon(1e-10));
    CHECK(bic(fit) == doctest::Approx(9.4944604522398).epsilon(1e-9));
    // Dispersion RSS/(n-p) = 1; var(beta0) = 1/3.
    CHECK(fit.std_errors[0] == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("gaussian exact linear fit") {
    auto data = make_data({num("y", {1, 2, 3, 4}), num("x", {1, 2, 3, 4})});
    auto fit = fit_glm(data, {"y", {{"x", Transform::Identity}}, Family::Gaussian});
    CHECK(fit.beta[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fit.beta[1] == doctest::Approx(1.0));
    CHECK(fit.deviance == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(adjusted_r2(fit) == doctest::Approx(1.0));
}

TEST_CASE("binomial intercept-only is the logit of the mean") {
    auto data = make_data({num("y", {1, 1, 1, 0})});
    auto fit = fit_glm(data, {"y", {}, Family::Binomial});
    CHECK(fit.beta[0] == doctest::Approx(std::log(3.0)).epsilon(1e-8));
    CHECK(fit.converged);
    CHECK_FALSE(fit.separation_warning);
    // y = [0,1] intercept-only: mu = 1/2, logLik = 2 log(1/2).
    auto half = fit_glm(make_data({num("y", {0, 1})}), {"y", {}, Family::Binomial});
    CHECK(half.fitted_means[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(half.log_lik == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-8));
    CHECK(aic(half) == doctest::Approx(2.0 - 4.0 * std::log(0.5)).epsilon(1e-8));
}

TEST_CASE("poisson intercept-only is the log of the mean") {
    auto data = make_data({num("y", {4, 4})});
    auto fit = fit_glm(data, {"y", {}, Family::Poisson});
    CHECK(fit.beta[0] == doctest::Approx(std::log(4.0)).epsilon(1e-8));
    CHECK(fit.fitted_means[0] == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(fit.deviance == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("gaussian IRLS equals the normal equations") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        int n = 30, p = 4;
        Eigen::MatrixXd X(n, p);
        X.col(0).setOnes();
        for (int j = 1; j < p; ++j)
            for (int i = 0; i < n; ++i) X(i, j) = rng.normal();
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = rng.normal();
        auto fit = fit_irls(X, y, Family::Gaussian, {"(Intercept)", "a", "b", "c"});
        Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
        CHECK((fit.beta - ols).norm() <= 1e-8 * (1.0 + ols.norm()));
    }
}

TEST_CASE("score gradient vanishes at the IRLS optimum") {
    // d logLik / d beta_j compared against central finite differences.
    Rng rng(21);
    for (Family family : {Family::Gaussian, Family::Binomial, Family::Poisson}) {
        int n = 200, p = 3;
        Eigen::MatrixXd X(n, p);
        X.col(0).setOnes();
        for (int j = 1; j < p; ++j)
            for (int i = 0; i < n; ++i) X(i, j) = rng.normal();
        Eigen::VectorXd eta = X * Eigen::Vector3d(0.2, 0.5, -0.3);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            switch (family) {
                case Family::Gaussian: y[i] = eta[i] + rng.normal(); break;
                case Family::Binomial:
                    y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
                    break;
                case Family::Poisson: {
                    double mu = std::exp(eta[i]);
                    // Crude inverse-CDF draw; only the integer support matters.
                    double u = rng.uniform(), c = std::exp(-mu), s = c;
                    int k = 0;
                    while (u > s && k < 1000) {
                        ++k;
                        c *= mu / k;
                        s += c;
                    }
                    y[i] = k;
                    break;
                }
            }
        }
        auto fit = fit_irls(X, y, family, {"(Intercept)", "a", "b"});
        const double h = 1e-5;
        for (int j = 0; j < p; ++j) {
            Eigen::VectorXd up = fit.beta, down = fit.beta;
            up[j] += h;
            down[j] -= h;
            double grad =
                (log_lik_at(X, y, family, up) - log_lik_at(X, y, family, down)) / (2.0 * h);
            CHECK(std::abs(grad) < 1e-4 * (1.0 + std::abs(fit.log_lik)));
        }
    }
}

TEST_CASE("coefficients are invariant to a covariate shift (slope)") {
    Rng rng(5);
    int n = 120;
    std::vector<double> x(n), y(n), xs(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
        y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-(0.5 + x[i]))) ? 1.0 : 0.0;
        xs[i] = x[i] + 10.0;
    }
    auto f1 = fit_glm(make_data({num("y", y), num("x", x)}),
                      {"y", {{"x", Transform::Identity}}, Family::Binomial});
    auto f2 = fit_glm(make_data({num("y", y), num("x", xs)}),
                      {"y", {{"x", Transform::Identity}}, Family::Binomial});
    CHECK(f2.beta[1] == doctest::Approx(f1.beta[1]).epsilon(1e-6));
    CHECK(f2.beta[0] == doctest::Approx(f1.beta[0] - 10.0 * f1.beta[1]).epsilon(1e-6));
}

TEST_CASE("predict reproduces fitted means on the training data") {
    Rng rng(13);
    int n = 60;
    std::vector<double> x(n), y(n);
    std::vector<std::string> g(n);
    for (int i = 0; i < n; ++i) {
        x[i] = std::abs(rng.normal()) + 0.5;
        g[i] = (i % 3 == 0) ? "a" : (i % 3 == 1 ? "b" : "c");
        y[i] = 1.0 + 2.0 * std::log(x[i]) + (g[i] == "b" ? 0.7 : 0.0) + 0.1 * rng.normal();
    }
    auto data = make_data({num("y", y), num("x", x), cat("g", g)});
    auto fit = fit_glm(data, {"y",
                              {{"x", Transform::Log}, {"g", Transform::Identity}},
                              Family::Gaussian});
    auto pred = predict(fit, data);
    CHECK((pred - fit.fitted_means).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("predict rejects unseen categorical levels") {
    auto train = make_data({num("y", {1, 2}), cat("g", {"a", "b"})});
    auto fit = fit_glm(train, {"y", {{"g", Transform::Identity}}, Family::Gaussian});
    auto newdata = make_data({cat("g", {"a", "zzz"})});
    CHECK_THROWS_WITH_AS(predict(fit, newdata),
                         doctest::Contains("unseen level 'zzz'"), FitError);
}

TEST_CASE("rank deficiency names the offending column") {
    auto data = make_data({num("y", {1, 2, 3, 4}), num("x", {1, 2, 3, 4}),
                           num("x2", {2, 4, 6, 8})});
    try {
        fit_glm(data, {"y",
                       {{"x", Transform::Identity}, {"x2", Transform::Identity}},
                       Family::Gaussian});
        FAIL("expected FitError");
    } catch (const FitError& e) {
        std::string msg = e.what();
        CHECK(msg.find("rank deficient") != std::string::npos);
        // One of the two collinear columns must be named.
        CHECK((msg.find("'x'") != std::string::npos ||
               msg.find("'x2'") != std::string::npos));
    }
}

TEST_CASE("more coefficients than rows is an error") {
    auto data = make_data({num("y", {1, 2}), num("a", {1, 0}), num("b", {0, 1})});
    CHECK_THROWS_AS(fit_glm(data, {"y",
                                   {{"a", Transform::Identity}, {"b", Transform::Identity}},
                                   Family::Gaussian}),
                    FitError);
}

TEST_CASE("perfectly separated binomial data sets the warning flag") {
    auto data = make_data(
        {num("y", {0, 0, 0, 1, 1, 1}), num("x", {-3, -2, -1, 1, 2, 3})});
    auto fit = fit_glm(data, {"y", {{"x", Transform::Identity}}, Family::Binomial});
    CHECK(fit.separation_warning);
}

TEST_CASE("adjusted R^2 is gaussian-only") {
    auto data = make_data({num("y", {0, 1, 0, 1})});
    auto fit = fit_glm(data, {"y", {}, Family::Binomial});
    CHECK_THROWS_AS(adjusted_r2(fit), FitError);
}
