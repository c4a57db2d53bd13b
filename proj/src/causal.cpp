#include "glmcausal/causal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace glmc {

namespace {

constexpr double kWaldZ = 1.96;  // 95% interval

std::string link_scale_name(Family family) {
    switch (family) {
        case Family::Gaussian: return "identity";
        case Family::Binomial: return "log-odds";
        case Family::Poisson: return "log";
    }
    return "identity";
}

const char* kNonCausalLabel = "adjustment - not causally interpretable";

}  // namespace

EffectReport estimate_total_effect(const Dag& dag, const Dataset& data, Family family,
                                   const std::optional<std::set<int>>& set_override) {
    if (!dag.exposure() || !dag.outcome())
        throw CausalError("DAG must annotate both an exposure and an outcome");
    const std::string& exposure = dag.name(*dag.exposure());
    const std::string& outcome = dag.name(*dag.outcome());
    for (const auto& node : dag.nodes())
        if (!data.has_column(node))
            throw DataError("DAG node '" + node + "' has no matching data column");
    if (data.column(exposure).kind != ColumnKind::Numeric)
        throw DataError("exposure column '" + exposure + "' must be numeric");

    std::set<int> adjustment;
    std::vector<std::string> warnings;
    if (set_override) {
        AdjustmentVerdict verdict = check_adjustment(dag, *set_override);
        if (!verdict.valid) {
            int condition = verdict.offending_paths.front().first;
            std::string witness = path_to_string(dag, verdict.offending_paths.front().second);
            std::string reason;
            switch (condition) {
                case 1: reason = "leaves a confounding path open"; break;
                case 2: reason = "blocks a causal path"; break;
                case 3: reason = "opens a colliding path"; break;
            }
            throw InvalidAdjustmentOverride(
                "refusing to fit: the supplied adjustment set fails condition " +
                    std::to_string(condition) + " (" + reason + "); witnessing path: " +
                    witness,
                condition, witness);
        }
        adjustment = *set_override;
    } else {
        auto sets = minimal_adjustment_sets(dag);
        if (sets.empty()) {
            std::vector<std::string> open_paths;
            AdjustmentVerdict empty_verdict = check_adjustment(dag, {});
            for (const auto& [cond, path] : empty_verdict.offending_paths)
                if (cond == 1) open_paths.push_back(path_to_string(dag, path));
            std::string msg = "no valid adjustment set exists";
            if (!open_paths.empty()) msg += "; unblockable path: " + open_paths.front();
            throw NoValidAdjustmentSet(msg, open_paths);
        }
        adjustment = sets.front();
        if (sets.size() > 1)
            warnings.push_back(std::to_string(sets.size()) +
                               " minimal adjustment sets exist; using the first in "
                               "deterministic order");
    }

    ModelSpec spec;
    spec.outcome = outcome;
    spec.family = family;
    spec.terms.push_back({exposure, Transform::Identity});
    for (const auto& name : set_names(dag, adjustment))
        spec.terms.push_back({name, Transform::Identity});

    FittedGlm fit = fit_glm(data, spec);
    if (fit.separation_warning)
        warnings.push_back("quasi-separation detected: some fitted probabilities are "
                           "numerically 0 or 1");

    EffectReport report;
    report.exposure = exposure;
    report.outcome = outcome;
    // The exposure is the first term, hence coefficient index 1.
    report.estimate = fit.beta[1];
    report.std_error = fit.std_errors[1];
    report.ci_low = report.estimate - kWaldZ * report.std_error;
    report.ci_high = report.estimate + kWaldZ * report.std_error;
    report.scale = link_scale_name(family);
    report.adjustment_set = set_names(dag, adjustment);
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        if (j == 1) continue;
        report.non_causal_coefficients.emplace_back(fit.coef_name(j), fit.beta[j]);
    }
    report.family = family;
    report.dag_fingerprint = dag.fingerprint();
    report.warnings = std::move(warnings);
    return report;
}

std::string render_effect_report_text(const EffectReport& report) {
    std::ostringstream out;
    out << "Causal effect of " << report.exposure << " on " << report.outcome << " ("
        << family_name(report.family) << " family, " << report.scale << " scale)\n";
    out << "  total causal effect: " << report.estimate << "  (SE " << report.std_error
        << ", 95% CI [" << report.ci_low << ", " << report.ci_high << "])\n";
    out << "  adjustment set:";
    if (report.adjustment_set.empty()) {
        out << " (empty)";
    } else {
        for (const auto& name : report.adjustment_set) out << " " << name;
    }
    out << "\n  DAG fingerprint: " << report.dag_fingerprint << "\n";
    out << "\n  " << kNonCausalLabel << ":\n";
    for (const auto& [name, value] : report.non_causal_coefficients)
        out << "    " << name << " = " << value << "\n";
    if (!report.warnings.empty()) {
        out << "\n  warnings:\n";
        for (const auto& w : report.warnings) out << "    - " << w << "\n";
    }
    return out.str();
}

nlohmann::ordered_json effect_report_to_json(const EffectReport& report) {
    nlohmann::ordered_json j;
    j["exposure"] = report.exposure;
    j["outcome"] = report.outcome;
    j["effect"]["estimate"] = report.estimate;
    j["effect"]["se"] = report.std_error;
    j["effect"]["ci_low"] = report.ci_low;
    j["effect"]["ci_high"] = report.ci_high;
    j["effect"]["scale"] = report.scale;
    j["effect"]["label"] = "total causal effect";
    j["adjustment_set"] = report.adjustment_set;
    j["non_causal_coefficients"] = nlohmann::ordered_json::object();
    for (const auto& [name, value] : report.non_causal_coefficients)
        j["non_causal_coefficients"][name] = value;
    j["non_causal_label"] = kNonCausalLabel;
    j["family"] = family_name(report.family);
    j["dag_fingerprint"] = report.dag_fingerprint;
    j["warnings"] = report.warnings;
    return j;
}

EffectReport effect_report_from_json(const nlohmann::ordered_json& j) {
    EffectReport report;
    report.exposure = j.at("exposure").get<std::string>();
    report.outcome = j.at("outcome").get<std::string>();
    report.estimate = j.at("effect").at("estimate").get<double>();
    report.std_error = j.at("effect").at("se").get<double>();
    report.ci_low = j.at("effect").at("ci_low").get<double>();
    report.ci_high = j.at("effect").at("ci_high").get<double>();
    report.scale = j.at("effect").at("scale").get<std::string>();
    report.adjustment_set = j.at("adjustment_set").get<std::vector<std::string>>();
    for (const auto& [name, value] : j.at("non_causal_coefficients").items())
        report.non_causal_coefficients.emplace_back(name, value.get<double>());
    report.family = family_from_name(j.at("family").get<std::string>());
    report.dag_fingerprint = j.at("dag_fingerprint").get<std::string>();
    report.warnings = j.at("warnings").get<std::vector<std::string>>();
    return report;
}

// ---------------------------------------------------------------------------
// Independence diagnostics

PartialCorrelation partial_correlation_test(const Dataset& data, const std::string& x,
                                            const std::string& y,
                                            const std::vector<std::string>& z) {
    const Eigen::Index n = static_cast<Eigen::Index>(data.n_rows());
    const Eigen::Index kz = static_cast<Eigen::Index>(z.size());
    if (n <= kz + 3)
        throw CausalError("partial correlation needs n > |z| + 3 (n=" + std::to_string(n) +
                          ", |z|=" + std::to_string(kz) + ")");
    auto numeric = [&](const std::string& name) -> Eigen::VectorXd {
        const Column& c = data.column(name);
        if (c.kind != ColumnKind::Numeric)
            throw CausalError("column '" + name + "' must be numeric for independence tests");
        return Eigen::Map<const Eigen::VectorXd>(c.values.data(), n);
    };

    Eigen::VectorXd xv = numeric(x);
    Eigen::VectorXd yv = numeric(y);
    Eigen::MatrixXd Z(n, kz + 1);
    Z.col(0).setOnes();
    for (Eigen::Index j = 0; j < kz; ++j) Z.col(j + 1) = numeric(z[j]);

    auto qr = Z.householderQr();
    Eigen::VectorXd rx = xv - Z * qr.solve(xv);
    Eigen::VectorXd ry = yv - Z * qr.solve(yv);
    double denom = rx.norm() * ry.norm();
    double r = denom > 0.0 ? rx.dot(ry) / denom : 0.0;
    r = std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15);

    double stat = std::atanh(r) * std::sqrt(static_cast<double>(n - kz - 3));
    double p = std::erfc(std::abs(stat) / std::sqrt(2.0));
    return {r, stat, p};
}

std::vector<IndependenceTestResult> test_implied_independencies(const Dag& dag,
                                                                const Dataset& data,
                                                                double alpha,
                                                                int max_set_size) {
    for (const auto& node : dag.nodes()) {
        if (!data.has_column(node))
            throw DataError("DAG node '" + node + "' has no matching data column");
        if (data.column(node).kind != ColumnKind::Numeric)
            throw CausalError("column '" + node + "' must be numeric for independence tests");
    }
    std::vector<IndependenceTestResult> results;
    for (const auto& ind : implied_independencies(dag, max_set_size)) {
        IndependenceTestResult res;
        res.x = dag.name(ind.x);
        res.y = dag.name(ind.y);
        res.z = set_names(dag, ind.z);
        PartialCorrelation pc = partial_correlation_test(data, res.x, res.y, res.z);
        res.statistic = pc.statistic;
        res.p_value = pc.p_value;
        res.consistent = pc.p_value >= alpha;
        results.push_back(std::move(res));
    }
    return results;
}

}  // namespace glmc
