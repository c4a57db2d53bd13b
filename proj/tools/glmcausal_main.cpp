// Batch CLI tying together the two workflows: `fit` for prediction-model
// building and `dag`/`effect` for DAG-based causal estimation, plus
// `simulate` for generating data with known ground truth.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "glmcausal/causal.hpp"
#include "glmcausal/dag.hpp"
#include "glmcausal/dataset.hpp"
#include "glmcausal/glm.hpp"
#include "glmcausal/predict.hpp"
#include "glmcausal/sim.hpp"

namespace {

using glmc::Dag;
using glmc::Dataset;
using json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 42;

// Exit codes: 0 success, 2 parse/data error, 3 no valid adjustment set (or a
// supplied set judged invalid by `dag adjust`), 4 invalid effect override.
constexpr int kExitDataError = 2;
constexpr int kExitNoValidSet = 3;
constexpr int kExitInvalidOverride = 4;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("GLMCAUSAL_SEED"))
        return std::strtoull(env, nullptr, 10);
    return kDefaultSeed;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

glmc::Term parse_term(const std::string& text) {
    auto wrapped = [&](const std::string& prefix) -> std::optional<std::string> {
        if (text.size() > prefix.size() + 1 && text.rfind(prefix + "(", 0) == 0 &&
            text.back() == ')')
            return text.substr(prefix.size() + 1, text.size() - prefix.size() - 2);
        return std::nullopt;
    };
    if (auto col = wrapped("log")) return {*col, glmc::Transform::Log};
    if (auto col = wrapped("std")) return {*col, glmc::Transform::Standardize};
    return {text, glmc::Transform::Identity};
}

Dag load_dag(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw glmc::DataError("cannot open DAG file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return glmc::parse_dag(ss.str());
}

void emit(const json& j, const std::string& text, const std::string& format) {
    if (format == "json")
        std::cout << j.dump(2) << "\n";
    else
        std::cout << text;
}

json path_json(const Dag& dag, const glmc::Path& path) {
    json j;
    j["nodes"] = json::array();
    for (int v : path.nodes) j["nodes"].push_back(dag.name(v));
    j["text"] = glmc::path_to_string(dag, path);
    j["causal"] = glmc::is_causal_path(dag, path);
    j["open_given_empty"] = glmc::path_open(dag, path, {});
    return j;
}

json terms_json(const std::vector<glmc::Term>& terms) {
    json arr = json::array();
    for (const auto& t : terms) arr.push_back(t.label());
    return arr;
}

// ---------------------------------------------------------------------------

int cmd_dag_paths(const std::string& dag_file, std::string from, std::string to,
                  int max_length, const std::string& format) {
    Dag dag = load_dag(dag_file);
    if (from.empty() || to.empty()) {
        if (!dag.exposure() || !dag.outcome())
            throw glmc::DagError(
                "use --from/--to, or annotate an exposure and outcome in the DAG");
        if (from.empty()) from = dag.name(*dag.exposure());
        if (to.empty()) to = dag.name(*dag.outcome());
    }
    int max_edges = max_length > 0 ? max_length : static_cast<int>(dag.n_nodes());
    auto paths = glmc::enumerate_paths(dag, dag.index_of(from), dag.index_of(to), max_edges);

    json j;
    j["dag_fingerprint"] = dag.fingerprint();
    j["from"] = from;
    j["to"] = to;
    j["paths"] = json::array();
    std::ostringstream text;
    text << "paths between " << from << " and " << to << " (" << paths.size() << "):\n";
    for (const auto& p : paths) {
        j["paths"].push_back(path_json(dag, p));
        text << "  " << glmc::path_to_string(dag, p)
             << (glmc::is_causal_path(dag, p) ? "  [causal]" : "") << "\n";
    }
    emit(j, text.str(), format);
    return 0;
}

int cmd_dag_adjust(const std::string& dag_file, const std::string& set_arg,
                   const std::string& format) {
    Dag dag = load_dag(dag_file);
    json j;
    j["dag_fingerprint"] = dag.fingerprint();
    j["exposure"] = dag.name(*dag.exposure());
    j["outcome"] = dag.name(*dag.outcome());

    if (!set_arg.empty()) {
        auto z = glmc::node_set(dag, split_commas(set_arg));
        auto verdict = glmc::check_adjustment(dag, z);
        j["set"] = glmc::set_names(dag, z);
        j["verdict"]["valid"] = verdict.valid;
        j["verdict"]["condition1_blocked_confounding"] = verdict.blocked_confounding;
        j["verdict"]["condition2_no_causal_blocked"] = verdict.no_causal_blocked;
        j["verdict"]["condition3_no_collider_opened"] = verdict.no_collider_opened;
        j["verdict"]["offending_paths"] = json::array();
        std::ostringstream text;
        text << "adjustment set {";
        bool first = true;
        for (const auto& n : glmc::set_names(dag, z)) {
            if (!first) text << ", ";
            text << n;
            first = false;
        }
        text << "}: " << (verdict.valid ? "valid" : "invalid") << "\n";
        for (const auto& [cond, path] : verdict.offending_paths) {
            json op;
            op["condition"] = cond;
            op["path"] = glmc::path_to_string(dag, path);
            j["verdict"]["offending_paths"].push_back(op);
            text << "  condition " << cond << " fails: " << glmc::path_to_string(dag, path)
                 << "\n";
        }
        emit(j, text.str(), format);
        return verdict.valid ? 0 : kExitNoValidSet;
    }

    auto sets = glmc::minimal_adjustment_sets(dag);
    j["minimal_sets"] = json::array();
    std::ostringstream text;
    if (sets.empty()) {
        text << "no valid adjustment set exists\n";
        emit(j, text.str(), format);
        return kExitNoValidSet;
    }
    text << "minimal adjustment sets (" << sets.size() << "):\n";
    for (const auto& s : sets) {
        j["minimal_sets"].push_back(glmc::set_names(dag, s));
        text << "  {";
        bool first = true;
        for (const auto& n : glmc::set_names(dag, s)) {
            if (!first) text << ", ";
            text << n;
            first = false;
        }
        text << "}\n";
    }
    emit(j, text.str(), format);
    return 0;
}

int cmd_dag_independencies(const std::string& dag_file, int max_set_size,
                           const std::string& format) {
    Dag dag = load_dag(dag_file);
    int limit = max_set_size >= 0 ? max_set_size : static_cast<int>(dag.n_nodes());
    auto inds = glmc::implied_independencies(dag, limit);
    json j;
    j["dag_fingerprint"] = dag.fingerprint();
    j["independencies"] = json::array();
    std::ostringstream text;
    text << "implied conditional independencies (" << inds.size() << "):\n";
    for (const auto& ind : inds) {
        json e;
        e["x"] = dag.name(ind.x);
        e["y"] = dag.name(ind.y);
        e["z"] = glmc::set_names(dag, ind.z);
        j["independencies"].push_back(e);
        text << "  (" << dag.name(ind.x) << ", " << dag.name(ind.y) << " |";
        if (ind.z.empty()) text << " {}";
        for (int v : ind.z) text << " " << dag.name(v);
        text << ")\n";
    }
    emit(j, text.str(), format);
    return 0;
}

int cmd_dag_classify(const std::string& dag_file, const std::string& node,
                     const std::string& format) {
    Dag dag = load_dag(dag_file);
    std::vector<int> targets;
    if (!node.empty()) {
        targets.push_back(dag.index_of(node));
    } else {
        for (std::size_t v = 0; v < dag.n_nodes(); ++v)
            targets.push_back(static_cast<int>(v));
    }
    json j;
    j["dag_fingerprint"] = dag.fingerprint();
    j["nodes"] = json::array();
    std::ostringstream text;
    for (int v : targets) {
        auto labels = glmc::classify_node(dag, v);
        json e;
        e["node"] = dag.name(v);
        e["labels"] = json::array();
        text << dag.name(v) << ":";
        for (auto l : labels) {
            e["labels"].push_back(glmc::to_string(l));
            text << " " << glmc::to_string(l);
        }
        text << "\n";
        j["nodes"].push_back(e);
    }
    emit(j, text.str(), format);
    return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string data_file;
    std::string outcome;
    std::string candidates;
    std::string family = "gaussian";
    std::string select = "best-subsets";
    std::string criterion = "bic";
    std::string metric;
    int cv_k = 0;
    std::uint64_t seed = 0;
    bool one_se = false;
    std::string format = "text";
};

json selection_json(const glmc::SelectionResult& result) {
    json j;
    j["criterion"]["name"] = result.criterion;
    j["criterion"]["value"] = result.criterion_value;
    j["chosen_terms"] = terms_json(result.chosen.terms);
    j["trace"] = json::array();
    for (const auto& e : result.trace) {
        json t;
        t["terms"] = terms_json(e.terms);
        if (e.ok) t["criterion"] = e.criterion;
        t["ok"] = e.ok;
        if (!e.note.empty()) t["note"] = e.note;
        j["trace"].push_back(t);
    }
    j["warnings"] = result.warnings;
    return j;
}

int cmd_fit(const FitArgs& args) {
    Dataset data = Dataset::from_csv_file(args.data_file);
    if (!data.has_column(args.outcome))
        throw glmc::DataError("outcome column '" + args.outcome + "' not found in data");
    glmc::Family family = glmc::family_from_name(args.family);

    std::vector<glmc::Term> candidates;
    if (!args.candidates.empty()) {
        for (const auto& t : split_commas(args.candidates)) candidates.push_back(parse_term(t));
    } else {
        for (const auto& name : data.column_names())
            if (name != args.outcome) candidates.push_back({name, glmc::Transform::Identity});
    }
    glmc::Criterion criterion =
        args.criterion == "aic" ? glmc::Criterion::Aic : glmc::Criterion::Bic;

    json j;
    j["outcome"] = args.outcome;
    j["family"] = args.family;
    j["method"] = args.select;
    std::ostringstream text;

    if (args.select == "lasso") {
        if (family != glmc::Family::Gaussian)
            throw glmc::FitError("--select lasso supports the gaussian family only");
        auto path = glmc::lasso_path(data, args.outcome, candidates);
        int k = args.cv_k > 0 ? args.cv_k : 5;
        auto cv = glmc::cross_validate_lasso(data, args.outcome, candidates, path.lambdas, k,
                                             args.seed);
        std::size_t best = 0;
        for (std::size_t l = 1; l < cv.size(); ++l)
            if (cv[l] < cv[best]) best = l;
        j["lasso"]["lambdas"] = path.lambdas;
        j["lasso"]["cv_rmse"] = cv;
        j["lasso"]["cv_best_lambda"] = path.lambdas[best];
        j["lasso"]["cv_best_rmse"] = cv[best];
        json active = json::array();
        for (int idx : path.active_sets[best]) active.push_back(path.names[idx]);
        j["lasso"]["active_at_best"] = active;
        json coefs = json::object();
        const auto& beta = path.beta_orig[best];
        coefs["(Intercept)"] = beta[0];
        for (std::size_t c = 0; c < path.names.size(); ++c)
            coefs[path.names[c]] = beta[static_cast<Eigen::Index>(c) + 1];
        j["lasso"]["coefficients_at_best"] = coefs;
        text << "lasso path: " << path.lambdas.size() << " lambdas, cv-best lambda "
             << path.lambdas[best] << " (cv rmse " << cv[best] << ")\n  active covariates:";
        for (int idx : path.active_sets[best]) text << " " << path.names[idx];
        text << "\n";
        emit(j, text.str(), args.format);
        return 0;
    }

    glmc::SelectionResult result;
    if (args.select == "best-subsets") {
        result = glmc::best_subsets(data, args.outcome, candidates, family, criterion);
    } else if (args.select == "forward") {
        result = glmc::stepwise(data, args.outcome, candidates, family,
                                glmc::Direction::Forward, criterion);
    } else if (args.select == "backward") {
        result = glmc::stepwise(data, args.outcome, candidates, family,
                                glmc::Direction::Backward, criterion);
    } else if (args.select == "lasso-backward") {
        int k = args.cv_k > 0 ? args.cv_k : 5;
        result = glmc::lasso_then_backward(data, args.outcome, candidates, family, criterion,
                                           k, args.seed, args.one_se);
    } else {
        throw glmc::FitError("unknown selection method '" + args.select + "'");
    }

    json sel = selection_json(result);
    for (auto& [key, value] : sel.items()) j[key] = value;

    text << "selected model (" << args.select << ", " << result.criterion << " "
         << result.criterion_value << "):\n  " << args.outcome << " ~ ";
    if (result.chosen.terms.empty()) text << "1";
    for (std::size_t t = 0; t < result.chosen.terms.size(); ++t) {
        if (t) text << " + ";
        text << result.chosen.terms[t].label();
    }
    text << "\n  trace: " << result.trace.size() << " candidate fits\n";
    for (const auto& w : result.warnings) text << "  warning: " << w << "\n";

    if (args.cv_k > 0) {
        glmc::Metric metric = glmc::Metric::Rmse;
        if (args.metric == "auc")
            metric = glmc::Metric::Auc;
        else if (!args.metric.empty() && args.metric != "rmse")
            throw glmc::FitError("unknown metric '" + args.metric + "'");
        auto eval = glmc::cross_validate(data, result.chosen, args.cv_k, args.seed, metric);
        j["evaluation"]["metric"] = eval.metric;
        j["evaluation"]["value"] = eval.value;
        j["evaluation"]["source"] = eval.source;
        text << "  " << eval.metric << " [" << eval.source << "]: " << eval.value << "\n";
    }
    emit(j, text.str(), args.format);
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_effect(const std::string& dag_file, const std::string& data_file,
               const std::string& family_arg, const std::string& set_arg, bool list_sets,
               const std::string& format) {
    Dag dag = load_dag(dag_file);
    if (list_sets) {
        return cmd_dag_adjust(dag_file, "", format);
    }
    Dataset data = Dataset::from_csv_file(data_file);
    glmc::Family family = glmc::family_from_name(family_arg);
    std::optional<std::set<int>> override_set;
    if (!set_arg.empty()) override_set = glmc::node_set(dag, split_commas(set_arg));

    glmc::EffectReport report = glmc::estimate_total_effect(dag, data, family, override_set);
    emit(glmc::effect_report_to_json(report), glmc::render_effect_report_text(report), format);
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& scenario_name, const std::string& sem_file, long n,
                 std::uint64_t seed, const std::string& out_file, const std::string& format) {
    json j;
    std::ostringstream text;
    std::optional<glmc::Sem> sem;
    if (!scenario_name.empty()) {
        glmc::Scenario scenario = glmc::builtin_scenario(scenario_name);
        j["scenario"] = glmc::scenario_to_json(scenario);
        text << "scenario " << scenario.name << ": true total effect of "
             << scenario.sem.dag.name(*scenario.sem.dag.exposure()) << " on "
             << scenario.sem.dag.name(*scenario.sem.dag.outcome()) << " = "
             << scenario.true_effect << "\n";
        for (const auto& [name, value] : scenario.analytic)
            text << "  analytic " << name << " = " << value << "\n";
        sem = scenario.sem;
    } else {
        std::ifstream in(sem_file);
        if (!in) throw glmc::DataError("cannot open SEM file '" + sem_file + "'");
        json sem_json = json::parse(in);
        sem = glmc::sem_from_json(sem_json);
        j["sem"] = glmc::sem_to_json(*sem);
        text << "SEM from " << sem_file << "\n";
        try {
            double effect = glmc::true_total_effect(*sem);
            j["true_total_effect"] = effect;
            text << "  true total effect = " << effect << "\n";
        } catch (const glmc::SimError&) {
            // No annotations or no closed form; nothing to print.
        }
    }

    Dataset data = glmc::simulate(*sem, n, seed);
    data.write_csv(out_file);
    j["n"] = n;
    j["seed"] = seed;
    j["out"] = out_file;
    j["columns"] = data.column_names();
    text << "wrote " << n << " rows to " << out_file << "\n";
    emit(j, text.str(), format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GLM workflows for prediction and causal effect estimation"};
    app.require_subcommand(1);

    std::string format = "text";
    std::uint64_t seed = default_seed();

    // dag
    auto* dag_cmd = app.add_subcommand("dag", "DAG analysis: paths, adjustment sets, "
                                              "implied independencies, node roles");
    dag_cmd->require_subcommand(1);
    std::string dag_file, from, to, set_arg, node_arg;
    int max_length = -1, max_set_size = -1;

    auto* paths_cmd = dag_cmd->add_subcommand("paths", "enumerate paths between two nodes");
    paths_cmd->add_option("--dag", dag_file, "DAG file")->required();
    paths_cmd->add_option("--from", from, "start node (default: exposure)");
    paths_cmd->add_option("--to", to, "end node (default: outcome)");
    paths_cmd->add_option("--max-length", max_length, "maximum path length in edges");
    paths_cmd->add_option("--format", format, "text or json");

    auto* adjust_cmd =
        dag_cmd->add_subcommand("adjust", "minimal adjustment sets, or verdict for --set");
    adjust_cmd->add_option("--dag", dag_file, "DAG file")->required();
    adjust_cmd->add_option("--set", set_arg, "comma-separated set to validate");
    adjust_cmd->add_option("--format", format, "text or json");

    auto* indep_cmd =
        dag_cmd->add_subcommand("independencies", "implied conditional independencies");
    indep_cmd->add_option("--dag", dag_file, "DAG file")->required();
    indep_cmd->add_option("--max-set-size", max_set_size, "largest separating set to search");
    indep_cmd->add_option("--format", format, "text or json");

    auto* classify_cmd =
        dag_cmd->add_subcommand("classify", "node roles relative to exposure/outcome");
    classify_cmd->add_option("--dag", dag_file, "DAG file")->required();
    classify_cmd->add_option("--node", node_arg, "single node (default: all)");
    classify_cmd->add_option("--format", format, "text or json");

    // fit
    FitArgs fit_args;
    fit_args.seed = seed;
    auto* fit_cmd = app.add_subcommand("fit", "prediction-model selection and evaluation");
    fit_cmd->add_option("--data", fit_args.data_file, "CSV data file")->required();
    fit_cmd->add_option("--outcome", fit_args.outcome, "outcome column")->required();
    fit_cmd->add_option("--candidates", fit_args.candidates,
                        "comma-separated candidate terms; log(col) and std(col) supported "
                        "(default: all other columns)");
    fit_cmd->add_option("--family", fit_args.family, "gaussian, binomial, or poisson");
    fit_cmd->add_option("--select", fit_args.select,
                        "best-subsets, forward, backward, lasso, or lasso-backward");
    fit_cmd->add_option("--criterion", fit_args.criterion, "aic or bic");
    fit_cmd->add_option("--cv", fit_args.cv_k, "evaluate with k-fold cross-validation");
    fit_cmd->add_option("--metric", fit_args.metric, "rmse or auc");
    fit_cmd->add_option("--seed", fit_args.seed, "RNG seed");
    fit_cmd->add_flag("--one-se", fit_args.one_se,
                      "one-standard-error lambda rule for lasso-backward");
    fit_cmd->add_option("--format", fit_args.format, "text or json");

    // effect
    std::string effect_dag, effect_data, effect_family = "gaussian", effect_set;
    bool list_sets = false;
    auto* effect_cmd = app.add_subcommand("effect", "total causal effect of the exposure");
    effect_cmd->add_option("--dag", effect_dag, "DAG file")->required();
    effect_cmd->add_option("--data", effect_data, "CSV data file");
    effect_cmd->add_option("--family", effect_family, "gaussian, binomial, or poisson");
    effect_cmd->add_option("--set", effect_set,
                           "explicit adjustment set (validated before fitting)");
    effect_cmd->add_flag("--list-sets", list_sets, "list minimal adjustment sets and exit");
    effect_cmd->add_option("--format", format, "text or json");

    // simulate
    std::string scenario_name, sem_file, out_file;
    long sim_n = 1000;
    auto* sim_cmd = app.add_subcommand("simulate", "simulate data from a scenario or SEM");
    sim_cmd->add_option("--scenario", scenario_name,
                        "confounding, collider, mediator, or figure1");
    sim_cmd->add_option("--sem", sem_file, "SEM JSON file");
    sim_cmd->add_option("--n", sim_n, "number of rows");
    sim_cmd->add_option("--seed", seed, "RNG seed");
    sim_cmd->add_option("--out", out_file, "output CSV path")->required();
    sim_cmd->add_option("--format", format, "text or json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (paths_cmd->parsed())
            return cmd_dag_paths(dag_file, from, to, max_length, format);
        if (adjust_cmd->parsed()) return cmd_dag_adjust(dag_file, set_arg, format);
        if (indep_cmd->parsed())
            return cmd_dag_independencies(dag_file, max_set_size, format);
        if (classify_cmd->parsed()) return cmd_dag_classify(dag_file, node_arg, format);
        if (fit_cmd->parsed()) return cmd_fit(fit_args);
        if (effect_cmd->parsed()) {
            if (!list_sets && effect_data.empty()) {
                std::cerr << "error: --data is required unless --list-sets is given\n";
                return kExitDataError;
            }
            return cmd_effect(effect_dag, effect_data, effect_family, effect_set, list_sets,
                              format);
        }
        if (sim_cmd->parsed()) {
            if (scenario_name.empty() == sem_file.empty()) {
                std::cerr << "error: give exactly one of --scenario or --sem\n";
                return kExitDataError;
            }
            return cmd_simulate(scenario_name, sem_file, sim_n, seed, out_file, format);
        }
    } catch (const glmc::InvalidAdjustmentOverride& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidOverride;
    } catch (const glmc::NoValidAdjustmentSet& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoValidSet;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return 0;
}
