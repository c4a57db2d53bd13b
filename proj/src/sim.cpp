#include "glmcausal/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "glmcausal/rng.hpp"

namespace glmc {

Sem::Sem(Dag dag_in, std::vector<Mechanism> mechanisms_in)
    : dag(std::move(dag_in)), mechanisms(std::move(mechanisms_in)) {
    if (mechanisms.size() != dag.n_nodes())
        throw SimError("SEM must define one mechanism per node");
    for (std::size_t v = 0; v < dag.n_nodes(); ++v) {
        std::vector<int> declared;
        for (const auto& [p, c] : mechanisms[v].parent_coefs) declared.push_back(p);
        std::vector<int> expected = dag.parents(static_cast<int>(v));
        std::sort(declared.begin(), declared.end());
        std::sort(expected.begin(), expected.end());
        if (declared != expected)
            throw SimError("mechanism for '" + dag.name(static_cast<int>(v)) +
                           "' does not match its graph parents");
    }
}

double Sem::edge_coef(int from, int to) const {
    for (const auto& [p, c] : mechanisms[to].parent_coefs)
        if (p == from) return c;
    throw SimError("no edge " + dag.name(from) + " -> " + dag.name(to));
}

Dataset simulate(const Sem& sem, long n, std::uint64_t seed) {
    if (n < 1) throw SimError("simulate requires n >= 1");
    Rng rng(seed);
    const std::size_t k = sem.dag.n_nodes();
    std::vector<std::vector<double>> values(k, std::vector<double>(n));

    for (int v : sem.dag.topological_order()) {
        const Mechanism& mech = sem.mechanisms[v];
        for (long i = 0; i < n; ++i) {
            double linear = mech.intercept;
            for (const auto& [p, c] : mech.parent_coefs) linear += c * values[p][i];
            if (mech.noise.kind == NoiseSpec::Gaussian) {
                values[v][i] = linear + mech.noise.sd * rng.normal();
            } else {
                double prob = 1.0 / (1.0 + std::exp(-linear));
                values[v][i] = rng.uniform() < prob ? 1.0 : 0.0;
            }
        }
    }

    std::vector<Column> cols(k);
    for (std::size_t v = 0; v < k; ++v) {
        cols[v].name = sem.dag.name(static_cast<int>(v));
        cols[v].kind = ColumnKind::Numeric;
        cols[v].values = std::move(values[v]);
    }
    return Dataset(std::move(cols));
}

double true_total_effect(const Sem& sem) {
    if (!sem.dag.exposure() || !sem.dag.outcome())
        throw SimError("SEM DAG must annotate an exposure and an outcome");
    int e = *sem.dag.exposure();
    int o = *sem.dag.outcome();

    double total = 0.0;
    std::vector<int> trail{e};
    std::function<void(double)> dfs = [&](double product) {
        int v = trail.back();
        if (v == o) {
            total += product;
            return;
        }
        if (v != e && sem.mechanisms[v].noise.kind != NoiseSpec::Gaussian)
            throw SimError("no closed-form total effect: '" + sem.dag.name(v) +
                           "' on a directed path has a bernoulli mechanism; compare "
                           "empirically instead");
        for (int c : sem.dag.children(v)) {
            trail.push_back(c);
            dfs(product * sem.edge_coef(v, c));
            trail.pop_back();
        }
    };
    if (sem.mechanisms[o].noise.kind != NoiseSpec::Gaussian)
        throw SimError("no closed-form total effect: outcome '" + sem.dag.name(o) +
                       "' has a bernoulli mechanism; compare empirically instead");
    dfs(1.0);
    return total;
}

Eigen::MatrixXd implied_covariance(const Sem& sem) {
    const auto k = static_cast<Eigen::Index>(sem.dag.n_nodes());
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index v = 0; v < k; ++v) {
        const Mechanism& mech = sem.mechanisms[v];
        if (mech.noise.kind != NoiseSpec::Gaussian)
            throw SimError("implied covariance requires all-gaussian mechanisms");
        for (const auto& [p, c] : mech.parent_coefs) B(v, p) = c;
        D(v, v) = mech.noise.sd * mech.noise.sd;
    }
    Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(k, k) - B).inverse();
    return inv * D * inv.transpose();
}

// ---------------------------------------------------------------------------
// Built-in scenarios

namespace {

Mechanism gaussian_noise() { return Mechanism{{}, 0.0, {NoiseSpec::Gaussian, 1.0}}; }

Mechanism linear(std::vector<std::pair<int, double>> coefs, double sd = 1.0) {
    return Mechanism{std::move(coefs), 0.0, {NoiseSpec::Gaussian, sd}};
}

Scenario confounding_scenario() {
    Dag dag({"C", "X", "Y"}, {{"C", "X"}, {"C", "Y"}, {"X", "Y"}}, "X", "Y");
    std::vector<Mechanism> mech(3);
    mech[0] = gaussian_noise();                    // C
    mech[1] = linear({{0, 0.5}});                  // X = 0.5 C + e
    mech[2] = linear({{1, 0.3}, {0, 0.8}});        // Y = 0.3 X + 0.8 C + e
    Sem sem(std::move(dag), std::move(mech));
    // Population slope of Y on X alone: Cov(X,Y)/Var(X) with Var(X) = 1.25.
    return {"confounding", std::move(sem), 0.3, {{"unadjusted_slope", 0.62}}};
}

Scenario collider_scenario() {
    Dag dag({"X", "U", "Y", "S"},
            {{"X", "Y"}, {"U", "Y"}, {"X", "S"}, {"U", "S"}}, "X", "Y");
    std::vector<Mechanism> mech(4);
    mech[0] = gaussian_noise();                    // X
    mech[1] = gaussian_noise();                    // U
    mech[2] = linear({{0, 0.3}, {1, 1.0}});        // Y = 0.3 X + U + e
    mech[3] = linear({{0, 1.0}, {1, 1.0}});        // S = X + U + e (collider)
    Sem sem(std::move(dag), std::move(mech));
    // Coefficient of X in the population regression of Y on (X, S):
    // [[1,1],[1,3]]^-1 [0.3, 1.3] = (-0.2, 0.5).
    return {"collider", std::move(sem), 0.3, {{"s_conditioned_coef", -0.2}}};
}

Scenario mediator_scenario() {
    Dag dag({"X", "M", "Y"}, {{"X", "M"}, {"M", "Y"}, {"X", "Y"}}, "X", "Y");
    std::vector<Mechanism> mech(3);
    mech[0] = gaussian_noise();                    // X
    mech[1] = linear({{0, 0.5}});                  // M = 0.5 X + e
    mech[2] = linear({{0, 0.3}, {1, 0.4}});        // Y = 0.3 X + 0.4 M + e
    Sem sem(std::move(dag), std::move(mech));
    // Adjusting for M leaves only the direct X -> Y component.
    return {"mediator", std::move(sem), 0.5, {{"m_adjusted_coef", 0.3}}};
}

Scenario figure1_scenario() {
    Dag dag({"Chemotherapy", "VTE", "Age", "Sex", "TumourSite", "TumourSize",
             "PlateletCount"},
            {{"Age", "Chemotherapy"},
             {"Age", "VTE"},
             {"Sex", "Chemotherapy"},
             {"Sex", "VTE"},
             {"TumourSite", "Chemotherapy"},
             {"TumourSite", "VTE"},
             {"TumourSize", "Chemotherapy"},
             {"TumourSize", "VTE"},
             {"Chemotherapy", "PlateletCount"},
             {"PlateletCount", "VTE"},
             {"Chemotherapy", "VTE"}},
            "Chemotherapy", "VTE");
    // Chemotherapy = 0, VTE = 1, Age = 2, Sex = 3, Site = 4, Size = 5, Plt = 6.
    std::vector<Mechanism> mech(7);
    mech[2] = gaussian_noise();
    mech[3] = gaussian_noise();
    mech[4] = gaussian_noise();
    mech[5] = gaussian_noise();
    mech[0] = linear({{2, 0.4}, {3, 0.3}, {4, 0.5}, {5, 0.6}});
    mech[6] = linear({{0, 0.7}});
    mech[1] = linear({{0, 0.3}, {6, 0.4}, {2, 0.25}, {3, 0.2}, {4, 0.3}, {5, 0.35}});
    Sem sem(std::move(dag), std::move(mech));
    // Total effect: direct 0.3 plus 0.7 * 0.4 through platelet count.
    return {"figure1", std::move(sem), 0.58, {}};
}

}  // namespace

Scenario builtin_scenario(const std::string& name) {
    if (name == "confounding") return confounding_scenario();
    if (name == "collider") return collider_scenario();
    if (name == "mediator") return mediator_scenario();
    if (name == "figure1") return figure1_scenario();
    throw SimError("unknown scenario '" + name + "'");
}

std::vector<std::string> builtin_scenario_names() {
    return {"confounding", "collider", "mediator", "figure1"};
}

// ---------------------------------------------------------------------------
// JSON serialization

nlohmann::ordered_json sem_to_json(const Sem& sem) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (std::size_t v = 0; v < sem.dag.n_nodes(); ++v) {
        const Mechanism& mech = sem.mechanisms[v];
        nlohmann::ordered_json node;
        node["name"] = sem.dag.name(static_cast<int>(v));
        node["parents"] = nlohmann::ordered_json::array();
        node["coefs"] = nlohmann::ordered_json::array();
        for (const auto& [p, c] : mech.parent_coefs) {
            node["parents"].push_back(sem.dag.name(p));
            node["coefs"].push_back(c);
        }
        node["intercept"] = mech.intercept;
        node["noise"]["kind"] =
            mech.noise.kind == NoiseSpec::Gaussian ? "gaussian" : "bernoulli-logit";
        if (mech.noise.kind == NoiseSpec::Gaussian) node["noise"]["sd"] = mech.noise.sd;
        j["nodes"].push_back(node);
    }
    if (sem.dag.exposure()) j["exposure"] = sem.dag.name(*sem.dag.exposure());
    if (sem.dag.outcome()) j["outcome"] = sem.dag.name(*sem.dag.outcome());
    return j;
}

Sem sem_from_json(const nlohmann::ordered_json& j) {
    std::vector<std::string> names;
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& node : j.at("nodes")) {
        std::string name = node.at("name").get<std::string>();
        for (const auto& p : node.at("parents"))
            edges.emplace_back(p.get<std::string>(), name);
        names.push_back(std::move(name));
    }
    std::optional<std::string> exposure, outcome;
    if (j.contains("exposure")) exposure = j.at("exposure").get<std::string>();
    if (j.contains("outcome")) outcome = j.at("outcome").get<std::string>();
    Dag dag(names, edges, exposure, outcome);

    std::vector<Mechanism> mechs(names.size());
    for (const auto& node : j.at("nodes")) {
        int v = dag.index_of(node.at("name").get<std::string>());
        Mechanism mech;
        const auto& parents = node.at("parents");
        const auto& coefs = node.at("coefs");
        if (parents.size() != coefs.size())
            throw SimError("node '" + dag.name(v) + "': parents and coefs differ in length");
        for (std::size_t i = 0; i < parents.size(); ++i)
            mech.parent_coefs.emplace_back(dag.index_of(parents[i].get<std::string>()),
                                           coefs[i].get<double>());
        mech.intercept = node.value("intercept", 0.0);
        std::string kind = node.contains("noise")
                               ? node.at("noise").value("kind", "gaussian")
                               : "gaussian";
        if (kind == "gaussian") {
            mech.noise.kind = NoiseSpec::Gaussian;
            mech.noise.sd = node.contains("noise") ? node.at("noise").value("sd", 1.0) : 1.0;
        } else if (kind == "bernoulli-logit") {
            mech.noise.kind = NoiseSpec::BernoulliLogit;
        } else {
            throw SimError("unknown noise kind '" + kind + "'");
        }
        mechs[v] = std::move(mech);
    }
    return Sem(std::move(dag), std::move(mechs));
}

nlohmann::ordered_json scenario_to_json(const Scenario& s) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["sem"] = sem_to_json(s.sem);
    j["true_total_effect"] = s.true_effect;
    j["analytic"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.analytic) j["analytic"][k] = v;
    return j;
}

}  // namespace glmc
