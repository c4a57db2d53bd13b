#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "glmcausal/dag.hpp"
#include "glmcausal/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

namespace glmc {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoiseSpec {
    enum Kind { Gaussian, BernoulliLogit } kind = Gaussian;
    double sd = 1.0;  // Gaussian only
};

// Linear mechanism for one node: intercept + sum of coef * parent + noise.
// For BernoulliLogit the linear part is the log-odds.
struct Mechanism {
    std::vector<std::pair<int, double>> parent_coefs;  // (parent index, coef)
    double intercept = 0.0;
    NoiseSpec noise;
};

// Structural equation system over a Dag; mechanisms indexed by node. Parent
// sets must match the graph exactly (checked at construction).
struct Sem {
    Dag dag;
    std::vector<Mechanism> mechanisms;

    Sem(Dag dag, std::vector<Mechanism> mechanisms);
    double edge_coef(int from, int to) const;
};

// Generates n rows, filling columns node-by-node in topological order; the
// RNG stream (mt19937_64 + Box-Muller, see rng.hpp) is consumed one noise
// draw per row per node, so output is byte-identical for a fixed
// (sem, n, seed) on every platform.
Dataset simulate(const Sem& sem, long n, std::uint64_t seed);

// Sum over directed exposure->outcome paths of the product of edge
// coefficients. Errors when a bernoulli node sits on any such path.
double true_total_effect(const Sem& sem);

// Implied covariance of a linear-gaussian SEM: (I-B)^-1 D (I-B)^-T.
Eigen::MatrixXd implied_covariance(const Sem& sem);

struct Scenario {
    std::string name;
    Sem sem;
    double true_effect;
    // Named analytic values derivable from the SEM covariance, e.g. the
    // population slope of the unadjusted or wrongly adjusted regression.
    std::vector<std::pair<std::string, double>> analytic;
};

// Built-in scenarios: "confounding", "collider", "mediator", "figure1".
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

nlohmann::ordered_json sem_to_json(const Sem& sem);
Sem sem_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json scenario_to_json(const Scenario& s);

}  // namespace glmc
