// Brute-force oracles kept independent of the library's graph algorithms:
// they work from the raw edge list with their own path enumeration,
// descendant computation, and open-path rule.
#pragma once

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

#include "glmcausal/dag.hpp"
#include "glmcausal/rng.hpp"

namespace oracle {

struct RawGraph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;

    bool has_edge(int a, int b) const {
        return std::find(edges.begin(), edges.end(), std::make_pair(a, b)) != edges.end();
    }
    std::set<int> descendants(int v) const {
        std::set<int> out;
        std::vector<int> stack{v};
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (auto [a, b] : edges)
                if (a == u && !out.count(b)) {
                    out.insert(b);
                    stack.push_back(b);
                }
        }
        out.erase(v);
        return out;
    }
};

inline RawGraph raw(const glmc::Dag& dag) {
    return {static_cast<int>(dag.n_nodes()), dag.edges()};
}

// All simple undirected paths from x to y, each as a node sequence.
inline std::vector<std::vector<int>> all_paths(const RawGraph& g, int x, int y) {
    std::vector<std::vector<int>> out;
    std::vector<int> current{x};
    std::vector<bool> used(g.n, false);
    used[x] = true;
    std::function<void()> dfs = [&] {
        int v = current.back();
        if (v == y) {
            out.push_back(current);
            return;
        }
        for (int w = 0; w < g.n; ++w) {
            if (used[w]) continue;
            if (!g.has_edge(v, w) && !g.has_edge(w, v)) continue;
            used[w] = true;
            current.push_back(w);
            dfs();
            current.pop_back();
            used[w] = false;
        }
    };
    dfs();
    return out;
}

inline bool path_open(const RawGraph& g, const std::vector<int>& path,
                      const std::set<int>& z) {
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
        int prev = path[i - 1], v = path[i], next = path[i + 1];
        bool collider = g.has_edge(prev, v) && g.has_edge(next, v);
        if (collider) {
            bool opened = z.count(v) > 0;
            if (!opened) {
                auto desc = g.descendants(v);
                for (int u : z)
                    if (desc.count(u)) {
                        opened = true;
                        break;
                    }
            }
            if (!opened) return false;
        } else if (z.count(v)) {
            return false;
        }
    }
    return true;
}

inline bool d_separated(const RawGraph& g, int x, int y, const std::set<int>& z) {
    for (const auto& path : all_paths(g, x, y))
        if (path_open(g, path, z)) return false;
    return true;
}

// Random DAG: edges oriented along a random permutation, so acyclicity is
// guaranteed by construction.
inline glmc::Dag random_dag(int n, double edge_prob, glmc::Rng& rng) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('A' + i)));
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < edge_prob)
                edges.emplace_back(names[order[i]], names[order[j]]);
    return glmc::Dag(names, edges);
}

// All DAGs on n labeled nodes: every pair is absent / forward / backward,
// keeping only acyclic assignments.
inline std::vector<glmc::Dag> all_dags(int n) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('A' + i)));

    std::vector<glmc::Dag> out;
    long total = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<std::pair<std::string, std::string>> edges;
        for (const auto& [i, j] : pairs) {
            int choice = static_cast<int>(c % 3);
            c /= 3;
            if (choice == 1) edges.emplace_back(names[i], names[j]);
            if (choice == 2) edges.emplace_back(names[j], names[i]);
        }
        try {
            out.emplace_back(names, edges);
        } catch (const glmc::CycleError&) {
            // skip cyclic assignments
        }
    }
    return out;
}

inline std::vector<std::set<int>> all_subsets(const std::vector<int>& items) {
    std::vector<std::set<int>> out;
    for (std::size_t mask = 0; mask < (1u << items.size()); ++mask) {
        std::set<int> s;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (mask & (1u << i)) s.insert(items[i]);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace oracle
