#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace glmc {

struct DagError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DagParseError : DagError {
    DagParseError(const std::string& msg, int line, int col)
        : DagError("parse error at " + std::to_string(line) + ":" +
                   std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

struct CycleError : DagError {
    using DagError::DagError;
};

enum class Role { None, Exposure, Outcome };

// Immutable directed acyclic graph over named nodes. Node indices follow
// declaration order; acyclicity is enforced at construction.
class Dag {
public:
    Dag(std::vector<std::string> nodes,
        std::vector<std::pair<std::string, std::string>> edges,
        std::optional<std::string> exposure = std::nullopt,
        std::optional<std::string> outcome = std::nullopt);

    std::size_t n_nodes() const { return nodes_.size(); }
    const std::vector<std::string>& nodes() const { return nodes_; }
    const std::string& name(int v) const { return nodes_[v]; }
    int index_of(std::string_view name) const;  // throws on unknown node
    bool has_node(std::string_view name) const;

    const std::vector<int>& parents(int v) const { return parents_[v]; }
    const std::vector<int>& children(int v) const { return children_[v]; }
    bool has_edge(int from, int to) const;
    bool adjacent(int a, int b) const { return has_edge(a, b) || has_edge(b, a); }
    std::size_t n_edges() const { return n_edges_; }
    std::vector<std::pair<int, int>> edges() const;

    std::optional<int> exposure() const { return exposure_; }
    std::optional<int> outcome() const { return outcome_; }
    Role role(int v) const;

    std::vector<int> topological_order() const { return topo_order_; }
    // Strict descendants (v itself excluded), as a node-indexed mask.
    std::vector<bool> descendants_of(int v) const;
    std::vector<bool> ancestors_of(const std::set<int>& vs) const;  // includes vs

    // Canonical source text: declaration-order nodes with roles, then edges.
    std::string canonical_text() const;
    // FNV-1a 64-bit hash of canonical_text(), rendered as 16 hex digits.
    std::string fingerprint() const;

private:
    std::vector<std::string> nodes_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
    std::vector<int> topo_order_;
    std::optional<int> exposure_;
    std::optional<int> outcome_;
    std::size_t n_edges_ = 0;
};

enum class TripleKind { Chain, Fork, Collider };

// Simple undirected path; `interior` holds the orientation at each of the
// nodes.size()-2 interior nodes.
struct Path {
    std::vector<int> nodes;
    std::vector<TripleKind> interior;
};

struct AdjustmentVerdict {
    bool valid = false;
    bool blocked_confounding = false;   // condition 1
    bool no_causal_blocked = false;     // condition 2
    bool no_collider_opened = false;    // condition 3
    // One witnessing path per failed condition, in condition order.
    std::vector<std::pair<int, Path>> offending_paths;  // (condition, path)
};

enum class NodeLabel {
    ConfounderPathMember,
    Mediator,
    Collider,
    Exposure,
    Outcome,
    Other,
};

std::string to_string(NodeLabel label);

// Parses the dagitty-subset grammar:
//   dag { statements }
// where a statement is `Name -> Name`, `Name [exposure]`, `Name [outcome]`,
// or a bare `Name`; `#` starts a line comment.
Dag parse_dag(std::string_view text);

// All simple undirected paths between x and y with at most max_edges edges,
// in lexicographic order of the node-name sequence.
std::vector<Path> enumerate_paths(const Dag& dag, int x, int y, int max_edges);
std::vector<Path> enumerate_paths(const Dag& dag, int x, int y);  // unbounded

// d-connection rule for a single path: open iff no non-collider interior
// node is in z and every collider is in z or has a descendant in z.
bool path_open(const Dag& dag, const Path& path, const std::set<int>& z);

bool is_causal_path(const Dag& dag, const Path& path);

// Linear-time reachability (ancestral traversal); the all-paths definition
// is kept as an independent test oracle.
bool d_separated(const Dag& dag, int x, int y, const std::set<int>& z);

// Labels of v relative to the annotated exposure/outcome pair. A node may
// carry several labels; `Other` is returned alone when none apply.
std::vector<NodeLabel> classify_node(const Dag& dag, int v);

AdjustmentVerdict check_adjustment(const Dag& dag, const std::set<int>& z);

// All inclusion-minimal valid adjustment sets over the non-descendants of
// the exposure, ordered by size then lexicographically by node names.
std::vector<std::set<int>> minimal_adjustment_sets(const Dag& dag);

struct Independency {
    int x;
    int y;
    std::set<int> z;
};

// For every non-adjacent pair, the smallest separating set of size at most
// max_set_size (when one exists), in declaration-order pairs.
std::vector<Independency> implied_independencies(const Dag& dag, int max_set_size);

std::string path_to_string(const Dag& dag, const Path& path);
std::set<int> node_set(const Dag& dag, const std::vector<std::string>& names);
std::vector<std::string> set_names(const Dag& dag, const std::set<int>& z);

}  // namespace glmc
