#include "glmcausal/dag.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>

namespace glmc {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

Dag::Dag(std::vector<std::string> nodes,
         std::vector<std::pair<std::string, std::string>> edges,
         std::optional<std::string> exposure,
         std::optional<std::string> outcome)
    : nodes_(std::move(nodes)) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (index.count(nodes_[i]))
            throw DagError("duplicate node '" + nodes_[i] + "'");
        index[nodes_[i]] = static_cast<int>(i);
    }
    parents_.assign(nodes_.size(), {});
    children_.assign(nodes_.size(), {});
    for (const auto& [from, to] : edges) {
        auto fi = index.find(from);
        auto ti = index.find(to);
        if (fi == index.end()) throw DagError("edge endpoint '" + from + "' is not a declared node");
        if (ti == index.end()) throw DagError("edge endpoint '" + to + "' is not a declared node");
        int f = fi->second, t = ti->second;
        if (f == t) throw DagError("self-loop on '" + from + "'");
        if (std::find(children_[f].begin(), children_[f].end(), t) != children_[f].end())
            throw DagError("duplicate edge " + from + " -> " + to);
        children_[f].push_back(t);
        parents_[t].push_back(f);
        ++n_edges_;
    }
    if (exposure) exposure_ = index_of(*exposure);
    if (outcome) outcome_ = index_of(*outcome);
    if (exposure_ && outcome_ && *exposure_ == *outcome_)
        throw DagError("exposure and outcome must be distinct nodes");

    // Kahn's algorithm; on failure, report one cycle found by DFS.
    std::vector<int> indeg(nodes_.size());
    for (std::size_t v = 0; v < nodes_.size(); ++v)
        indeg[v] = static_cast<int>(parents_[v].size());
    std::vector<int> queue;
    for (std::size_t v = 0; v < nodes_.size(); ++v)
        if (indeg[v] == 0) queue.push_back(static_cast<int>(v));
    while (!queue.empty()) {
        int v = queue.front();
        queue.erase(queue.begin());
        topo_order_.push_back(v);
        for (int c : children_[v])
            if (--indeg[c] == 0) queue.push_back(c);
    }
    if (topo_order_.size() != nodes_.size()) {
        // Walk children from any leftover node until a repeat closes a cycle.
        int start = -1;
        for (std::size_t v = 0; v < nodes_.size(); ++v)
            if (indeg[v] > 0) {
                start = static_cast<int>(v);
                break;
            }
        std::vector<int> trail;
        std::vector<int> pos(nodes_.size(), -1);
        int v = start;
        while (pos[v] < 0) {
            pos[v] = static_cast<int>(trail.size());
            trail.push_back(v);
            for (int c : children_[v])
                if (indeg[c] > 0) {
                    v = c;
                    break;
                }
        }
        std::string cyc;
        for (std::size_t i = pos[v]; i < trail.size(); ++i)
            cyc += nodes_[trail[i]] + " -> ";
        cyc += nodes_[v];
        throw CycleError("graph is cyclic: " + cyc);
    }
}

int Dag::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i] == name) return static_cast<int>(i);
    throw DagError("unknown node '" + std::string(name) + "'");
}

bool Dag::has_node(std::string_view name) const {
    for (const auto& n : nodes_)
        if (n == name) return true;
    return false;
}

bool Dag::has_edge(int from, int to) const {
    const auto& ch = children_[from];
    return std::find(ch.begin(), ch.end(), to) != ch.end();
}

std::vector<std::pair<int, int>> Dag::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(n_edges_);
    for (std::size_t v = 0; v < nodes_.size(); ++v)
        for (int c : children_[v]) out.emplace_back(static_cast<int>(v), c);
    return out;
}

Role Dag::role(int v) const {
    if (exposure_ && *exposure_ == v) return Role::Exposure;
    if (outcome_ && *outcome_ == v) return Role::Outcome;
    return Role::None;
}

std::vector<bool> Dag::descendants_of(int v) const {
    std::vector<bool> mark(nodes_.size(), false);
    std::vector<int> stack{v};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int c : children_[u])
            if (!mark[c]) {
                mark[c] = true;
                stack.push_back(c);
            }
    }
    mark[v] = false;
    return mark;
}

std::vector<bool> Dag::ancestors_of(const std::set<int>& vs) const {
    std::vector<bool> mark(nodes_.size(), false);
    std::vector<int> stack(vs.begin(), vs.end());
    for (int v : stack) mark[v] = true;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int p : parents_[u])
            if (!mark[p]) {
                mark[p] = true;
                stack.push_back(p);
            }
    }
    return mark;
}

std::string Dag::canonical_text() const {
    std::string out = "dag {\n";
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        out += "  " + nodes_[v];
        if (exposure_ && *exposure_ == static_cast<int>(v)) out += " [exposure]";
        if (outcome_ && *outcome_ == static_cast<int>(v)) out += " [outcome]";
        out += '\n';
    }
    // Edges sorted by child name within each node, so the text (and hence
    // the fingerprint) does not depend on edge declaration order.
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
        std::vector<int> ch = children_[v];
        std::sort(ch.begin(), ch.end(),
                  [&](int a, int b) { return nodes_[a] < nodes_[b]; });
        for (int c : ch) out += "  " + nodes_[v] + " -> " + nodes_[c] + "\n";
    }
    out += "}\n";
    return out;
}

std::string Dag::fingerprint() const {
    std::uint64_t h = fnv1a64(canonical_text());
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string to_string(NodeLabel label) {
    switch (label) {
        case NodeLabel::ConfounderPathMember: return "confounder-path-member";
        case NodeLabel::Mediator: return "mediator";
        case NodeLabel::Collider: return "collider";
        case NodeLabel::Exposure: return "exposure";
        case NodeLabel::Outcome: return "outcome";
        case NodeLabel::Other: return "other";
    }
    return "other";
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
    enum Kind { Name, Arrow, LBrace, RBrace, LBracket, RBracket, End } kind;
    std::string text;
    int line;
    int col;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_ws();
        int line = line_, col = col_;
        if (pos_ >= src_.size()) return {Token::End, "", line, col};
        char c = src_[pos_];
        if (c == '{') return advance({Token::LBrace, "{", line, col}, 1);
        if (c == '}') return advance({Token::RBrace, "}", line, col}, 1);
        if (c == '[') return advance({Token::LBracket, "[", line, col}, 1);
        if (c == ']') return advance({Token::RBracket, "]", line, col}, 1);
        if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>')
            return advance({Token::Arrow, "->", line, col}, 2);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                ++pos_;
                ++col_;
            }
            return {Token::Name, std::string(src_.substr(start, pos_ - start)), line, col};
        }
        throw DagParseError(std::string("unexpected character '") + c + "'", line, col);
    }

private:
    Token advance(Token t, int n) {
        pos_ += n;
        col_ += n;
        return t;
    }
    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '\n') {
                ++pos_;
                ++line_;
                col_ = 1;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
                ++col_;
            } else {
                break;
            }
        }
    }
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

Dag parse_dag(std::string_view text) {
    Lexer lex(text);
    auto expect = [&](Token::Kind kind, const char* what) {
        Token t = lex.next();
        if (t.kind != kind)
            throw DagParseError(std::string("expected ") + what + ", got '" + t.text + "'",
                                t.line, t.col);
        return t;
    };
    Token head = expect(Token::Name, "'dag'");
    if (head.text != "dag")
        throw DagParseError("expected 'dag', got '" + head.text + "'", head.line, head.col);
    expect(Token::LBrace, "'{'");

    std::vector<std::string> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::optional<std::string> exposure, outcome;
    auto declare = [&](const std::string& name) {
        if (std::find(nodes.begin(), nodes.end(), name) == nodes.end()) nodes.push_back(name);
    };

    Token t = lex.next();
    while (t.kind != Token::RBrace) {
        if (t.kind == Token::End)
            throw DagParseError("unexpected end of input, expected '}'", t.line, t.col);
        if (t.kind != Token::Name)
            throw DagParseError("expected node name, got '" + t.text + "'", t.line, t.col);
        std::string name = t.text;
        declare(name);
        t = lex.next();
        if (t.kind == Token::Arrow) {
            Token to = expect(Token::Name, "node name");
            declare(to.text);
            edges.emplace_back(name, to.text);
            t = lex.next();
        } else if (t.kind == Token::LBracket) {
            Token role = expect(Token::Name, "'exposure' or 'outcome'");
            if (role.text == "exposure") {
                if (exposure)
                    throw DagParseError("duplicate exposure annotation on '" + name +
                                        "' ('" + *exposure + "' already annotated)",
                                        role.line, role.col);
                exposure = name;
            } else if (role.text == "outcome") {
                if (outcome)
                    throw DagParseError("duplicate outcome annotation on '" + name +
                                        "' ('" + *outcome + "' already annotated)",
                                        role.line, role.col);
                outcome = name;
            } else {
                throw DagParseError("unknown role '" + role.text + "'", role.line, role.col);
            }
            expect(Token::RBracket, "']'");
            t = lex.next();
        }
        // A bare name just declares the node.
    }
    Token tail = lex.next();
    if (tail.kind != Token::End)
        throw DagParseError("trailing input after '}'", tail.line, tail.col);
    return Dag(std::move(nodes), std::move(edges), exposure, outcome);
}

// ---------------------------------------------------------------------------
// Paths and d-separation

namespace {

TripleKind orientation(const Dag& dag, int prev, int mid, int next) {
    bool in_from_prev = dag.has_edge(prev, mid);
    bool in_from_next = dag.has_edge(next, mid);
    if (in_from_prev && in_from_next) return TripleKind::Collider;
    if (dag.has_edge(mid, prev) && dag.has_edge(mid, next)) return TripleKind::Fork;
    return TripleKind::Chain;
}

Path make_path(const Dag& dag, const std::vector<int>& nodes) {
    Path p;
    p.nodes = nodes;
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i)
        p.interior.push_back(orientation(dag, nodes[i - 1], nodes[i], nodes[i + 1]));
    return p;
}

}  // namespace

std::vector<Path> enumerate_paths(const Dag& dag, int x, int y, int max_edges) {
    if (x == y) throw DagError("path endpoints must be distinct");
    // Neighbors sorted by name give lexicographic path order directly.
    std::vector<std::vector<int>> neighbors(dag.n_nodes());
    for (std::size_t v = 0; v < dag.n_nodes(); ++v) {
        std::set<int> nb;
        for (int p : dag.parents(static_cast<int>(v))) nb.insert(p);
        for (int c : dag.children(static_cast<int>(v))) nb.insert(c);
        neighbors[v].assign(nb.begin(), nb.end());
        std::sort(neighbors[v].begin(), neighbors[v].end(),
                  [&](int a, int b) { return dag.name(a) < dag.name(b); });
    }
    std::vector<Path> out;
    std::vector<int> current{x};
    std::vector<bool> visited(dag.n_nodes(), false);
    visited[x] = true;
    std::function<void()> dfs = [&] {
        int v = current.back();
        if (static_cast<int>(current.size()) > max_edges) return;
        for (int nb : neighbors[v]) {
            if (nb == y) {
                current.push_back(y);
                out.push_back(make_path(dag, current));
                current.pop_back();
            } else if (!visited[nb]) {
                visited[nb] = true;
                current.push_back(nb);
                dfs();
                current.pop_back();
                visited[nb] = false;
            }
        }
    };
    dfs();
    return out;
}

std::vector<Path> enumerate_paths(const Dag& dag, int x, int y) {
    return enumerate_paths(dag, x, y, static_cast<int>(dag.n_nodes()));
}

bool path_open(const Dag& dag, const Path& path, const std::set<int>& z) {
    if (z.count(path.nodes.front()) || z.count(path.nodes.back()))
        throw DagError("conditioning set contains a path endpoint");
    for (std::size_t i = 0; i < path.interior.size(); ++i) {
        int v = path.nodes[i + 1];
        if (path.interior[i] == TripleKind::Collider) {
            bool opened = z.count(v) > 0;
            if (!opened) {
                auto desc = dag.descendants_of(v);
                for (int u : z)
                    if (desc[u]) {
                        opened = true;
                        break;
                    }
            }
            if (!opened) return false;
        } else {
            if (z.count(v)) return false;
        }
    }
    return true;
}

bool is_causal_path(const Dag& dag, const Path& path) {
    for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i)
        if (!dag.has_edge(path.nodes[i], path.nodes[i + 1])) return false;
    return true;
}

bool d_separated(const Dag& dag, int x, int y, const std::set<int>& z) {
    if (x == y) throw DagError("d-separation query requires distinct nodes");
    if (z.count(x) || z.count(y))
        throw DagError("conditioning set contains a query node");
    // Reachability over active trails. Direction "up" means the trail enters
    // the node against an arrow (from a child); "down" means along an arrow.
    auto anc_z = dag.ancestors_of(z);
    enum { Up = 0, Down = 1 };
    std::vector<std::array<bool, 2>> visited(dag.n_nodes(), {false, false});
    std::vector<std::pair<int, int>> stack{{x, Up}};
    while (!stack.empty()) {
        auto [v, d] = stack.back();
        stack.pop_back();
        if (visited[v][d]) continue;
        visited[v][d] = true;
        if (v == y) return false;
        bool in_z = z.count(v) > 0;
        if (d == Up) {
            if (!in_z) {
                for (int p : dag.parents(v)) stack.push_back({p, Up});
                for (int c : dag.children(v)) stack.push_back({c, Down});
            }
        } else {
            if (!in_z)
                for (int c : dag.children(v)) stack.push_back({c, Down});
            if (anc_z[v])
                for (int p : dag.parents(v)) stack.push_back({p, Up});
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Adjustment machinery

namespace {

std::pair<int, int> require_annotations(const Dag& dag) {
    if (!dag.exposure() || !dag.outcome())
        throw DagError("DAG must annotate both an exposure and an outcome");
    return {*dag.exposure(), *dag.outcome()};
}

bool path_has_collider(const Path& path) {
    for (auto k : path.interior)
        if (k == TripleKind::Collider) return true;
    return false;
}

}  // namespace

std::vector<NodeLabel> classify_node(const Dag& dag, int v) {
    auto [e, o] = require_annotations(dag);
    if (v == e) return {NodeLabel::Exposure};
    if (v == o) return {NodeLabel::Outcome};

    std::vector<NodeLabel> labels;
    auto paths = enumerate_paths(dag, e, o);
    auto desc_e = dag.descendants_of(e);
    auto anc_o = dag.ancestors_of({o});
    if (desc_e[v] && anc_o[v]) labels.push_back(NodeLabel::Mediator);

    bool confounder_member = false;
    bool collider = false;
    for (const auto& p : paths) {
        bool on_path = std::find(p.nodes.begin() + 1, p.nodes.end() - 1, v) != p.nodes.end() - 1;
        if (!on_path) continue;
        bool backdoor = dag.has_edge(p.nodes[1], e);
        if (backdoor && !path_has_collider(p)) confounder_member = true;
        for (std::size_t i = 0; i < p.interior.size(); ++i)
            if (p.nodes[i + 1] == v && p.interior[i] == TripleKind::Collider) collider = true;
    }
    if (confounder_member) labels.push_back(NodeLabel::ConfounderPathMember);
    if (collider) labels.push_back(NodeLabel::Collider);
    if (labels.empty()) labels.push_back(NodeLabel::Other);
    return labels;
}

AdjustmentVerdict check_adjustment(const Dag& dag, const std::set<int>& z) {
    auto [e, o] = require_annotations(dag);
    if (z.count(e) || z.count(o))
        throw DagError("adjustment set must not contain the exposure or outcome");

    AdjustmentVerdict verdict;
    verdict.blocked_confounding = true;
    verdict.no_causal_blocked = true;
    verdict.no_collider_opened = true;

    const std::set<int> empty;
    for (const auto& p : enumerate_paths(dag, e, o)) {
        if (is_causal_path(dag, p)) {
            if (!path_open(dag, p, z)) {
                if (verdict.no_causal_blocked) verdict.offending_paths.emplace_back(2, p);
                verdict.no_causal_blocked = false;
            }
        } else if (path_open(dag, p, empty)) {
            // Open spurious path (confounding): must be blocked by z.
            if (path_open(dag, p, z)) {
                if (verdict.blocked_confounding) verdict.offending_paths.emplace_back(1, p);
                verdict.blocked_confounding = false;
            }
        } else {
            // Collider-blocked path: must stay blocked under z.
            if (path_open(dag, p, z)) {
                if (verdict.no_collider_opened) verdict.offending_paths.emplace_back(3, p);
                verdict.no_collider_opened = false;
            }
        }
    }
    std::sort(verdict.offending_paths.begin(), verdict.offending_paths.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    verdict.valid = verdict.blocked_confounding && verdict.no_causal_blocked &&
                    verdict.no_collider_opened;
    return verdict;
}

std::vector<std::set<int>> minimal_adjustment_sets(const Dag& dag) {
    auto [e, o] = require_annotations(dag);
    auto desc_e = dag.descendants_of(e);
    std::vector<int> candidates;
    for (std::size_t v = 0; v < dag.n_nodes(); ++v) {
        int vi = static_cast<int>(v);
        if (vi == e || vi == o || desc_e[vi]) continue;
        candidates.push_back(vi);
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](int a, int b) { return dag.name(a) < dag.name(b); });

    std::vector<std::set<int>> found;
    auto is_superset_of_found = [&](const std::set<int>& z) {
        for (const auto& f : found)
            if (std::includes(z.begin(), z.end(), f.begin(), f.end())) return true;
        return false;
    };
    // Subsets by size, lexicographic within a size; supersets of an accepted
    // set are skipped, so everything kept is inclusion-minimal.
    int m = static_cast<int>(candidates.size());
    for (int size = 0; size <= m; ++size) {
        std::vector<int> pick(size);
        std::function<void(int, int)> choose = [&](int start, int depth) {
            if (depth == size) {
                std::set<int> z(pick.begin(), pick.end());
                if (is_superset_of_found(z)) return;
                if (check_adjustment(dag, z).valid) found.push_back(z);
                return;
            }
            for (int i = start; i < m; ++i) {
                pick[depth] = candidates[i];
                choose(i + 1, depth + 1);
            }
        };
        choose(0, 0);
    }
    return found;
}

std::vector<Independency> implied_independencies(const Dag& dag, int max_set_size) {
    std::vector<Independency> out;
    int n = static_cast<int>(dag.n_nodes());
    for (int x = 0; x < n; ++x) {
        for (int y = x + 1; y < n; ++y) {
            if (dag.adjacent(x, y)) continue;
            std::vector<int> candidates;
            for (int v = 0; v < n; ++v)
                if (v != x && v != y) candidates.push_back(v);
            std::sort(candidates.begin(), candidates.end(),
                      [&](int a, int b) { return dag.name(a) < dag.name(b); });
            bool done = false;
            int m = static_cast<int>(candidates.size());
            for (int size = 0; size <= std::min(max_set_size, m) && !done; ++size) {
                std::vector<int> pick(size);
                std::function<void(int, int)> choose = [&](int start, int depth) {
                    if (done) return;
                    if (depth == size) {
                        std::set<int> z(pick.begin(), pick.end());
                        if (d_separated(dag, x, y, z)) {
                            out.push_back({x, y, z});
                            done = true;
                        }
                        return;
                    }
                    for (int i = start; i < m && !done; ++i) {
                        pick[depth] = candidates[i];
                        choose(i + 1, depth + 1);
                    }
                };
                choose(0, 0);
            }
        }
    }
    return out;
}

std::string path_to_string(const Dag& dag, const Path& path) {
    std::string out;
    for (std::size_t i = 0; i < path.nodes.size(); ++i) {
        if (i) {
            bool forward = dag.has_edge(path.nodes[i - 1], path.nodes[i]);
            out += forward ? " -> " : " <- ";
        }
        out += dag.name(path.nodes[i]);
    }
    return out;
}

std::set<int> node_set(const Dag& dag, const std::vector<std::string>& names) {
    std::set<int> z;
    for (const auto& n : names) z.insert(dag.index_of(n));
    return z;
}

std::vector<std::string> set_names(const Dag& dag, const std::set<int>& z) {
    std::vector<std::string> out;
    for (int v : z) out.push_back(dag.name(v));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace glmc
