// Shared test fixtures: reference trees, independent oracles, and random
// generators. The oracles here re-derive expected values by routes separate
// from the library implementation.
#pragma once

#include "pwhile/pwhile.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace testsupport {

using namespace pwhile;

inline Env label_of(long long cls) {
    Env e;
    e["class"] = Value(cls);
    return e;
}

struct TreeBuilder {
    TimedTree t;

    int node(long long cls, std::optional<std::string> cfg = std::nullopt) {
        TimedTree::Node n;
        n.label = label_of(cls);
        n.cfg = std::move(cfg);
        return t.add_node(std::move(n));
    }
    int node_env(Env env, std::optional<std::string> cfg = std::nullopt) {
        TimedTree::Node n;
        n.label = std::move(env);
        n.cfg = std::move(cfg);
        return t.add_node(std::move(n));
    }
    void edge(int from, int to, Rat prob, Rat dur) { t.nodes[from].edges.push_back({prob, dur, to}); }
    TimedTree done() {
        for (auto& n : t.nodes) n.leaf = n.edges.empty();
        return t;
    }
};

// The four reference trees: unit durations, uniform labels.
// T1: a chain of four nodes.
inline TimedTree ref_tree_1() {
    TreeBuilder b;
    int n1 = b.node(0), n2 = b.node(0), n3 = b.node(0), n4 = b.node(0);
    b.edge(n1, n2, 1, 1);
    b.edge(n2, n3, 1, 1);
    b.edge(n3, n4, 1, 1);
    return b.done();
}

// T2: a root splitting 1/2-1/2 into a two-step branch and a three-step branch.
inline TimedTree ref_tree_2() {
    TreeBuilder b;
    int n1 = b.node(0), n2 = b.node(0), n3 = b.node(0), n4 = b.node(0), n5 = b.node(0), n6 = b.node(0);
    b.edge(n1, n2, Rat(1, 2), 1);
    b.edge(n1, n3, Rat(1, 2), 1);
    b.edge(n2, n4, 1, 1);
    b.edge(n3, n5, 1, 1);
    b.edge(n5, n6, 1, 1);
    return b.done();
}

// T3: one step, then a 1/2-1/2 split into a leaf and a two-step branch.
inline TimedTree ref_tree_3() {
    TreeBuilder b;
    int n1 = b.node(0), n2 = b.node(0), n3 = b.node(0), n4 = b.node(0), n5 = b.node(0);
    b.edge(n1, n2, 1, 1);
    b.edge(n2, n3, Rat(1, 2), 1);
    b.edge(n2, n4, Rat(1, 2), 1);
    b.edge(n4, n5, 1, 1);
    return b.done();
}

// T4: two steps, then a 1/2-1/2 split into two leaves.
inline TimedTree ref_tree_4() {
    TreeBuilder b;
    int n1 = b.node(0), n2 = b.node(0), n3 = b.node(0), n4 = b.node(0), n5 = b.node(0);
    b.edge(n1, n2, 1, 1);
    b.edge(n2, n3, 1, 1);
    b.edge(n3, n4, Rat(1, 2), 1);
    b.edge(n3, n5, Rat(1, 2), 1);
    return b.done();
}

inline std::vector<TimedTree> ref_trees() {
    return {ref_tree_1(), ref_tree_2(), ref_tree_3(), ref_tree_4()};
}

// The two one-step systems whose joint distributions over (time, class)
// distinguish them although both marginals agree. Labels: 1 = filled class,
// 0 = hollow class; both roots carry the filled label.
inline TimedTree joint_example_left() {
    TreeBuilder b;
    int r = b.node(1);
    int s1 = b.node(0), s2 = b.node(0), s3 = b.node(1), s4 = b.node(1);
    b.edge(r, s1, Rat(1, 4), 1);
    b.edge(r, s2, Rat(1, 4), 2);
    b.edge(r, s3, Rat(1, 4), 1);
    b.edge(r, s4, Rat(1, 4), 2);
    return b.done();
}

inline TimedTree joint_example_right() {
    TreeBuilder b;
    int r = b.node(1);
    int s1 = b.node(1), s2 = b.node(1), s3 = b.node(0), s4 = b.node(0);
    b.edge(r, s1, Rat(1, 4), 2);
    b.edge(r, s2, Rat(1, 4), 2);
    b.edge(r, s3, Rat(1, 4), 1);
    b.edge(r, s4, Rat(1, 4), 1);
    return b.done();
}

// ---------------------------------------------------------------------------
// Independent oracles

// Root-to-leaf enumeration, written against the tree structure directly.
struct OraclePath {
    Rat prob;
    Rat time;
    Env final_env;
};

inline void oracle_paths_rec(const TimedTree& t, int node, Rat prob, Rat time,
                             std::vector<OraclePath>& out) {
    const auto& n = t.nodes[node];
    if (n.edges.empty()) {
        out.push_back({prob, time, n.full_env ? *n.full_env : n.label});
        return;
    }
    for (const auto& e : n.edges)
        oracle_paths_rec(t, e.child, Rat(prob * e.prob), Rat(time + e.dur), out);
}

inline std::vector<OraclePath> oracle_paths(const TimedTree& t) {
    std::vector<OraclePath> out;
    oracle_paths_rec(t, t.root, 1, 0, out);
    return out;
}

inline Rat oracle_expected_time(const TimedTree& t) {
    Rat e = 0;
    for (const auto& p : oracle_paths(t)) e += p.prob * p.time;
    return e;
}

inline std::map<std::pair<std::string, Rat>, Rat> oracle_joint(const TimedTree& t,
                                                               const std::set<std::string>& low) {
    std::map<std::pair<std::string, Rat>, Rat> out;
    for (const auto& p : oracle_paths(t)) out[{env_str(project(p.final_env, low)), p.time}] += p.prob;
    return out;
}

// Canonical bisimulation signature: two finite generative trees are
// PT-bisimilar iff their signatures coincide. Aggregates parallel branches
// by (duration, child signature).
inline std::string bisim_signature(const TimedTree& t, int node) {
    const auto& n = t.nodes[node];
    std::string s = "(" + env_str(n.label) + "|";
    std::map<std::pair<Rat, std::string>, Rat> agg;
    for (const auto& e : n.edges) agg[{e.dur, bisim_signature(t, e.child)}] += e.prob;
    for (const auto& [k, p] : agg)
        s += rat_str(k.first) + "~" + k.second + "*" + rat_str(p) + ";";
    return s + ")";
}

inline bool oracle_bisimilar(const TimedTree& a, const TimedTree& b) {
    return bisim_signature(a, a.root) == bisim_signature(b, b.root);
}

// Longest distance to a leaf, recomputed directly.
inline int oracle_height(const TimedTree& t, int node) {
    const auto& n = t.nodes[node];
    int h = 0;
    for (const auto& e : n.edges) h = std::max(h, 1 + oracle_height(t, e.child));
    return h;
}

// ---------------------------------------------------------------------------
// Random generators (deterministic seeds)

inline Rat pick_prob(std::mt19937_64& rng) {
    static const Rat probs[] = {Rat(1, 2), Rat(1, 3), Rat(1, 4), Rat(2, 3), Rat(3, 4)};
    return probs[rng() % 5];
}

inline TimedTree random_tree(std::mt19937_64& rng, int max_depth = 3) {
    TreeBuilder b;
    // breadth-limited recursive growth
    std::function<int(int)> grow = [&](int depth) -> int {
        bool leaf = depth >= max_depth || (rng() % 4 == 0);
        int id = b.node(static_cast<long long>(rng() % 2));
        if (leaf) return id;
        int arity = 1 + static_cast<int>(rng() % 3);
        std::vector<Rat> weights;
        Rat total = 0;
        for (int i = 0; i < arity; ++i) {
            Rat w(static_cast<long long>(1 + rng() % 4));
            weights.push_back(w);
            total += w;
        }
        for (int i = 0; i < arity; ++i) {
            int child = grow(depth + 1);
            b.edge(id, child, Rat(weights[i] / total), Rat(static_cast<long long>(rng() % 4)));
        }
        return id;
    };
    grow(0);
    TimedTree t = b.done();
    t.root = 0;
    return t;
}

// Random pWhile programs over a fixed declaration set. Loops are bounded by
// construction, so every generated program terminates.
struct ProgramGen {
    std::mt19937_64 rng;
    int choice_budget = 2;
    int loop_budget = 1;
    bool balanced_high_ifs = true; // balanced branches at high conditionals

    explicit ProgramGen(uint64_t seed) : rng(seed) {}

    ExprPtr low_int_expr() {
        switch (rng() % 5) {
            case 0: return mk_int(static_cast<long long>(rng() % 4));
            case 1: return mk_var("l");
            case 2: return mk_var("i");
            case 3: return mk_bin(BinaryOp::Add, mk_var("l"), mk_int(1));
            default: return mk_bin(BinaryOp::Sub, mk_var("i"), mk_var("l"));
        }
    }
    ExprPtr high_int_expr() {
        switch (rng() % 4) {
            case 0: return mk_var("h1");
            case 1: return mk_var("h2");
            case 2: return mk_bin(BinaryOp::Add, mk_var("h1"), mk_int(static_cast<long long>(rng() % 3)));
            default: return mk_bin(BinaryOp::Mul, mk_var("h2"), mk_int(2));
        }
    }
    ExprPtr low_bool_expr() {
        switch (rng() % 4) {
            case 0: return mk_bool(rng() % 2 == 0);
            case 1: return mk_bin(BinaryOp::Le, mk_var("i"), mk_int(static_cast<long long>(rng() % 3)));
            case 2: return mk_bin(BinaryOp::Eq, mk_var("l"), mk_int(0));
            default: return mk_var("b");
        }
    }
    ExprPtr high_bool_expr() {
        switch (rng() % 3) {
            case 0: return mk_bin(BinaryOp::Le, mk_var("h1"), mk_int(1));
            case 1: return mk_bin(BinaryOp::Eq, mk_var("h1"), mk_var("h2"));
            default: return mk_bin(BinaryOp::Ne, mk_var("h2"), mk_int(0));
        }
    }

    // commands of uniform duration for balanced branch pairs
    CommandPtr high_three_tick() {
        if (rng() % 2 == 0) return mk_assign(rng() % 2 ? "h1" : "h2", high_int_expr());
        return mk_skipasn(rng() % 2 ? "h1" : "h2", high_int_expr());
    }

    CommandPtr seq_of(std::vector<CommandPtr> cmds) {
        CommandPtr out = cmds.back();
        for (size_t i = cmds.size() - 1; i-- > 0;) out = mk_seq(cmds[i], out);
        return out;
    }

    CommandPtr branch_body(int n3, int n1) {
        std::vector<CommandPtr> cmds;
        for (int i = 0; i < n3; ++i) cmds.push_back(high_three_tick());
        for (int i = 0; i < n1; ++i) cmds.push_back(mk_skip());
        if (cmds.empty()) cmds.push_back(mk_skip());
        return seq_of(std::move(cmds));
    }

    CommandPtr leaf_cmd() {
        switch (rng() % 6) {
            case 0: return mk_assign("l", low_int_expr());
            case 1: return mk_assign("h1", high_int_expr());
            case 2: return mk_skipasn("h2", high_int_expr());
            case 3: return mk_skip();
            case 4: return mk_assign("b", low_bool_expr());
            default: return mk_assign("l", mk_bin(BinaryOp::Mul, mk_var("l"), mk_int(2)));
        }
    }

    CommandPtr gen_cmd(int depth, bool in_loop) {
        if (depth <= 0) return leaf_cmd();
        switch (rng() % 8) {
            case 0:
            case 1: return mk_seq(gen_cmd(depth - 1, in_loop), gen_cmd(depth - 1, in_loop));
            case 2: return mk_if(low_bool_expr(), gen_cmd(depth - 1, in_loop), gen_cmd(depth - 1, in_loop));
            case 3: {
                int n3 = static_cast<int>(rng() % 3), n1 = static_cast<int>(rng() % 2);
                CommandPtr thn = branch_body(n3, n1);
                CommandPtr els = balanced_high_ifs
                                     ? branch_body(n3, n1)
                                     : branch_body(static_cast<int>(rng() % 3), static_cast<int>(rng() % 2));
                return mk_if(high_bool_expr(), thn, els);
            }
            case 4: {
                if (choice_budget <= 0) return leaf_cmd();
                --choice_budget;
                return mk_choose(Prob::lit(pick_prob(rng)), gen_cmd(depth - 1, in_loop),
                                 gen_cmd(depth - 1, in_loop));
            }
            case 5: {
                if (in_loop || loop_budget <= 0) return leaf_cmd();
                --loop_budget;
                long long bound = 1 + static_cast<long long>(rng() % 3);
                CommandPtr body = gen_cmd(depth - 1, true);
                // i is reserved as the loop counter
                return mk_seq(mk_assign("i", mk_int(1)),
                              mk_while(mk_bin(BinaryOp::Le, mk_var("i"), mk_int(bound)),
                                       mk_seq(body, mk_assign("i", mk_bin(BinaryOp::Add, mk_var("i"),
                                                                          mk_int(1))))));
            }
            default: return leaf_cmd();
        }
    }

    Program gen() {
        choice_budget = 2;
        loop_budget = 1;
        Program prog;
        prog.decls = {Decl{"i", SecurityLevel::L, BaseType::Int, std::nullopt, {}},
                      Decl{"l", SecurityLevel::L, BaseType::Int, std::nullopt, {}},
                      Decl{"b", SecurityLevel::L, BaseType::Bool, std::nullopt, {}},
                      Decl{"h1", SecurityLevel::H, BaseType::Int, std::nullopt, {}},
                      Decl{"h2", SecurityLevel::H, BaseType::Int, std::nullopt, {}}};
        prog.body = normalize_seq(gen_cmd(3, false));
        return prog;
    }
};

inline std::vector<Env> small_high_domain() {
    std::vector<Env> out;
    for (long long a = 0; a <= 1; ++a)
        for (long long b = 0; b <= 1; ++b) {
            Env e;
            e["h1"] = Value(a);
            e["h2"] = Value(b);
            out.push_back(std::move(e));
        }
    return out;
}

inline std::string samples_dir() { return PWHILE_SAMPLES_DIR; }

inline Program load_sample(const std::string& name) {
    std::ifstream in(samples_dir() + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    auto p = parse_program(ss.str());
    if (!p) throw std::runtime_error("sample " + name + ": " + p.error().str());
    return p.value();
}

inline Env case_study_env(const std::string& bits, long long i = 1, long long s = 0) {
    Env e;
    e["i"] = Value(i);
    e["s"] = Value(s);
    std::vector<Value> k;
    for (char c : bits) k.push_back(Value(static_cast<long long>(c - '0')));
    e["k"] = k;
    return e;
}

} // namespace testsupport
