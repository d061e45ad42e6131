/*
 * Copyright 2026 The pwhile authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "pwhile/env.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pwhile {

using json = nlohmann::ordered_json;

/// Finite execution tree. Edges carry an exact probability and duration;
/// nodes carry the observed label (a full environment for concrete trees,
/// the low projection for collapsed ones). Collapsed nodes keep the full
/// environment on the side. `cfg` is the printed remaining command of the
/// configuration the node came from; two nodes with equal label and cfg
/// denote the same configuration.
struct TimedTree {
    struct Edge {
        Rat prob;
        Rat dur;
        int child;
    };
    struct Node {
        Env label;
        std::optional<Env> full_env;
        std::optional<std::string> cfg;
        bool leaf = false;
        // probabilistic branch point of the underlying system; collapsed
        // runs never cross one even if edge merging left a single edge
        bool branch_point = false;
        std::vector<Edge> edges;
    };

    std::vector<Node> nodes;
    int root = 0;

    int add_node(Node n) {
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size()) - 1;
    }
};

/// Height of every node: leaves 0, internal 1 + max over children.
inline std::vector<int> node_heights(const TimedTree& t) {
    std::vector<int> h(t.nodes.size(), -1);
    // children have larger indices than parents for trees we build, but do
    // not rely on it
    std::vector<int> order;
    order.reserve(t.nodes.size());
    std::vector<int> stack{t.root};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        order.push_back(n);
        for (const auto& e : t.nodes[n].edges) stack.push_back(e.child);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& node = t.nodes[*it];
        if (node.edges.empty()) {
            h[*it] = 0;
        } else {
            int m = 0;
            for (const auto& e : node.edges) m = std::max(m, h[e.child] + 1);
            h[*it] = m;
        }
    }
    return h;
}

inline int tree_height(const TimedTree& t) { return node_heights(t)[t.root]; }

/// Every internal node's outgoing probabilities sum to exactly one.
inline bool is_generative(const TimedTree& t) {
    for (const auto& n : t.nodes) {
        if (n.edges.empty()) continue;
        Rat sum = 0;
        for (const auto& e : n.edges) {
            if (e.prob <= 0 || e.prob > 1 || e.dur < 0) return false;
            sum += e.prob;
        }
        if (sum != 1) return false;
    }
    return true;
}

struct PathStats {
    struct Path {
        Rat prob;
        Rat time;
        Env final_env; // full environment of the leaf when available
    };
    std::vector<Path> paths;
    Rat expected_time;
    Rat total_prob;

    /// Distribution over (final low environment, total running time).
    std::map<std::pair<std::string, Rat>, Rat> joint(const std::set<std::string>& low) const {
        std::map<std::pair<std::string, Rat>, Rat> out;
        for (const auto& p : paths) out[{env_str(project(p.final_env, low)), p.time}] += p.prob;
        return out;
    }
};

/// Enumerates all root-to-leaf paths with their probability (product of edge
/// probabilities) and running time (sum of edge durations).
inline PathStats run_stats(const TimedTree& t) {
    PathStats stats;
    stats.expected_time = 0;
    stats.total_prob = 0;
    struct Frame {
        int node;
        Rat prob;
        Rat time;
    };
    std::vector<Frame> stack{{t.root, Rat(1), Rat(0)}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const auto& n = t.nodes[f.node];
        if (n.edges.empty()) {
            const Env& fin = n.full_env ? *n.full_env : n.label;
            stats.paths.push_back({f.prob, f.time, fin});
            stats.expected_time += f.prob * f.time;
            stats.total_prob += f.prob;
            continue;
        }
        for (const auto& e : n.edges) stack.push_back({e.child, Rat(f.prob * e.prob), Rat(f.time + e.dur)});
    }
    return stats;
}

namespace detail {

struct CollapseCtx {
    const TimedTree* in;
    const std::set<std::string>* low;
    TimedTree out;

    Env low_label(int n) const {
        const auto& node = in->nodes[n];
        const Env& full = node.full_env ? *node.full_env : node.label;
        return project(full, *low);
    }
    const Env& full_of(int n) const {
        const auto& node = in->nodes[n];
        return node.full_env ? *node.full_env : node.label;
    }

    // Follows the maximal run of probability-1 steps that stays low stable.
    // Stops on a leaf, on a probabilistic branch point, or once the low part
    // changes.
    std::pair<Rat, int> chase(int node, Rat acc, const Env& low0) {
        while (true) {
            const auto& n = in->nodes[node];
            if (n.edges.empty()) break;
            if (n.branch_point || n.edges.size() != 1 || n.edges[0].prob != 1) break;
            if (low_label(node) != low0) break;
            acc += n.edges[0].dur;
            node = n.edges[0].child;
        }
        return {acc, node};
    }

    int build(int orig) {
        const auto& n = in->nodes[orig];
        TimedTree::Node out_node;
        out_node.label = low_label(orig);
        out_node.full_env = full_of(orig);
        out_node.cfg = n.cfg;
        out_node.leaf = n.edges.empty();
        out_node.branch_point = n.branch_point || n.edges.size() > 1;
        int id = out.add_node(std::move(out_node));
        if (n.edges.empty()) return id;

        Env low0 = low_label(orig);
        struct Collapsed {
            Rat prob;
            Rat dur;
            int target; // original-tree node
        };
        std::vector<Collapsed> edges;
        for (const auto& e : n.edges) {
            auto [dur, target] = chase(e.child, e.dur, low0);
            edges.push_back({e.prob, dur, target});
        }
        // Successors denoting the same configuration share one child node;
        // parallel edges of equal duration merge by adding probabilities.
        std::vector<std::pair<std::string, int>> child_ids; // key -> collapsed node
        auto child_key = [&](int target) -> std::optional<std::string> {
            const auto& tn = in->nodes[target];
            if (!tn.cfg) return std::nullopt;
            return env_str(full_of(target)) + "|" + *tn.cfg + "|" + (tn.edges.empty() ? "T" : "C");
        };
        for (const auto& ce : edges) {
            int child = -1;
            auto key = child_key(ce.target);
            if (key) {
                for (const auto& [k, cid] : child_ids)
                    if (k == *key) {
                        child = cid;
                        break;
                    }
            }
            if (child < 0) {
                child = build(ce.target);
                if (key) child_ids.emplace_back(*key, child);
            }
            bool merged = false;
            for (auto& existing : out.nodes[id].edges) {
                if (existing.child == child && existing.dur == ce.dur) {
                    existing.prob += ce.prob;
                    merged = true;
                    break;
                }
            }
            if (!merged) out.nodes[id].edges.push_back({ce.prob, ce.dur, child});
        }
        return id;
    }
};

} // namespace detail

/// Quotients a tree by the collapsed transition relation: each collapsed edge
/// bundles one original edge with the maximal following run of deterministic,
/// low-stable steps, durations summed. Node labels become low projections;
/// the full environment is retained for analysis.
///
/// Determinism is a property of the underlying system: a former branch point
/// whose merged alternatives leave a single edge is still a branch point, so
/// re-collapsing a collapsed tree changes nothing.
inline TimedTree collapse(const TimedTree& t, const std::set<std::string>& low) {
    detail::CollapseCtx ctx{&t, &low, {}};
    ctx.build(t.root);
    ctx.out.root = 0;
    return ctx.out;
}

inline json env_to_json(const Env& e) {
    json out = json::object();
    for (const auto& [k, v] : e) {
        if (std::holds_alternative<Value>(v)) {
            const Value& val = std::get<Value>(v);
            if (value_is_int(val))
                out[k] = std::get<long long>(val);
            else
                out[k] = std::get<bool>(val);
        } else {
            json arr = json::array();
            for (const auto& x : std::get<std::vector<Value>>(v)) {
                if (value_is_int(x))
                    arr.push_back(std::get<long long>(x));
                else
                    arr.push_back(std::get<bool>(x));
            }
            out[k] = arr;
        }
    }
    return out;
}

inline json tree_to_json(const TimedTree& t) {
    json nodes = json::array();
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        json n;
        n["id"] = i;
        n["label"] = env_to_json(t.nodes[i].label);
        n["leaf"] = t.nodes[i].edges.empty();
        nodes.push_back(std::move(n));
    }
    json edges = json::array();
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        for (const auto& e : t.nodes[i].edges) {
            json j;
            j["from"] = i;
            j["to"] = e.child;
            j["prob"] = rat_str(e.prob);
            j["dur"] = rat_str(e.dur);
            edges.push_back(std::move(j));
        }
    }
    json out;
    out["nodes"] = std::move(nodes);
    out["edges"] = std::move(edges);
    out["root"] = t.root;
    return out;
}

inline std::string tree_to_dot(const TimedTree& t) {
    std::string s = "digraph tree {\n";
    for (size_t i = 0; i < t.nodes.size(); ++i) {
        std::string label = env_str(t.nodes[i].label);
        std::string escaped;
        for (char c : label) {
            if (c == '"' || c == '\\') escaped += '\\';
            escaped += c;
        }
        s += "  n" + std::to_string(i) + " [label=\"" + escaped + "\"";
        if (t.nodes[i].edges.empty()) s += ", shape=doublecircle";
        s += "];\n";
    }
    for (size_t i = 0; i < t.nodes.size(); ++i)
        for (const auto& e : t.nodes[i].edges)
            s += "  n" + std::to_string(i) + " -> n" + std::to_string(e.child) + " [label=\"" +
                 rat_str(e.prob) + " : " + rat_str(e.dur) + "\"];\n";
    s += "}\n";
    return s;
}

} // namespace pwhile
