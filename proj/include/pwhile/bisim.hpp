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

#include "pwhile/semantics.hpp"
#include "pwhile/tree.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pwhile {

struct NodeKey {
    int tree; // 0 or 1
    int node;
};

/// Height strata of a tree pair. Layer n holds the nodes of height n
/// (distance to the farthest leaf) of each tree separately; layers run from
/// the leaves up to the height of the taller tree.
struct Stratified {
    std::array<std::vector<int>, 2> height;
    int max_height = 0;
    std::vector<std::array<std::vector<int>, 2>> layers;
};

inline Stratified stratify(const TimedTree& a, const TimedTree& b) {
    Stratified s;
    s.height[0] = node_heights(a);
    s.height[1] = node_heights(b);
    s.max_height = std::max(s.height[0][a.root], s.height[1][b.root]);
    s.layers.assign(static_cast<size_t>(s.max_height) + 1, {});
    for (int t = 0; t < 2; ++t) {
        const auto& h = s.height[t];
        for (size_t n = 0; n < h.size(); ++n) s.layers[static_cast<size_t>(h[n])][static_cast<size_t>(t)].push_back(static_cast<int>(n));
    }
    return s;
}

/// Joint distribution over (duration, successor block) of one node.
using JointDist = std::map<std::pair<Rat, int>, Rat>;

/// Coarsest stable partition of the disjoint union of two trees, stratified
/// by height: two nodes share a block iff they live in the same stratum,
/// carry the same label, and have equal joint distributions over the blocks
/// below. Equality on the tree union is exactly PT-bisimilarity.
struct Partition {
    const TimedTree* trees[2];
    Stratified strat;
    std::array<std::vector<int>, 2> block_of;
    struct Block {
        int height;
        Env label;
        NodeKey rep;
        std::vector<NodeKey> members;
    };
    std::vector<Block> blocks;

    const TimedTree::Node& node(NodeKey k) const { return trees[k.tree]->nodes[static_cast<size_t>(k.node)]; }
    int block(NodeKey k) const { return block_of[static_cast<size_t>(k.tree)][static_cast<size_t>(k.node)]; }
    int root_block(int tree) const { return block({tree, trees[tree]->root}); }
};

inline JointDist chi(const Partition& part, NodeKey k) {
    JointDist out;
    const auto& n = part.node(k);
    for (const auto& e : n.edges) out[{e.dur, part.block({k.tree, e.child})}] += e.prob;
    return out;
}

inline Partition refine(const TimedTree& a, const TimedTree& b) {
    Partition part{{&a, &b}, stratify(a, b), {}, {}};
    part.block_of[0].assign(a.nodes.size(), -1);
    part.block_of[1].assign(b.nodes.size(), -1);

    for (int h = 0; h <= part.strat.max_height; ++h) {
        std::map<std::string, int> key_to_block;
        for (int t = 0; t < 2; ++t) {
            for (int n : part.strat.layers[static_cast<size_t>(h)][static_cast<size_t>(t)]) {
                NodeKey k{t, n};
                JointDist sig = chi(part, k);
                std::string key = env_str(part.node(k).label) + "#";
                for (const auto& [dc, p] : sig)
                    key += rat_str(dc.first) + "@" + std::to_string(dc.second) + ":" + rat_str(p) + ";";
                auto it = key_to_block.find(key);
                int id;
                if (it == key_to_block.end()) {
                    id = static_cast<int>(part.blocks.size());
                    part.blocks.push_back({h, part.node(k).label, k, {}});
                    key_to_block.emplace(std::move(key), id);
                } else {
                    id = it->second;
                }
                part.block_of[static_cast<size_t>(t)][static_cast<size_t>(n)] = id;
                part.blocks[static_cast<size_t>(id)].members.push_back(k);
            }
        }
    }
    return part;
}

struct Uniform {};
struct ClassMatch {};
struct TimeRescale {
    std::function<Rat(const Rat&)> weight; // nonnegative; rescales by duration
};
using WeightScheme = std::variant<Uniform, ClassMatch, TimeRescale>;

struct DeltaWitness {
    int layer = 0;
    NodeKey s1{0, 0};
    std::optional<NodeKey> s2;
    std::optional<std::pair<Rat, int>> entry; // (duration, block) attaining the supremum
    bool label_mismatch = false;
    bool unmatched = false;
};

struct DeltaResult {
    Rat value;
    std::optional<DeltaWitness> witness;
    // One-directional sweep values, exposed for diagnostics. For the
    // class-weighted variant both equal `value`.
    Rat dir_forward;
    Rat dir_backward;
};

namespace detail {

// Weight table: duration-based weights (uniform / rescaled) plus per-block
// matching measures for the class-weighted variant.
struct Weights {
    std::function<Rat(const Rat&)> by_dur; // nullptr-like marker via valid flag
    bool duration_based = true;
    std::vector<Rat> mu; // per block, class-weighted variant

    Rat entry_weight(const Rat& dur, int block) const {
        if (duration_based) return by_dur ? by_dur(dur) : Rat(1);
        return mu[static_cast<size_t>(block)];
    }
};

// Largest weighted absolute difference between two joint distributions.
// Nodes with different labels are maximally distinguishable.
inline Rat weighted_sup(const JointDist& x, const JointDist& y, const Weights& w,
                        std::optional<std::pair<Rat, int>>* arg = nullptr) {
    Rat best = 0;
    auto consider = [&](const std::pair<Rat, int>& key, const Rat& dx, const Rat& dy) {
        Rat d = dx - dy;
        if (d < 0) d = -d;
        Rat v = w.entry_weight(key.first, key.second) * d;
        if (v > best) {
            best = v;
            if (arg) *arg = key;
        }
    };
    auto iy = y.begin();
    for (const auto& [key, p] : x) {
        while (iy != y.end() && iy->first < key) {
            consider(iy->first, Rat(0), iy->second);
            ++iy;
        }
        if (iy != y.end() && iy->first == key) {
            consider(key, p, iy->second);
            ++iy;
        } else {
            consider(key, p, Rat(0));
        }
    }
    for (; iy != y.end(); ++iy) consider(iy->first, Rat(0), iy->second);
    return best;
}

inline Rat weighted_mass(const JointDist& x, const Weights& w) {
    Rat m = 0;
    for (const auto& [key, p] : x) m += w.entry_weight(key.first, key.second) * p;
    return m;
}

inline Rat pair_distance(const Partition& part, NodeKey s1, NodeKey s2, const Weights& w,
                         DeltaWitness* wit = nullptr) {
    if (part.node(s1).label != part.node(s2).label) {
        if (wit) {
            wit->s1 = s1;
            wit->s2 = s2;
            wit->label_mismatch = true;
            wit->entry.reset();
        }
        return Rat(1);
    }
    std::optional<std::pair<Rat, int>> arg;
    Rat v = weighted_sup(chi(part, s1), chi(part, s2), w, &arg);
    if (wit) {
        wit->s1 = s1;
        wit->s2 = s2;
        wit->label_mismatch = false;
        wit->entry = arg;
    }
    return v;
}

// Matching measures for the class-weighted variant: processed stratum by
// stratum from the leaves, mu of a block is the smallest class distance to
// any other block of its stratum (1 when it has no competitor), each class
// distance being the weighted supremum gap between representatives. The
// block-pair values double as the variant's per-layer leakage values; the
// pair's result is the value at the roots.
inline std::vector<Rat> matching_measures(const Partition& part,
                                          std::map<std::pair<int, int>, Rat>* pair_values = nullptr) {
    std::vector<Rat> mu(part.blocks.size(), Rat(1));
    Weights w;
    w.duration_based = false;

    std::vector<std::vector<int>> by_height(static_cast<size_t>(part.strat.max_height) + 1);
    for (size_t b = 0; b < part.blocks.size(); ++b)
        by_height[static_cast<size_t>(part.blocks[b].height)].push_back(static_cast<int>(b));

    for (int h = 0; h <= part.strat.max_height; ++h) {
        const auto& blocks = by_height[static_cast<size_t>(h)];
        std::map<std::pair<int, int>, Rat> f;
        w.mu = mu; // weights over strictly lower strata are final
        for (size_t i = 0; i < blocks.size(); ++i) {
            for (size_t j = i + 1; j < blocks.size(); ++j) {
                Rat v = pair_distance(part, part.blocks[static_cast<size_t>(blocks[i])].rep,
                                      part.blocks[static_cast<size_t>(blocks[j])].rep, w);
                f[{blocks[i], blocks[j]}] = v;
                if (pair_values) (*pair_values)[{blocks[i], blocks[j]}] = v;
            }
        }
        for (size_t i = 0; i < blocks.size(); ++i) {
            Rat best = 1;
            bool any = false;
            for (size_t j = 0; j < blocks.size(); ++j) {
                if (i == j) continue;
                auto key = std::minmax(blocks[i], blocks[j]);
                Rat v = f[{key.first, key.second}];
                if (!any || v < best) best = v;
                any = true;
            }
            mu[static_cast<size_t>(blocks[i])] = any ? best : Rat(1);
        }
    }
    return mu;
}

inline Weights resolve_weights(const Partition& part, const WeightScheme& scheme) {
    Weights w;
    if (std::holds_alternative<Uniform>(scheme)) {
        w.duration_based = true;
        w.by_dur = nullptr;
    } else if (std::holds_alternative<TimeRescale>(scheme)) {
        // normalise by the largest weight over the durations present so the
        // result stays within [0,1]
        const auto& f = std::get<TimeRescale>(scheme).weight;
        Rat maxw = 0;
        for (int t = 0; t < 2; ++t)
            for (const auto& n : part.trees[t]->nodes)
                for (const auto& e : n.edges) {
                    Rat v = f(e.dur);
                    if (v > maxw) maxw = v;
                }
        w.duration_based = true;
        if (maxw == 0) {
            w.by_dur = [](const Rat&) { return Rat(0); };
        } else {
            Rat scale = maxw;
            w.by_dur = [f, scale](const Rat& d) { return Rat(f(d) / scale); };
        }
    } else {
        w.duration_based = false;
        w.mu = matching_measures(part);
    }
    return w;
}

} // namespace detail

/// Leakage estimate between two execution trees.
///
/// Uniform / duration-rescaled weights follow the layered best-match sweep:
/// for every node of one tree's stratum, the smallest weighted supremum gap
/// to the nodes of the other tree's stratum; the estimate is the largest
/// such gap over all strata, taken in both directions. A node facing an
/// empty stratum contributes its full weighted mass.
///
/// Class-matched weights (the delta-prime variant) weight every entry of a
/// joint distribution by the matching measure of its target block and
/// evaluate the gap at the roots; see `matching_measures`.
inline DeltaResult delta(const TimedTree& a, const TimedTree& b, const WeightScheme& scheme = Uniform{}) {
    Partition part = refine(a, b);
    detail::Weights w = detail::resolve_weights(part, scheme);

    DeltaResult res{Rat(0), std::nullopt, Rat(0), Rat(0)};

    if (!w.duration_based) {
        int ra = part.root_block(0), rb = part.root_block(1);
        if (ra == rb) return res;
        DeltaWitness wit;
        wit.layer = std::max(part.blocks[static_cast<size_t>(ra)].height, part.blocks[static_cast<size_t>(rb)].height);
        Rat v = detail::pair_distance(part, {0, a.root}, {1, b.root}, w, &wit);
        res.value = v;
        res.dir_forward = v;
        res.dir_backward = v;
        res.witness = wit;
        return res;
    }

    for (int dir = 0; dir < 2; ++dir) {
        Rat worst = 0;
        std::optional<DeltaWitness> worst_wit;
        for (int h = 0; h <= part.strat.max_height; ++h) {
            const auto& mine = part.strat.layers[static_cast<size_t>(h)][static_cast<size_t>(dir)];
            const auto& theirs = part.strat.layers[static_cast<size_t>(h)][static_cast<size_t>(1 - dir)];
            for (int n : mine) {
                NodeKey s1{dir, n};
                Rat beta;
                DeltaWitness wit;
                wit.layer = h;
                if (theirs.empty()) {
                    beta = detail::weighted_mass(chi(part, s1), w);
                    wit.s1 = s1;
                    wit.unmatched = true;
                } else {
                    bool first = true;
                    for (int m : theirs) {
                        DeltaWitness cand_wit;
                        cand_wit.layer = h;
                        Rat v = detail::pair_distance(part, s1, {1 - dir, m}, w, &cand_wit);
                        if (first || v < beta) {
                            beta = v;
                            wit = cand_wit;
                            wit.layer = h;
                            first = false;
                        }
                        if (beta == 0) break;
                    }
                }
                if (beta > worst) {
                    worst = beta;
                    worst_wit = wit;
                }
            }
        }
        if (dir == 0)
            res.dir_forward = worst;
        else
            res.dir_backward = worst;
        if (worst > res.value) {
            res.value = worst;
            res.witness = worst_wit;
        }
    }
    return res;
}

/// The class-weighted leakage estimate.
inline DeltaResult delta_prime(const TimedTree& a, const TimedTree& b) {
    return delta(a, b, ClassMatch{});
}

/// Internal-consistency check: evaluating the weighted difference at the
/// returned witness reproduces the returned value exactly.
inline bool verify_witness(const TimedTree& a, const TimedTree& b, const WeightScheme& scheme,
                           const DeltaResult& res) {
    if (!res.witness) return res.value == 0;
    Partition part = refine(a, b);
    detail::Weights w = detail::resolve_weights(part, scheme);
    const DeltaWitness& wit = *res.witness;
    if (wit.unmatched) return detail::weighted_mass(chi(part, wit.s1), w) == res.value;
    if (wit.label_mismatch) return res.value == 1;
    if (!wit.s2) return false;
    if (!wit.entry) return res.value == 0;
    JointDist x = chi(part, wit.s1), y = chi(part, *wit.s2);
    auto get = [](const JointDist& d, const std::pair<Rat, int>& k) {
        auto it = d.find(k);
        return it == d.end() ? Rat(0) : it->second;
    };
    Rat diff = get(x, *wit.entry) - get(y, *wit.entry);
    if (diff < 0) diff = -diff;
    return Rat(w.entry_weight(wit.entry->first, wit.entry->second) * diff) == res.value;
}

inline json delta_to_json(const DeltaResult& r) {
    json out;
    out["value"] = rat_str(r.value);
    out["value_dec"] = rat_dec(r.value);
    out["forward"] = rat_str(r.dir_forward);
    out["backward"] = rat_str(r.dir_backward);
    if (r.witness) {
        json w;
        w["layer"] = r.witness->layer;
        w["s1"] = {{"tree", r.witness->s1.tree}, {"node", r.witness->s1.node}};
        if (r.witness->s2) w["s2"] = {{"tree", r.witness->s2->tree}, {"node", r.witness->s2->node}};
        if (r.witness->entry)
            w["entry"] = {{"dur", rat_str(r.witness->entry->first)}, {"block", r.witness->entry->second}};
        w["label_mismatch"] = r.witness->label_mismatch;
        w["unmatched"] = r.witness->unmatched;
        out["witness"] = std::move(w);
    } else {
        out["witness"] = nullptr;
    }
    return out;
}

struct SecureResult {
    bool secure = true;
    Rat max_delta;
    int worst_first = -1;
    int worst_second = -1;
};

/// Builds the collapsed tree for every completion of the low environment
/// with a high environment from the domain, and compares them pairwise.
/// Secure iff the largest pairwise leakage estimate is zero.
inline Result<SecureResult> pt_secure(const Program& prog, const Env& low_env,
                                      const std::vector<Env>& high_domain, const CostModel& cm,
                                      int depth_bound = 10000) {
    if (high_domain.empty())
        return Error{"UsageError", "high domain must be nonempty", {}, {}};
    std::vector<TimedTree> trees;
    trees.reserve(high_domain.size());
    auto lows = low_vars(prog);
    for (const auto& high : high_domain) {
        Env init = canonical_env(prog);
        for (const auto& [k, v] : low_env) init[k] = v;
        for (const auto& [k, v] : high) {
            if (lows.count(k))
                return Error{"UsageError", "high completion assigns low variable '" + k + "'", {}, {}};
            init[k] = v;
        }
        auto t = build_tree(prog, init, cm, depth_bound);
        if (!t) return t.error();
        trees.push_back(collapse(t.value(), lows));
    }
    SecureResult res;
    res.max_delta = 0;
    for (size_t i = 0; i < trees.size(); ++i) {
        for (size_t j = i + 1; j < trees.size(); ++j) {
            DeltaResult d = delta(trees[i], trees[j], Uniform{});
            if (d.value > res.max_delta) {
                res.max_delta = d.value;
                res.worst_first = static_cast<int>(i);
                res.worst_second = static_cast<int>(j);
            }
        }
    }
    res.secure = res.max_delta == 0;
    return res;
}

} // namespace pwhile
