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

#include "pwhile/bisim.hpp"
#include "pwhile/padding.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace pwhile {

struct SweepConfig {
    Program prog;                 // parameterised by the padding probability, or constant
    Env low_env;                  // shared low part of every initial state
    std::vector<Env> high_envs;   // the high domain
    std::vector<std::string> high_labels;
    std::vector<Rat> grid;        // strictly increasing, within [0,1]
    Rat alpha = 6;                // weight of the leakage term in the cost
    CostModel cm = CostModel::calibrated();
    int depth_bound = 10000;
    bool unordered_pairs = true;  // average leakage over unordered pairs (diagonal excluded)
};

using Matrix = std::vector<std::vector<Rat>>;

struct SweepRecord {
    Rat p;
    std::vector<Rat> runtimes; // expected runtime per high environment
    Rat t_avg;
    Matrix delta_matrix;
    Matrix dprime_matrix;
    Rat dprime_avg;
    Rat cost; // alpha * dprime_avg + t_avg
};

namespace detail {

// Mean over unordered distinct pairs by default. The matrices are
// symmetric, so the only distinct alternative is the mean over all ordered
// pairs with the zero diagonal included.
inline Rat matrix_average(const Matrix& m, bool unordered) {
    size_t n = m.size();
    if (n < 2) return Rat(0);
    Rat sum = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) sum += m[i][j];
    if (unordered) return Rat(sum / Rat(BigInt(n) * BigInt(n - 1) / 2));
    return Rat(Rat(2) * sum / Rat(BigInt(n) * BigInt(n)));
}

} // namespace detail

/// One grid point: substitute the probability, build the collapsed tree per
/// high environment, collect expected runtimes and both pairwise leakage
/// matrices. Exact arithmetic end to end.
inline Result<SweepRecord> sweep_point(const SweepConfig& cfg, const Rat& p) {
    SweepRecord rec;
    rec.p = p;
    Program inst = has_param(cfg.prog) ? substitute_param(cfg.prog, p) : cfg.prog;

    std::vector<TimedTree> trees;
    auto lows = low_vars(inst);
    for (const auto& high : cfg.high_envs) {
        Env init = canonical_env(inst);
        for (const auto& [k, v] : cfg.low_env) init[k] = v;
        for (const auto& [k, v] : high) init[k] = v;
        auto t = build_tree(inst, init, cfg.cm, cfg.depth_bound);
        if (!t) return t.error();
        trees.push_back(collapse(t.value(), lows));
    }

    Rat total_rt = 0;
    for (const auto& t : trees) {
        PathStats st = run_stats(t);
        rec.runtimes.push_back(st.expected_time);
        total_rt += st.expected_time;
    }
    rec.t_avg = trees.empty() ? Rat(0) : Rat(total_rt / Rat(BigInt(trees.size())));

    size_t n = trees.size();
    rec.delta_matrix.assign(n, std::vector<Rat>(n, Rat(0)));
    rec.dprime_matrix.assign(n, std::vector<Rat>(n, Rat(0)));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            Rat d = delta(trees[i], trees[j], Uniform{}).value;
            Rat dp = delta_prime(trees[i], trees[j]).value;
            rec.delta_matrix[i][j] = rec.delta_matrix[j][i] = d;
            rec.dprime_matrix[i][j] = rec.dprime_matrix[j][i] = dp;
        }
    }
    rec.dprime_avg = detail::matrix_average(rec.dprime_matrix, cfg.unordered_pairs);
    rec.cost = Rat(cfg.alpha * rec.dprime_avg + rec.t_avg);
    return rec;
}

inline Result<std::vector<SweepRecord>> sweep(const SweepConfig& cfg) {
    if (cfg.grid.empty()) return Error{"UsageError", "sweep grid is empty", {}, {}};
    for (size_t i = 0; i < cfg.grid.size(); ++i) {
        if (cfg.grid[i] < 0 || cfg.grid[i] > 1)
            return Error{"UsageError", "grid value out of range: " + rat_str(cfg.grid[i]), {}, {}};
        if (i > 0 && cfg.grid[i] <= cfg.grid[i - 1])
            return Error{"UsageError", "grid must be strictly increasing", {}, {}};
    }
    if (cfg.high_envs.empty()) return Error{"UsageError", "high domain is empty", {}, {}};
    std::vector<SweepRecord> out;
    for (const auto& p : cfg.grid) {
        auto rec = sweep_point(cfg, p);
        if (!rec) return rec.error();
        out.push_back(std::move(rec).value());
    }
    return out;
}

struct CostOptimum {
    Rat argmin_p;
    Rat min_cost;
    // (p, t_avg, dprime_avg, cost) rows
    std::vector<std::array<Rat, 4>> table;
};

/// Grid argmin of the cost, ties broken toward smaller p.
inline Result<CostOptimum> cost_curve(const std::vector<SweepRecord>& records) {
    if (records.empty()) return Error{"UsageError", "no sweep records", {}, {}};
    CostOptimum out;
    out.argmin_p = records[0].p;
    out.min_cost = records[0].cost;
    for (const auto& r : records) {
        out.table.push_back({r.p, r.t_avg, r.dprime_avg, r.cost});
        if (r.cost < out.min_cost) {
            out.min_cost = r.cost;
            out.argmin_p = r.p;
        }
    }
    return out;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    bool needs = s.find_first_of(",\"\n") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace detail

/// Square matrix with key labels as header row and column.
inline std::string matrix_csv(const Matrix& m, const std::vector<std::string>& labels) {
    std::ostringstream os;
    os << "key";
    for (const auto& l : labels) os << "," << detail::csv_escape(l);
    os << "\n";
    for (size_t i = 0; i < m.size(); ++i) {
        os << detail::csv_escape(labels[i]);
        for (size_t j = 0; j < m[i].size(); ++j) os << "," << rat_str(m[i][j]);
        os << "\n";
    }
    return os.str();
}

inline std::string matrix_csv_dec(const Matrix& m, const std::vector<std::string>& labels,
                                  unsigned digits = 6) {
    std::ostringstream os;
    os << "key";
    for (const auto& l : labels) os << "," << detail::csv_escape(l);
    os << "\n";
    for (size_t i = 0; i < m.size(); ++i) {
        os << detail::csv_escape(labels[i]);
        for (size_t j = 0; j < m[i].size(); ++j) os << "," << rat_dec(m[i][j], digits);
        os << "\n";
    }
    return os.str();
}

/// The pairwise class-weighted leakage matrix at one grid point.
inline std::string delta_matrix_report(const SweepRecord& rec, const std::vector<std::string>& labels,
                                       bool dprime = true) {
    return matrix_csv(dprime ? rec.dprime_matrix : rec.delta_matrix, labels);
}

/// `p,t_avg,dprime_avg,cost` summary, exact and decimal columns side by side.
inline std::string summary_csv(const std::vector<SweepRecord>& records) {
    std::ostringstream os;
    os << "p,p_dec,t_avg,t_avg_dec,dprime_avg,dprime_avg_dec,cost,cost_dec\n";
    for (const auto& r : records) {
        os << rat_str(r.p) << "," << rat_dec(r.p) << "," << rat_str(r.t_avg) << "," << rat_dec(r.t_avg)
           << "," << rat_str(r.dprime_avg) << "," << rat_dec(r.dprime_avg) << "," << rat_str(r.cost)
           << "," << rat_dec(r.cost) << "\n";
    }
    return os.str();
}

/// Long form `p,key,expected_runtime`.
inline std::string long_csv(const std::vector<SweepRecord>& records,
                            const std::vector<std::string>& labels) {
    std::ostringstream os;
    os << "p,p_dec,key,expected_runtime,expected_runtime_dec\n";
    for (const auto& r : records)
        for (size_t k = 0; k < r.runtimes.size(); ++k)
            os << rat_str(r.p) << "," << rat_dec(r.p) << "," << detail::csv_escape(labels[k]) << ","
               << rat_str(r.runtimes[k]) << "," << rat_dec(r.runtimes[k]) << "\n";
    return os.str();
}

/// All bit vectors of the given length as array environments, labelled by
/// their bit strings in index order.
inline void enumerate_bit_keys(const std::string& array_name, long long len, std::vector<Env>& envs,
                               std::vector<std::string>& labels, BaseType base = BaseType::Int) {
    long long count = 1LL << len;
    for (long long bits = 0; bits < count; ++bits) {
        std::vector<Value> xs;
        std::string label;
        for (long long i = 0; i < len; ++i) {
            long long bit = (bits >> (len - 1 - i)) & 1;
            xs.push_back(base == BaseType::Bool ? Value(bit == 1) : Value(bit));
            label += static_cast<char>('0' + bit);
        }
        Env e;
        e[array_name] = xs;
        envs.push_back(std::move(e));
        labels.push_back(std::move(label));
    }
}

} // namespace pwhile
