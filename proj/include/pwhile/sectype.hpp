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
#include "pwhile/semantics.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pwhile {

struct SecurityType {
    BaseType base;
    SecurityLevel level;
};

/// Bases never convert; only the level may rise.
inline bool subtype(const SecurityType& a, const SecurityType& b) {
    return a.base == b.base && level_leq(a.level, b.level);
}

struct VarType {
    BaseType base;
    SecurityLevel level;
    std::optional<long long> array_len;
};

using TypeEnv = std::map<std::string, VarType>;

inline TypeEnv type_env_of(const Program& prog) {
    TypeEnv gamma;
    for (const auto& d : prog.decls) gamma[d.name] = VarType{d.base, d.level, d.array_len};
    return gamma;
}

/// Least security type of an expression: the level of a compound expression
/// is the join of its parts; an array read joins the array's level with the
/// index's level.
inline Result<SecurityType> type_expr(const TypeEnv& gamma, const ExprPtr& e) {
    using R = Result<SecurityType>;
    return std::visit(
        overloaded{
            [&](const Expr::IntLit&) -> R { return SecurityType{BaseType::Int, SecurityLevel::L}; },
            [&](const Expr::BoolLit&) -> R { return SecurityType{BaseType::Bool, SecurityLevel::L}; },
            [&](const Expr::Var& v) -> R {
                auto it = gamma.find(v.name);
                if (it == gamma.end())
                    return Error{"TypeError", "undeclared variable '" + v.name + "'", e->pos, {}};
                if (it->second.array_len)
                    return Error{"TypeError", "array '" + v.name + "' used without an index", e->pos, {}};
                return SecurityType{it->second.base, it->second.level};
            },
            [&](const Expr::ArrayRead& r) -> R {
                auto it = gamma.find(r.name);
                if (it == gamma.end())
                    return Error{"TypeError", "undeclared array '" + r.name + "'", e->pos, {}};
                if (!it->second.array_len)
                    return Error{"TypeError", "'" + r.name + "' is not an array", e->pos, {}};
                auto idx = type_expr(gamma, r.index);
                if (!idx) return idx.error();
                if (idx.value().base != BaseType::Int)
                    return Error{"TypeError", "array index must be an integer", e->pos, {}};
                return SecurityType{it->second.base, level_join(it->second.level, idx.value().level)};
            },
            [&](const Expr::BinOp& b) -> R {
                auto lt = type_expr(gamma, b.lhs);
                if (!lt) return lt.error();
                auto rt = type_expr(gamma, b.rhs);
                if (!rt) return rt.error();
                SecurityLevel lvl = level_join(lt.value().level, rt.value().level);
                if (op_is_arithmetic(b.op) || b.op == BinaryOp::Lt || b.op == BinaryOp::Le) {
                    if (lt.value().base != BaseType::Int || rt.value().base != BaseType::Int)
                        return Error{"TypeError",
                                     std::string("operator '") + op_text(b.op) + "' needs integer operands",
                                     e->pos,
                                     {}};
                    return SecurityType{op_is_arithmetic(b.op) ? BaseType::Int : BaseType::Bool, lvl};
                }
                if (lt.value().base != rt.value().base)
                    return Error{"TypeError", "comparing values of different base types", e->pos, {}};
                return SecurityType{BaseType::Bool, lvl};
            }},
        e->node);
}

struct TypeFailure {
    SourcePos pos;
    std::string rule; // typing rule in force at the failure site
    std::string kind; // BaseTypeMismatch, LowAssignFromHigh, HighGuardOnWhile,
                      // BranchesNotBisimilar, DepthExceeded
    std::string reason;
    std::optional<Rat> delta_value;
};

struct TypeReport {
    bool ok = false;
    CommandPtr low_slice; // set iff ok
    std::vector<TypeFailure> failures;
};

inline json type_report_to_json(const TypeReport& r) {
    json out;
    out["ok"] = r.ok;
    json fs = json::array();
    for (const auto& f : r.failures) {
        json j;
        j["line"] = f.pos.line;
        j["col"] = f.pos.col;
        j["rule"] = f.rule;
        j["kind"] = f.kind;
        j["reason"] = f.reason;
        if (f.delta_value) j["delta"] = rat_str(*f.delta_value);
        fs.push_back(std::move(j));
    }
    out["failures"] = std::move(fs);
    if (r.ok && r.low_slice) out["low_slice"] = render_command(r.low_slice);
    return out;
}

struct CheckOptions {
    CostModel cm = CostModel::calibrated();
    int depth_bound = 10000;
};

namespace detail {

struct Checker {
    const TypeEnv& gamma;
    const Env& shared_env; // environment the branch-bisimilarity check runs from
    const std::set<std::string>& lows;
    const CheckOptions& opt;
    std::vector<TypeFailure>& failures;

    void fail(SourcePos pos, std::string rule, std::string kind, std::string reason,
              std::optional<Rat> dv = std::nullopt) {
        failures.push_back({pos, std::move(rule), std::move(kind), std::move(reason), std::move(dv)});
    }

    std::optional<SecurityType> expr_type(const ExprPtr& e, const char* rule) {
        auto t = type_expr(gamma, e);
        if (!t) {
            fail(t.error().pos, rule, "BaseTypeMismatch", t.error().message);
            return std::nullopt;
        }
        return t.value();
    }

    // The side condition of the high-conditional rule: the branches' low
    // slices must be PT-bisimilar. Checked structurally first, then on the
    // collapsed execution trees built from the shared environment.
    bool slices_bisimilar(const CommandPtr& a, const CommandPtr& b, SourcePos pos) {
        if (command_eq(a, b)) return true;
        auto ta = build_tree(Config{shared_env, a}, opt.cm, opt.depth_bound);
        auto tb = build_tree(Config{shared_env, b}, opt.cm, opt.depth_bound);
        if (!ta || !tb) {
            const Error& e = !ta ? ta.error() : tb.error();
            fail(pos, "If_H", e.kind, e.message);
            return false;
        }
        TimedTree ca = collapse(ta.value(), lows), cb = collapse(tb.value(), lows);
        DeltaResult d = delta(ca, cb, Uniform{});
        if (d.value != 0) {
            fail(pos, "If_H", "BranchesNotBisimilar", "branch low slices are distinguishable", d.value);
            return false;
        }
        return true;
    }

    CommandPtr check(const CommandPtr& c) {
        return std::visit(
            overloaded{
                [&](const Command::Assign& a) -> CommandPtr {
                    auto it = gamma.find(a.var);
                    if (it == gamma.end()) {
                        fail(c->pos, "Assign", "BaseTypeMismatch", "undeclared variable '" + a.var + "'");
                        return mk_skip(c->pos);
                    }
                    auto et = expr_type(a.expr, "Assign");
                    if (!et) return mk_skip(c->pos);
                    if (et->base != it->second.base) {
                        fail(c->pos, "Assign", "BaseTypeMismatch",
                             "assigning a value of the wrong base type to '" + a.var + "'");
                        return mk_skip(c->pos);
                    }
                    if (it->second.level == SecurityLevel::H) return mk_skipasn(a.var, a.expr, c->pos);
                    if (et->level == SecurityLevel::H) {
                        fail(c->pos, "Assign_L", "LowAssignFromHigh",
                             "high expression assigned to low variable '" + a.var + "'");
                        return mk_skip(c->pos);
                    }
                    return c;
                },
                [&](const Command::SkipAsn& a) -> CommandPtr {
                    auto it = gamma.find(a.var);
                    if (it == gamma.end())
                        fail(c->pos, "SkipAsn", "BaseTypeMismatch", "undeclared variable '" + a.var + "'");
                    auto et = expr_type(a.expr, "SkipAsn");
                    if (et && it != gamma.end() && et->base != it->second.base)
                        fail(c->pos, "SkipAsn", "BaseTypeMismatch", "skipAsn expression has the wrong base type");
                    return c;
                },
                [&](const Command::Skip&) -> CommandPtr { return c; },
                [&](const Command::If& i) -> CommandPtr {
                    auto gt = expr_type(i.guard, "If");
                    size_t before = failures.size();
                    CommandPtr tl = check(i.thn), el = check(i.els);
                    bool branch_failed = failures.size() != before;
                    if (!gt) return mk_skip(c->pos);
                    if (gt->base != BaseType::Bool) {
                        fail(c->pos, "If", "BaseTypeMismatch", "if guard must be boolean");
                        return mk_skip(c->pos);
                    }
                    if (gt->level == SecurityLevel::L) return mk_if(i.guard, tl, el, c->pos);
                    // the side condition needs intact slices
                    if (branch_failed) return mk_skip(c->pos);
                    if (!slices_bisimilar(tl, el, c->pos)) return mk_skip(c->pos);
                    return mk_skipif(i.guard, tl, c->pos);
                },
                [&](const Command::SkipIf& s) -> CommandPtr {
                    auto gt = expr_type(s.guard, "SkipIf");
                    CommandPtr bl = check(s.body);
                    if (gt && gt->base != BaseType::Bool)
                        fail(c->pos, "SkipIf", "BaseTypeMismatch", "skipIf guard must be boolean");
                    return mk_skipif(s.guard, bl, c->pos);
                },
                [&](const Command::While& w) -> CommandPtr {
                    auto gt = expr_type(w.guard, "While");
                    CommandPtr bl = check(w.body);
                    if (!gt) return mk_skip(c->pos);
                    if (gt->base != BaseType::Bool) {
                        fail(c->pos, "While", "BaseTypeMismatch", "while guard must be boolean");
                        return mk_skip(c->pos);
                    }
                    if (gt->level == SecurityLevel::H) {
                        fail(c->pos, "While", "HighGuardOnWhile", "while guards must be low");
                        return mk_skip(c->pos);
                    }
                    return mk_while(w.guard, bl, c->pos);
                },
                [&](const Command::Seq& s) -> CommandPtr {
                    CommandPtr a = check(s.first), b = check(s.second);
                    return mk_seq(a, b, c->pos);
                },
                [&](const Command::Choose& ch) -> CommandPtr {
                    CommandPtr a = check(ch.left), b = check(ch.right);
                    return mk_choose(ch.prob, a, b, c->pos);
                }},
            c->node);
    }

};

} // namespace detail

/// Checks a command against the security typing rules, producing the low
/// slice on success. Failures are collected, not thrown; the checker keeps
/// going past the first one.
inline TypeReport check_command(const TypeEnv& gamma, const CommandPtr& c, const Env& shared_env,
                                const std::set<std::string>& lows, const CheckOptions& opt = {}) {
    TypeReport report;
    detail::Checker checker{gamma, shared_env, lows, opt, report.failures};
    CommandPtr slice = checker.check(c);
    report.ok = report.failures.empty();
    if (report.ok) report.low_slice = slice;
    return report;
}

inline TypeReport check_program(const Program& prog, const CheckOptions& opt = {}) {
    TypeEnv gamma = type_env_of(prog);
    Env env = canonical_env(prog);
    return check_command(gamma, prog.body, env, low_vars(prog), opt);
}

/// Base-type validation only (levels ignored); run before execution.
inline std::optional<Error> base_check(const Program& prog) {
    TypeEnv gamma;
    // with every level lowered the rules reduce to their base-type premises
    for (const auto& d : prog.decls) gamma[d.name] = VarType{d.base, SecurityLevel::L, d.array_len};
    TypeReport r = check_command(gamma, prog.body, canonical_env(prog), low_vars(prog));
    for (const auto& f : r.failures)
        if (f.kind == "BaseTypeMismatch")
            return Error{"TypeError", f.reason, f.pos, {}};
    return std::nullopt;
}

} // namespace pwhile
