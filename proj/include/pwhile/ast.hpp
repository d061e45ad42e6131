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

#include "pwhile/rational.hpp"

#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace pwhile {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct SourcePos {
    int line = 0;
    int col = 0;
};

enum class SecurityLevel { L, H };

inline bool level_leq(SecurityLevel a, SecurityLevel b) {
    return a == SecurityLevel::L || b == SecurityLevel::H;
}
inline SecurityLevel level_join(SecurityLevel a, SecurityLevel b) {
    return (a == SecurityLevel::H || b == SecurityLevel::H) ? SecurityLevel::H : SecurityLevel::L;
}

enum class BaseType { Int, Bool };

enum class BinaryOp { Add, Mul, Sub, Eq, Ne, Lt, Le };

inline const char* op_text(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Eq: return "==";
        case BinaryOp::Ne: return "!=";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
    }
    return "?";
}

inline bool op_is_arithmetic(BinaryOp op) {
    return op == BinaryOp::Add || op == BinaryOp::Mul || op == BinaryOp::Sub;
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    struct IntLit { long long value; };
    struct BoolLit { bool value; };
    struct Var { std::string name; };
    struct ArrayRead { std::string name; ExprPtr index; };
    struct BinOp { BinaryOp op; ExprPtr lhs, rhs; };

    std::variant<IntLit, BoolLit, Var, ArrayRead, BinOp> node;
    SourcePos pos;
};

inline ExprPtr mk_int(long long v, SourcePos p = {}) { return std::make_shared<Expr>(Expr{Expr::IntLit{v}, p}); }
inline ExprPtr mk_bool(bool v, SourcePos p = {}) { return std::make_shared<Expr>(Expr{Expr::BoolLit{v}, p}); }
inline ExprPtr mk_var(std::string n, SourcePos p = {}) { return std::make_shared<Expr>(Expr{Expr::Var{std::move(n)}, p}); }
inline ExprPtr mk_read(std::string n, ExprPtr i, SourcePos p = {}) {
    return std::make_shared<Expr>(Expr{Expr::ArrayRead{std::move(n), std::move(i)}, p});
}
inline ExprPtr mk_bin(BinaryOp op, ExprPtr l, ExprPtr r, SourcePos p = {}) {
    return std::make_shared<Expr>(Expr{Expr::BinOp{op, std::move(l), std::move(r)}, p});
}

// A choice weight is either an exact rational literal or the distinguished
// padding parameter `p` (rendered with complement `q`), substituted before
// execution.
struct Prob {
    bool is_param = false;
    Rat value;

    static Prob param() { return Prob{true, Rat(0)}; }
    static Prob lit(Rat v) { return Prob{false, std::move(v)}; }
};

inline bool operator==(const Prob& a, const Prob& b) {
    return a.is_param == b.is_param && (a.is_param || a.value == b.value);
}

struct Command;
using CommandPtr = std::shared_ptr<const Command>;

struct Command {
    struct Assign { std::string var; ExprPtr expr; };
    struct SkipAsn { std::string var; ExprPtr expr; };
    struct Skip {};
    struct If { ExprPtr guard; CommandPtr thn, els; };
    struct SkipIf { ExprPtr guard; CommandPtr body; };
    struct While { ExprPtr guard; CommandPtr body; };
    struct Seq { CommandPtr first, second; };
    struct Choose { Prob prob; CommandPtr left, right; };

    std::variant<Assign, SkipAsn, Skip, If, SkipIf, While, Seq, Choose> node;
    SourcePos pos;
};

inline CommandPtr mk_assign(std::string x, ExprPtr e, SourcePos p = {}) {
    return std::make_shared<Command>(Command{Command::Assign{std::move(x), std::move(e)}, p});
}
inline CommandPtr mk_skipasn(std::string x, ExprPtr e, SourcePos p = {}) {
    return std::make_shared<Command>(Command{Command::SkipAsn{std::move(x), std::move(e)}, p});
}
inline CommandPtr mk_skip(SourcePos p = {}) { return std::make_shared<Command>(Command{Command::Skip{}, p}); }
inline CommandPtr mk_if(ExprPtr g, CommandPtr t, CommandPtr e, SourcePos p = {}) {
    return std::make_shared<Command>(Command{Command::If{std::move(g), std::move(t), std::move(e)}, p});
}
inline CommandPtr mk_skipif(ExprPtr g, CommandPtr b, SourcePos p = {}) {
    return std::make_shared<Command>(Command{Command::SkipIf{std::move(g), std::move(b)}, p});
}
inline CommandPtr mk_while(ExprPtr g, CommandPtr b, SourcePos p = {}) {
    return std::make_shared<Command>(Command{Command::While{std::move(g), std::move(b)}, p});
}
inline CommandPtr mk_seq(CommandPtr a, CommandPtr b, SourcePos p = {}) {
    return std::make_shared<Command>(Command{Command::Seq{std::move(a), std::move(b)}, p});
}
inline CommandPtr mk_choose(Prob pr, CommandPtr l, CommandPtr r, SourcePos p = {}) {
    return std::make_shared<Command>(Command{Command::Choose{std::move(pr), std::move(l), std::move(r)}, p});
}

struct Decl {
    std::string name;
    SecurityLevel level = SecurityLevel::L;
    BaseType base = BaseType::Int;
    std::optional<long long> array_len;
    SourcePos pos;
};

struct Program {
    std::vector<Decl> decls;
    CommandPtr body;

    const Decl* find_decl(const std::string& name) const {
        for (const auto& d : decls)
            if (d.name == name) return &d;
        return nullptr;
    }
};

inline bool expr_eq(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Expr::IntLit& x) { return x.value == std::get<Expr::IntLit>(b->node).value; },
            [&](const Expr::BoolLit& x) { return x.value == std::get<Expr::BoolLit>(b->node).value; },
            [&](const Expr::Var& x) { return x.name == std::get<Expr::Var>(b->node).name; },
            [&](const Expr::ArrayRead& x) {
                const auto& y = std::get<Expr::ArrayRead>(b->node);
                return x.name == y.name && expr_eq(x.index, y.index);
            },
            [&](const Expr::BinOp& x) {
                const auto& y = std::get<Expr::BinOp>(b->node);
                return x.op == y.op && expr_eq(x.lhs, y.lhs) && expr_eq(x.rhs, y.rhs);
            }},
        a->node);
}

inline bool command_eq(const CommandPtr& a, const CommandPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->node.index() != b->node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Command::Assign& x) {
                const auto& y = std::get<Command::Assign>(b->node);
                return x.var == y.var && expr_eq(x.expr, y.expr);
            },
            [&](const Command::SkipAsn& x) {
                const auto& y = std::get<Command::SkipAsn>(b->node);
                return x.var == y.var && expr_eq(x.expr, y.expr);
            },
            [&](const Command::Skip&) { return true; },
            [&](const Command::If& x) {
                const auto& y = std::get<Command::If>(b->node);
                return expr_eq(x.guard, y.guard) && command_eq(x.thn, y.thn) && command_eq(x.els, y.els);
            },
            [&](const Command::SkipIf& x) {
                const auto& y = std::get<Command::SkipIf>(b->node);
                return expr_eq(x.guard, y.guard) && command_eq(x.body, y.body);
            },
            [&](const Command::While& x) {
                const auto& y = std::get<Command::While>(b->node);
                return expr_eq(x.guard, y.guard) && command_eq(x.body, y.body);
            },
            [&](const Command::Seq& x) {
                const auto& y = std::get<Command::Seq>(b->node);
                return command_eq(x.first, y.first) && command_eq(x.second, y.second);
            },
            [&](const Command::Choose& x) {
                const auto& y = std::get<Command::Choose>(b->node);
                return x.prob == y.prob && command_eq(x.left, y.left) && command_eq(x.right, y.right);
            }},
        a->node);
}

inline void collect_vars(const ExprPtr& e, std::set<std::string>& out) {
    std::visit(overloaded{[&](const Expr::IntLit&) {}, [&](const Expr::BoolLit&) {},
                          [&](const Expr::Var& v) { out.insert(v.name); },
                          [&](const Expr::ArrayRead& r) {
                              out.insert(r.name);
                              collect_vars(r.index, out);
                          },
                          [&](const Expr::BinOp& b) {
                              collect_vars(b.lhs, out);
                              collect_vars(b.rhs, out);
                          }},
               e->node);
}

inline void collect_vars(const CommandPtr& c, std::set<std::string>& out) {
    std::visit(overloaded{[&](const Command::Assign& a) {
                              out.insert(a.var);
                              collect_vars(a.expr, out);
                          },
                          [&](const Command::SkipAsn& a) {
                              out.insert(a.var);
                              collect_vars(a.expr, out);
                          },
                          [&](const Command::Skip&) {},
                          [&](const Command::If& i) {
                              collect_vars(i.guard, out);
                              collect_vars(i.thn, out);
                              collect_vars(i.els, out);
                          },
                          [&](const Command::SkipIf& s) {
                              collect_vars(s.guard, out);
                              collect_vars(s.body, out);
                          },
                          [&](const Command::While& w) {
                              collect_vars(w.guard, out);
                              collect_vars(w.body, out);
                          },
                          [&](const Command::Seq& s) {
                              collect_vars(s.first, out);
                              collect_vars(s.second, out);
                          },
                          [&](const Command::Choose& ch) {
                              collect_vars(ch.left, out);
                              collect_vars(ch.right, out);
                          }},
               c->node);
}

/// Identifiers occurring in the term, array names included.
inline std::set<std::string> free_vars(const ExprPtr& e) {
    std::set<std::string> out;
    collect_vars(e, out);
    return out;
}
inline std::set<std::string> free_vars(const CommandPtr& c) {
    std::set<std::string> out;
    collect_vars(c, out);
    return out;
}

inline bool has_param(const CommandPtr& c) {
    return std::visit(
        overloaded{[](const Command::Assign&) { return false; }, [](const Command::SkipAsn&) { return false; },
                   [](const Command::Skip&) { return false; },
                   [](const Command::If& i) { return has_param(i.thn) || has_param(i.els); },
                   [](const Command::SkipIf& s) { return has_param(s.body); },
                   [](const Command::While& w) { return has_param(w.body); },
                   [](const Command::Seq& s) { return has_param(s.first) || has_param(s.second); },
                   [](const Command::Choose& ch) {
                       return ch.prob.is_param || has_param(ch.left) || has_param(ch.right);
                   }},
        c->node);
}

/// Replaces the padding parameter by a concrete probability.
inline CommandPtr substitute_param(const CommandPtr& c, const Rat& p) {
    return std::visit(
        overloaded{[&](const Command::Assign&) { return c; }, [&](const Command::SkipAsn&) { return c; },
                   [&](const Command::Skip&) { return c; },
                   [&](const Command::If& i) -> CommandPtr {
                       auto t = substitute_param(i.thn, p), e = substitute_param(i.els, p);
                       if (t == i.thn && e == i.els) return c;
                       return mk_if(i.guard, t, e, c->pos);
                   },
                   [&](const Command::SkipIf& s) -> CommandPtr {
                       auto b = substitute_param(s.body, p);
                       return b == s.body ? c : mk_skipif(s.guard, b, c->pos);
                   },
                   [&](const Command::While& w) -> CommandPtr {
                       auto b = substitute_param(w.body, p);
                       return b == w.body ? c : mk_while(w.guard, b, c->pos);
                   },
                   [&](const Command::Seq& s) -> CommandPtr {
                       auto f = substitute_param(s.first, p), g = substitute_param(s.second, p);
                       if (f == s.first && g == s.second) return c;
                       return mk_seq(f, g, c->pos);
                   },
                   [&](const Command::Choose& ch) -> CommandPtr {
                       auto l = substitute_param(ch.left, p), r = substitute_param(ch.right, p);
                       Prob pr = ch.prob.is_param ? Prob::lit(p) : ch.prob;
                       if (!ch.prob.is_param && l == ch.left && r == ch.right) return c;
                       return mk_choose(pr, l, r, c->pos);
                   }},
        c->node);
}

inline Program substitute_param(const Program& prog, const Rat& p) {
    Program out = prog;
    out.body = substitute_param(prog.body, p);
    return out;
}

inline bool has_param(const Program& prog) { return has_param(prog.body); }

/// Re-associates sequencing to the right, the parser's normal form.
inline CommandPtr normalize_seq(const CommandPtr& c) {
    return std::visit(
        overloaded{[&](const Command::Assign&) { return c; }, [&](const Command::SkipAsn&) { return c; },
                   [&](const Command::Skip&) { return c; },
                   [&](const Command::If& i) -> CommandPtr {
                       return mk_if(i.guard, normalize_seq(i.thn), normalize_seq(i.els), c->pos);
                   },
                   [&](const Command::SkipIf& s) -> CommandPtr {
                       return mk_skipif(s.guard, normalize_seq(s.body), c->pos);
                   },
                   [&](const Command::While& w) -> CommandPtr {
                       return mk_while(w.guard, normalize_seq(w.body), c->pos);
                   },
                   [&](const Command::Seq& s) -> CommandPtr {
                       CommandPtr first = normalize_seq(s.first);
                       CommandPtr second = normalize_seq(s.second);
                       if (const auto* inner = std::get_if<Command::Seq>(&first->node))
                           return normalize_seq(
                               mk_seq(inner->first, mk_seq(inner->second, second, c->pos), c->pos));
                       return mk_seq(first, second, c->pos);
                   },
                   [&](const Command::Choose& ch) -> CommandPtr {
                       return mk_choose(ch.prob, normalize_seq(ch.left), normalize_seq(ch.right), c->pos);
                   }},
        c->node);
}

} // namespace pwhile
