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

#include "pwhile/ast.hpp"

#include <sstream>

namespace pwhile {

struct PrintOptions {
    // Rewrites `skipAsn x e` to `x := e` on output, for export to the plain
    // self-assignment style. Changes timing by t_x; off by default.
    bool materialize_skip_asn = false;
};

namespace detail {

inline int op_prec(BinaryOp op) {
    switch (op) {
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le: return 1;
        case BinaryOp::Add:
        case BinaryOp::Sub: return 2;
        case BinaryOp::Mul: return 3;
    }
    return 0;
}

inline void render_expr_prec(std::ostream& os, const ExprPtr& e, int parent_prec) {
    std::visit(overloaded{[&](const Expr::IntLit& l) { os << l.value; },
                          [&](const Expr::BoolLit& l) { os << (l.value ? "true" : "false"); },
                          [&](const Expr::Var& v) { os << v.name; },
                          [&](const Expr::ArrayRead& r) {
                              os << r.name << "[";
                              render_expr_prec(os, r.index, 0);
                              os << "]";
                          },
                          [&](const Expr::BinOp& b) {
                              int prec = op_prec(b.op);
                              bool parens = prec <= parent_prec;
                              if (parens) os << "(";
                              // comparisons are non-associative; arithmetic is left-associated
                              render_expr_prec(os, b.lhs, prec - 1);
                              os << " " << op_text(b.op) << " ";
                              render_expr_prec(os, b.rhs, prec);
                              if (parens) os << ")";
                          }},
               e->node);
}

inline std::string prob_text(const Prob& p) { return p.is_param ? "p" : rat_str(p.value); }

inline void render_cmd(std::ostream& os, const CommandPtr& c, int indent, const PrintOptions& opt);

inline void indent_to(std::ostream& os, int indent) {
    for (int i = 0; i < indent; ++i) os << "  ";
}

inline void render_cmd(std::ostream& os, const CommandPtr& c, int indent, const PrintOptions& opt) {
    std::visit(
        overloaded{
            [&](const Command::Assign& a) {
                indent_to(os, indent);
                os << a.var << " := ";
                render_expr_prec(os, a.expr, 0);
            },
            [&](const Command::SkipAsn& a) {
                indent_to(os, indent);
                if (opt.materialize_skip_asn) {
                    os << a.var << " := ";
                } else {
                    os << "skipAsn " << a.var << " ";
                }
                render_expr_prec(os, a.expr, opt.materialize_skip_asn ? 0 : 4);
            },
            [&](const Command::Skip&) {
                indent_to(os, indent);
                os << "skip";
            },
            [&](const Command::If& i) {
                indent_to(os, indent);
                os << "if ";
                render_expr_prec(os, i.guard, 0);
                os << " then\n";
                render_cmd(os, i.thn, indent + 1, opt);
                os << "\n";
                indent_to(os, indent);
                os << "else\n";
                render_cmd(os, i.els, indent + 1, opt);
                os << "\n";
                indent_to(os, indent);
                os << "fi";
            },
            [&](const Command::SkipIf& s) {
                indent_to(os, indent);
                os << "skipIf ";
                render_expr_prec(os, s.guard, 4);
                os << " ";
                bool group = std::holds_alternative<Command::Seq>(s.body->node);
                if (group) os << "(";
                {
                    std::ostringstream inner;
                    render_cmd(inner, s.body, 0, opt);
                    // body inline; sequences flattened onto one line
                    std::string text = inner.str();
                    for (size_t k = 0; k < text.size(); ++k) {
                        if (text[k] == '\n') {
                            os << ' ';
                            while (k + 1 < text.size() && text[k + 1] == ' ') ++k;
                        } else {
                            os << text[k];
                        }
                    }
                }
                if (group) os << ")";
            },
            [&](const Command::While& w) {
                indent_to(os, indent);
                os << "while ";
                render_expr_prec(os, w.guard, 0);
                os << " do\n";
                render_cmd(os, w.body, indent + 1, opt);
                os << "\n";
                indent_to(os, indent);
                os << "od";
            },
            [&](const Command::Seq& s) {
                render_cmd(os, s.first, indent, opt);
                os << ";\n";
                render_cmd(os, s.second, indent, opt);
            },
            [&](const Command::Choose& ch) {
                indent_to(os, indent);
                os << "choose " << prob_text(ch.prob) << ": ";
                std::ostringstream l, r;
                render_cmd(l, ch.left, 0, opt);
                render_cmd(r, ch.right, 0, opt);
                auto inline_text = [](const std::string& text) {
                    std::string out;
                    for (size_t k = 0; k < text.size(); ++k) {
                        if (text[k] == '\n') {
                            out += ' ';
                            while (k + 1 < text.size() && text[k + 1] == ' ') ++k;
                        } else {
                            out += text[k];
                        }
                    }
                    return out;
                };
                os << inline_text(l.str());
                if (ch.prob.is_param)
                    os << " or q: ";
                else
                    os << " or ";
                os << inline_text(r.str());
                os << " ro";
            }},
        c->node);
}

} // namespace detail

inline std::string render_expr(const ExprPtr& e) {
    std::ostringstream os;
    detail::render_expr_prec(os, e, 0);
    return os.str();
}

inline std::string render_command(const CommandPtr& c, const PrintOptions& opt = {}) {
    std::ostringstream os;
    detail::render_cmd(os, c, 0, opt);
    return os.str();
}

inline std::string render_program(const Program& prog, const PrintOptions& opt = {}) {
    std::ostringstream os;
    for (const auto& d : prog.decls) {
        os << d.name << " " << (d.level == SecurityLevel::L ? "low" : "high") << " "
           << (d.base == BaseType::Int ? "int" : "bool");
        if (d.array_len) os << " array " << *d.array_len;
        os << ";\n";
    }
    if (!prog.decls.empty()) os << "\n";
    detail::render_cmd(os, prog.body, 0, opt);
    os << "\n";
    return os.str();
}

/// AST-level rewrite of skipAsn into a self-timing assignment; used by the
/// printer option and by structural comparisons against the published form.
inline CommandPtr materialize_skip_asn(const CommandPtr& c) {
    return std::visit(
        overloaded{[&](const Command::Assign&) { return c; },
                   [&](const Command::SkipAsn& a) -> CommandPtr { return mk_assign(a.var, a.expr, c->pos); },
                   [&](const Command::Skip&) { return c; },
                   [&](const Command::If& i) -> CommandPtr {
                       return mk_if(i.guard, materialize_skip_asn(i.thn), materialize_skip_asn(i.els), c->pos);
                   },
                   [&](const Command::SkipIf& s) -> CommandPtr {
                       return mk_skipif(s.guard, materialize_skip_asn(s.body), c->pos);
                   },
                   [&](const Command::While& w) -> CommandPtr {
                       return mk_while(w.guard, materialize_skip_asn(w.body), c->pos);
                   },
                   [&](const Command::Seq& s) -> CommandPtr {
                       return mk_seq(materialize_skip_asn(s.first), materialize_skip_asn(s.second), c->pos);
                   },
                   [&](const Command::Choose& ch) -> CommandPtr {
                       return mk_choose(ch.prob, materialize_skip_asn(ch.left), materialize_skip_asn(ch.right),
                                        c->pos);
                   }},
        c->node);
}

} // namespace pwhile
