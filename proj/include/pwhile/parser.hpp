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

#include <cctype>
#include <string>
#include <variant>
#include <vector>

namespace pwhile {

struct Error {
    std::string kind; // ParseError, DeclError, EvalError, DepthExceeded, TypeError, PadError, UsageError
    std::string message;
    SourcePos pos;
    std::vector<std::string> expected;

    std::string str() const {
        std::string s = kind;
        if (pos.line > 0) s += " at " + std::to_string(pos.line) + ":" + std::to_string(pos.col);
        s += ": " + message;
        if (!expected.empty()) {
            s += " (expected ";
            for (size_t i = 0; i < expected.size(); ++i) s += (i ? ", " : "") + expected[i];
            s += ")";
        }
        return s;
    }
};

template <class T>
class Result {
  public:
    Result(T v) : v_(std::move(v)) {}
    Result(Error e) : v_(std::move(e)) {}
    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }
    const T& value() const& { return std::get<T>(v_); }
    T&& value() && { return std::get<T>(std::move(v_)); }
    const Error& error() const { return std::get<Error>(v_); }

  private:
    std::variant<T, Error> v_;
};

namespace detail {

enum class Tok {
    Ident,
    Number, // digit sequence, possibly with a fractional part (probabilities only)
    Assign, // :=
    Colon,
    Semi,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,      // == or =
    Ne,      // !=
    Lt,
    Le,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    SourcePos pos;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Result<std::vector<Token>> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws();
            SourcePos p{line_, col_};
            if (i_ >= src_.size()) {
                out.push_back({Tok::End, "", p});
                return out;
            }
            char c = src_[i_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                size_t start = i_;
                while (i_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
                    advance();
                out.push_back({Tok::Ident, std::string(src_.substr(start, i_ - start)), p});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                size_t start = i_;
                while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
                if (i_ + 1 < src_.size() && src_[i_] == '.' &&
                    std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
                    advance();
                    while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) advance();
                }
                out.push_back({Tok::Number, std::string(src_.substr(start, i_ - start)), p});
                continue;
            }
            switch (c) {
                case ':':
                    advance();
                    if (i_ < src_.size() && src_[i_] == '=') {
                        advance();
                        out.push_back({Tok::Assign, ":=", p});
                    } else {
                        out.push_back({Tok::Colon, ":", p});
                    }
                    continue;
                case ';': advance(); out.push_back({Tok::Semi, ";", p}); continue;
                case '(': advance(); out.push_back({Tok::LParen, "(", p}); continue;
                case ')': advance(); out.push_back({Tok::RParen, ")", p}); continue;
                case '[': advance(); out.push_back({Tok::LBracket, "[", p}); continue;
                case ']': advance(); out.push_back({Tok::RBracket, "]", p}); continue;
                case '+': advance(); out.push_back({Tok::Plus, "+", p}); continue;
                case '-': advance(); out.push_back({Tok::Minus, "-", p}); continue;
                case '*': advance(); out.push_back({Tok::Star, "*", p}); continue;
                case '=':
                    advance();
                    if (i_ < src_.size() && src_[i_] == '=') advance();
                    out.push_back({Tok::Eq, "==", p});
                    continue;
                case '!':
                    advance();
                    if (i_ < src_.size() && src_[i_] == '=') {
                        advance();
                        out.push_back({Tok::Ne, "!=", p});
                        continue;
                    }
                    return Error{"ParseError", "stray '!'", p, {"!="}};
                case '<':
                    advance();
                    if (i_ < src_.size() && src_[i_] == '=') {
                        advance();
                        out.push_back({Tok::Le, "<=", p});
                    } else {
                        out.push_back({Tok::Lt, "<", p});
                    }
                    continue;
                case '/':
                    if (i_ + 1 < src_.size() && src_[i_ + 1] == '/') {
                        while (i_ < src_.size() && src_[i_] != '\n') advance();
                        continue;
                    }
                    advance();
                    out.push_back({Tok::Slash, "/", p});
                    continue;
                default:
                    return Error{"ParseError", std::string("unexpected character '") + c + "'", p, {}};
            }
        }
    }

  private:
    void skip_ws() {
        while (i_ < src_.size() &&
               (src_[i_] == ' ' || src_[i_] == '\t' || src_[i_] == '\r' || src_[i_] == '\n'))
            advance();
    }
    void advance() {
        if (src_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    std::string_view src_;
    size_t i_ = 0;
    int line_ = 1, col_ = 1;
};

inline bool is_keyword(const std::string& s) {
    static const char* kws[] = {"if",   "then", "else",    "fi",     "while", "do",  "od",   "choose",
                                "or",   "ro",   "skip",    "skipAsn", "skipIf", "low", "high", "int",
                                "bool", "array", "true",   "false"};
    for (auto k : kws)
        if (s == k) return true;
    return false;
}

class Parser {
  public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Result<Program> parse() {
        Program prog;
        // declarations: IDENT (low|high) ...
        while (at(Tok::Ident) && !is_keyword(cur().text) && peek_is_level()) {
            auto d = parse_decl();
            if (!d) return d.error();
            prog.decls.push_back(d.value());
        }
        auto body = parse_seq({"$end"});
        if (!body) return body.error();
        if (!at(Tok::End)) return err("trailing input after program body", {"end of input"});
        prog.body = body.value();
        if (auto e = validate(prog)) return *e;
        return prog;
    }

  private:
    const Token& cur() const { return toks_[pos_]; }
    const Token& next() const { return toks_[std::min(pos_ + 1, toks_.size() - 1)]; }
    bool at(Tok k) const { return cur().kind == k; }
    bool at_kw(const char* kw) const { return cur().kind == Tok::Ident && cur().text == kw; }
    void bump() {
        if (pos_ + 1 < toks_.size()) ++pos_;
    }

    bool peek_is_level() const {
        return next().kind == Tok::Ident && (next().text == "low" || next().text == "high");
    }

    Error err(std::string msg, std::vector<std::string> expected = {}) const {
        return Error{"ParseError", std::move(msg), cur().pos, std::move(expected)};
    }

    Result<Decl> parse_decl() {
        Decl d;
        d.pos = cur().pos;
        d.name = cur().text;
        bump();
        d.level = cur().text == "low" ? SecurityLevel::L : SecurityLevel::H;
        bump();
        if (at_kw("int"))
            d.base = BaseType::Int;
        else if (at_kw("bool"))
            d.base = BaseType::Bool;
        else
            return err("declaration needs a base type", {"int", "bool"});
        bump();
        if (at_kw("array")) {
            bump();
            if (!at(Tok::Number) || cur().text.find('.') != std::string::npos)
                return err("array length must be an integer", {"integer"});
            long long len = std::stoll(cur().text);
            if (len <= 0) return err("array length must be positive", {});
            d.array_len = len;
            bump();
        }
        if (!at(Tok::Semi)) return err("declaration must end with ';'", {";"});
        bump();
        return d;
    }

    bool seq_stop(const std::vector<std::string>& stops) const {
        if (at(Tok::End) || at(Tok::RParen)) return true;
        if (cur().kind != Tok::Ident) return false;
        for (const auto& s : stops)
            if (cur().text == s) return true;
        return false;
    }

    Result<CommandPtr> parse_seq(const std::vector<std::string>& stops) {
        std::vector<CommandPtr> parts;
        auto first = parse_atom(stops);
        if (!first) return first.error();
        parts.push_back(first.value());
        while (at(Tok::Semi)) {
            bump();
            if (seq_stop(stops)) break; // trailing separator
            auto nxt = parse_atom(stops);
            if (!nxt) return nxt.error();
            parts.push_back(nxt.value());
        }
        // right-associated normal form
        CommandPtr out = parts.back();
        for (size_t i = parts.size() - 1; i-- > 0;) out = mk_seq(parts[i], out, parts[i]->pos);
        return out;
    }

    Result<CommandPtr> parse_atom(const std::vector<std::string>& stops) {
        SourcePos p = cur().pos;
        if (at_kw("skip")) {
            bump();
            return mk_skip(p);
        }
        if (at_kw("skipAsn")) {
            bump();
            if (!at(Tok::Ident) || is_keyword(cur().text)) return err("skipAsn needs a variable", {"identifier"});
            std::string x = cur().text;
            bump();
            auto e = parse_expr();
            if (!e) return e.error();
            return mk_skipasn(x, e.value(), p);
        }
        if (at_kw("skipIf")) {
            bump();
            auto g = parse_expr();
            if (!g) return g.error();
            auto body = parse_atom(stops);
            if (!body) return body.error();
            return mk_skipif(g.value(), body.value(), p);
        }
        if (at_kw("if")) {
            bump();
            auto g = parse_expr();
            if (!g) return g.error();
            if (!at_kw("then")) return err("if guard must be followed by 'then'", {"then"});
            bump();
            auto thn = parse_seq({"else"});
            if (!thn) return thn.error();
            if (!at_kw("else")) return err("if needs an 'else' branch", {"else"});
            bump();
            auto els = parse_seq({"fi"});
            if (!els) return els.error();
            if (!at_kw("fi")) return err("if must be closed with 'fi'", {"fi"});
            bump();
            return mk_if(g.value(), thn.value(), els.value(), p);
        }
        if (at_kw("while")) {
            bump();
            auto g = parse_expr();
            if (!g) return g.error();
            if (!at_kw("do")) return err("while guard must be followed by 'do'", {"do"});
            bump();
            auto body = parse_seq({"od"});
            if (!body) return body.error();
            if (!at_kw("od")) return err("while must be closed with 'od'", {"od"});
            bump();
            return mk_while(g.value(), body.value(), p);
        }
        if (at_kw("choose")) {
            bump();
            auto pr = parse_prob();
            if (!pr) return pr.error();
            if (!at(Tok::Colon)) return err("choice weight must be followed by ':'", {":"});
            bump();
            auto left = parse_seq({"or"});
            if (!left) return left.error();
            if (!at_kw("or")) return err("choose needs 'or'", {"or"});
            bump();
            // optional second weight, checked for complementarity
            if ((at(Tok::Number) && next().kind == Tok::Colon) ||
                (at(Tok::Number) && next().kind == Tok::Slash) ||
                (at(Tok::Ident) && cur().text == "q" && next().kind == Tok::Colon)) {
                SourcePos qp = cur().pos;
                if (at(Tok::Ident)) {
                    if (!pr.value().is_param)
                        return Error{"ParseError", "'q' weight requires a 'p' first weight", qp, {}};
                    bump();
                } else {
                    auto q = parse_prob();
                    if (!q) return q.error();
                    if (q.value().is_param)
                        return Error{"ParseError", "second weight cannot be the parameter", qp, {}};
                    if (pr.value().is_param)
                        return Error{"ParseError", "second weight of a parameterised choice must be 'q'", qp, {}};
                    if (pr.value().value + q.value().value != Rat(1))
                        return Error{"ParseError", "choice weights must sum to 1", qp, {}};
                }
                if (!at(Tok::Colon)) return err("second choice weight must be followed by ':'", {":"});
                bump();
            }
            auto right = parse_seq({"ro"});
            if (!right) return right.error();
            if (!at_kw("ro")) return err("choose must be closed with 'ro'", {"ro"});
            bump();
            return mk_choose(pr.value(), left.value(), right.value(), p);
        }
        if (at(Tok::LParen)) {
            bump();
            auto inner = parse_seq({});
            if (!inner) return inner.error();
            if (!at(Tok::RParen)) return err("unclosed command group", {")"});
            bump();
            return inner.value();
        }
        if (at(Tok::Ident) && !is_keyword(cur().text)) {
            std::string x = cur().text;
            bump();
            if (!at(Tok::Assign)) return err("expected ':=' after variable", {":="});
            bump();
            auto e = parse_expr();
            if (!e) return e.error();
            return mk_assign(x, e.value(), p);
        }
        return err("expected a command",
                   {"skip", "skipAsn", "skipIf", "if", "while", "choose", "identifier", "("});
    }

    Result<Prob> parse_prob() {
        SourcePos p = cur().pos;
        if (at(Tok::Ident) && cur().text == "p") {
            bump();
            return Prob::param();
        }
        if (!at(Tok::Number)) return err("expected a probability", {"rational", "p"});
        std::string text = cur().text;
        bump();
        if (at(Tok::Slash)) {
            bump();
            if (!at(Tok::Number) || cur().text.find('.') != std::string::npos)
                return err("expected a denominator", {"integer"});
            text += "/" + cur().text;
            bump();
        }
        auto r = parse_rat(text);
        if (!r) return Error{"ParseError", "malformed probability '" + text + "'", p, {}};
        if (*r < 0 || *r > 1)
            return Error{"ParseError", "probability out of range: " + rat_str(*r), p, {}};
        return Prob::lit(*r);
    }

    Result<ExprPtr> parse_expr() {
        auto lhs = parse_additive();
        if (!lhs) return lhs;
        auto cmp_op = [&]() -> std::optional<BinaryOp> {
            switch (cur().kind) {
                case Tok::Eq: return BinaryOp::Eq;
                case Tok::Ne: return BinaryOp::Ne;
                case Tok::Lt: return BinaryOp::Lt;
                case Tok::Le: return BinaryOp::Le;
                default: return std::nullopt;
            }
        };
        if (auto op = cmp_op()) {
            SourcePos p = cur().pos;
            bump();
            auto rhs = parse_additive();
            if (!rhs) return rhs;
            if (cmp_op()) return err("comparisons cannot be chained", {});
            return mk_bin(*op, lhs.value(), rhs.value(), p);
        }
        return lhs;
    }

    Result<ExprPtr> parse_additive() {
        auto lhs = parse_multiplicative();
        if (!lhs) return lhs;
        ExprPtr acc = lhs.value();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinaryOp op = at(Tok::Plus) ? BinaryOp::Add : BinaryOp::Sub;
            SourcePos p = cur().pos;
            bump();
            auto rhs = parse_multiplicative();
            if (!rhs) return rhs;
            acc = mk_bin(op, acc, rhs.value(), p);
        }
        return acc;
    }

    Result<ExprPtr> parse_multiplicative() {
        auto lhs = parse_primary();
        if (!lhs) return lhs;
        ExprPtr acc = lhs.value();
        while (at(Tok::Star)) {
            SourcePos p = cur().pos;
            bump();
            auto rhs = parse_primary();
            if (!rhs) return rhs;
            acc = mk_bin(BinaryOp::Mul, acc, rhs.value(), p);
        }
        return acc;
    }

    Result<ExprPtr> parse_primary() {
        SourcePos p = cur().pos;
        if (at(Tok::Number)) {
            if (cur().text.find('.') != std::string::npos)
                return err("expressions take integer literals only", {"integer"});
            long long v = std::stoll(cur().text);
            bump();
            return mk_int(v, p);
        }
        if (at_kw("true")) {
            bump();
            return mk_bool(true, p);
        }
        if (at_kw("false")) {
            bump();
            return mk_bool(false, p);
        }
        if (at(Tok::Ident) && !is_keyword(cur().text)) {
            std::string name = cur().text;
            bump();
            if (at(Tok::LBracket)) {
                bump();
                auto idx = parse_expr();
                if (!idx) return idx;
                if (!at(Tok::RBracket)) return err("unclosed array index", {"]"});
                bump();
                return mk_read(name, idx.value(), p);
            }
            return mk_var(name, p);
        }
        if (at(Tok::LParen)) {
            bump();
            auto e = parse_expr();
            if (!e) return e;
            if (!at(Tok::RParen)) return err("unclosed parenthesis", {")"});
            bump();
            return e.value();
        }
        return err("expected an expression", {"integer", "true", "false", "identifier", "("});
    }

    std::optional<Error> validate(const Program& prog) {
        std::set<std::string> seen;
        for (const auto& d : prog.decls) {
            if (!seen.insert(d.name).second)
                return Error{"DeclError", "duplicate declaration of '" + d.name + "'", d.pos, {}};
        }
        std::optional<Error> bad;
        check_decls(prog, prog.body, bad);
        return bad;
    }

    void check_expr_decls(const Program& prog, const ExprPtr& e, std::optional<Error>& bad) {
        if (bad) return;
        std::visit(overloaded{[&](const Expr::IntLit&) {}, [&](const Expr::BoolLit&) {},
                              [&](const Expr::Var& v) {
                                  const Decl* d = prog.find_decl(v.name);
                                  if (!d)
                                      bad = Error{"DeclError", "undeclared variable '" + v.name + "'", e->pos, {}};
                                  else if (d->array_len)
                                      bad = Error{"DeclError", "array '" + v.name + "' used without an index",
                                                  e->pos, {}};
                              },
                              [&](const Expr::ArrayRead& r) {
                                  const Decl* d = prog.find_decl(r.name);
                                  if (!d)
                                      bad = Error{"DeclError", "undeclared array '" + r.name + "'", e->pos, {}};
                                  else if (!d->array_len)
                                      bad = Error{"DeclError", "'" + r.name + "' is not an array", e->pos, {}};
                                  if (!bad) check_expr_decls(prog, r.index, bad);
                              },
                              [&](const Expr::BinOp& b) {
                                  check_expr_decls(prog, b.lhs, bad);
                                  check_expr_decls(prog, b.rhs, bad);
                              }},
                   e->node);
    }

    void check_decls(const Program& prog, const CommandPtr& c, std::optional<Error>& bad) {
        if (bad) return;
        auto check_target = [&](const std::string& x, SourcePos p) {
            const Decl* d = prog.find_decl(x);
            if (!d)
                bad = Error{"DeclError", "undeclared variable '" + x + "'", p, {}};
            else if (d->array_len)
                bad = Error{"DeclError", "arrays are read-only; cannot assign '" + x + "'", p, {}};
        };
        std::visit(overloaded{[&](const Command::Assign& a) {
                                  check_target(a.var, c->pos);
                                  if (!bad) check_expr_decls(prog, a.expr, bad);
                              },
                              [&](const Command::SkipAsn& a) {
                                  check_target(a.var, c->pos);
                                  if (!bad) check_expr_decls(prog, a.expr, bad);
                              },
                              [&](const Command::Skip&) {},
                              [&](const Command::If& i) {
                                  check_expr_decls(prog, i.guard, bad);
                                  check_decls(prog, i.thn, bad);
                                  check_decls(prog, i.els, bad);
                              },
                              [&](const Command::SkipIf& s) {
                                  check_expr_decls(prog, s.guard, bad);
                                  check_decls(prog, s.body, bad);
                              },
                              [&](const Command::While& w) {
                                  check_expr_decls(prog, w.guard, bad);
                                  check_decls(prog, w.body, bad);
                              },
                              [&](const Command::Seq& s) {
                                  check_decls(prog, s.first, bad);
                                  check_decls(prog, s.second, bad);
                              },
                              [&](const Command::Choose& ch) {
                                  check_decls(prog, ch.left, bad);
                                  check_decls(prog, ch.right, bad);
                              }},
                   c->node);
    }

    std::vector<Token> toks_;
    size_t pos_ = 0;
};

} // namespace detail

inline Result<Program> parse_program(std::string_view text) {
    detail::Lexer lex(text);
    auto toks = lex.run();
    if (!toks) return toks.error();
    detail::Parser parser(std::move(toks).value());
    return parser.parse();
}

} // namespace pwhile
