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

#include "pwhile/sectype.hpp"

#include <set>
#include <string>
#include <vector>

namespace pwhile {

/// Variables a command may write.
inline std::set<std::string> global_effect(const CommandPtr& c) {
    std::set<std::string> out;
    std::visit(overloaded{[&](const Command::Assign& a) { out.insert(a.var); },
                          [&](const Command::SkipAsn&) {},
                          [&](const Command::Skip&) {},
                          [&](const Command::If& i) {
                              auto t = global_effect(i.thn);
                              out.insert(t.begin(), t.end());
                              auto e = global_effect(i.els);
                              out.insert(e.begin(), e.end());
                          },
                          [&](const Command::SkipIf& s) { out = global_effect(s.body); },
                          [&](const Command::While& w) { out = global_effect(w.body); },
                          [&](const Command::Seq& s) {
                              out = global_effect(s.first);
                              auto b = global_effect(s.second);
                              out.insert(b.begin(), b.end());
                          },
                          [&](const Command::Choose& ch) {
                              out = global_effect(ch.left);
                              auto r = global_effect(ch.right);
                              out.insert(r.begin(), r.end());
                          }},
               c->node);
    return out;
}

struct PadOutput {
    CommandPtr transformed;
    CommandPtr low_slice;
    std::vector<SourcePos> applied_sites;
};

struct PadOptions {
    // The published program attaches the choice weight p to the padded
    // alternative and q = 1-p to the original code; switching this off puts
    // p on the original instead.
    bool p_is_pad_prob = true;
};

namespace detail {

struct Padder {
    const TypeEnv& gamma;
    const PadOptions& opt;
    std::vector<SourcePos> sites;

    struct Out {
        CommandPtr d;
        CommandPtr dl;
    };

    Result<Out> run(const CommandPtr& c) {
        using R = Result<Out>;
        return std::visit(
            overloaded{
                [&](const Command::Assign& a) -> R {
                    auto it = gamma.find(a.var);
                    if (it == gamma.end())
                        return Error{"TypeError", "undeclared variable '" + a.var + "'", c->pos, {}};
                    auto et = type_expr(gamma, a.expr);
                    if (!et) return et.error();
                    if (et.value().base != it->second.base)
                        return Error{"TypeError", "assignment base-type mismatch on '" + a.var + "'", c->pos, {}};
                    if (it->second.level == SecurityLevel::H)
                        return Out{c, mk_skipasn(a.var, a.expr, c->pos)};
                    if (et.value().level == SecurityLevel::H)
                        return Error{"TypeError",
                                     "high expression assigned to low variable '" + a.var + "'",
                                     c->pos,
                                     {}};
                    return Out{c, c};
                },
                [&](const Command::SkipAsn&) -> R { return Out{c, c}; },
                [&](const Command::Skip&) -> R { return Out{c, c}; },
                [&](const Command::Seq& s) -> R {
                    auto a = run(s.first);
                    if (!a) return a.error();
                    auto b = run(s.second);
                    if (!b) return b.error();
                    return Out{mk_seq(a.value().d, b.value().d, c->pos),
                               mk_seq(a.value().dl, b.value().dl, c->pos)};
                },
                [&](const Command::If& i) -> R {
                    auto gt = type_expr(gamma, i.guard);
                    if (!gt) return gt.error();
                    if (gt.value().base != BaseType::Bool)
                        return Error{"TypeError", "if guard must be boolean", c->pos, {}};
                    auto a = run(i.thn);
                    if (!a) return a.error();
                    auto b = run(i.els);
                    if (!b) return b.error();
                    const auto& [d1, d1l] = a.value();
                    const auto& [d2, d2l] = b.value();
                    if (gt.value().level == SecurityLevel::L)
                        return Out{mk_if(i.guard, d1, d2, c->pos), mk_if(i.guard, d1l, d2l, c->pos)};
                    if (!global_effect(d1l).empty() || !global_effect(d2l).empty())
                        return Error{"PadError",
                                     "NonEmptyLowSliceEffect: a low slice writes a variable at a padded "
                                     "conditional",
                                     c->pos,
                                     {}};
                    // already timing-balanced branches are left alone
                    if (command_eq(d1, d2))
                        return Out{mk_if(i.guard, d1, d2, c->pos), mk_skipif(i.guard, d1l, c->pos)};
                    sites.push_back(c->pos);
                    CommandPtr padded_then = mk_seq(d1, d2l, c->pos);
                    CommandPtr padded_else = mk_seq(d1l, d2, c->pos);
                    CommandPtr thn, els;
                    if (opt.p_is_pad_prob) {
                        thn = mk_choose(Prob::param(), padded_then, d1, c->pos);
                        els = mk_choose(Prob::param(), padded_else, d2, c->pos);
                    } else {
                        thn = mk_choose(Prob::param(), d1, padded_then, c->pos);
                        els = mk_choose(Prob::param(), d2, padded_else, c->pos);
                    }
                    return Out{mk_if(i.guard, thn, els, c->pos),
                               mk_skipif(i.guard, mk_seq(d1l, d2l, c->pos), c->pos)};
                },
                [&](const Command::SkipIf& s) -> R {
                    auto body = run(s.body);
                    if (!body) return body.error();
                    return Out{mk_skipif(s.guard, body.value().d, c->pos),
                               mk_skipif(s.guard, body.value().dl, c->pos)};
                },
                [&](const Command::While& w) -> R {
                    auto gt = type_expr(gamma, w.guard);
                    if (!gt) return gt.error();
                    if (gt.value().base != BaseType::Bool)
                        return Error{"TypeError", "while guard must be boolean", c->pos, {}};
                    if (gt.value().level == SecurityLevel::H)
                        return Error{"TypeError", "while guards must be low", c->pos, {}};
                    auto body = run(w.body);
                    if (!body) return body.error();
                    return Out{mk_while(w.guard, body.value().d, c->pos),
                               mk_while(w.guard, body.value().dl, c->pos)};
                },
                [&](const Command::Choose& ch) -> R {
                    auto a = run(ch.left);
                    if (!a) return a.error();
                    auto b = run(ch.right);
                    if (!b) return b.error();
                    return Out{mk_choose(ch.prob, a.value().d, b.value().d, c->pos),
                               mk_choose(ch.prob, a.value().dl, b.value().dl, c->pos)};
                }},
            c->node);
    }
};

} // namespace detail

/// Probabilistic padding with the choice weight left symbolic: every
/// unbalanced high conditional turns each branch into a choice between the
/// cross-padded sequence and the untransformed code.
inline Result<PadOutput> pad_symbolic(const TypeEnv& gamma, const CommandPtr& c, PadOptions opt = {}) {
    detail::Padder padder{gamma, opt, {}};
    auto out = padder.run(c);
    if (!out) return out.error();
    return PadOutput{out.value().d, out.value().dl, std::move(padder.sites)};
}

/// Padding at a fixed probability.
inline Result<PadOutput> pad(const TypeEnv& gamma, const CommandPtr& c, const Rat& p, PadOptions opt = {}) {
    if (p < 0 || p > 1) return Error{"PadError", "padding probability out of range: " + rat_str(p), {}, {}};
    auto out = pad_symbolic(gamma, c, opt);
    if (!out) return out.error();
    PadOutput fixed = out.value();
    fixed.transformed = substitute_param(fixed.transformed, p);
    fixed.low_slice = substitute_param(fixed.low_slice, p);
    return fixed;
}

inline Result<Program> pad_program_symbolic(const Program& prog, PadOptions opt = {},
                                            std::vector<SourcePos>* sites = nullptr) {
    auto out = pad_symbolic(type_env_of(prog), prog.body, opt);
    if (!out) return out.error();
    if (sites) *sites = out.value().applied_sites;
    Program padded = prog;
    padded.body = out.value().transformed;
    return padded;
}

} // namespace pwhile
