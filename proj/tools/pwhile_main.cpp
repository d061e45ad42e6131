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

#include "pwhile/pwhile.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace pwhile;

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1; // analysis found a problem (type failure, leakage)
constexpr int kExitUsage = 2;    // usage, I/O, parse or evaluation errors

struct CostFlags {
    std::string profile = "paper-trees";
    std::string t_e, t_x, t_asn, t_br, t_ch, t_skip;

    void attach(CLI::App* cmd) {
        cmd->add_option("--profile", profile, "cost profile: paper-trees (default) or paper-text");
        cmd->add_option("--t-e", t_e, "expression evaluation time");
        cmd->add_option("--t-x", t_x, "variable store time");
        cmd->add_option("--t-asn", t_asn, "assignment time");
        cmd->add_option("--t-br", t_br, "branch time");
        cmd->add_option("--t-ch", t_ch, "choice time");
        cmd->add_option("--t-skip", t_skip, "skip time");
    }

    Result<CostModel> resolve() const {
        CostModel cm;
        if (profile == "paper-trees")
            cm = CostModel::calibrated();
        else if (profile == "paper-text")
            cm = CostModel::paper_text();
        else
            return Error{"UsageError", "unknown cost profile '" + profile + "'", {}, {}};
        auto apply = [](const std::string& text, Rat& slot) -> std::optional<Error> {
            if (text.empty()) return std::nullopt;
            auto r = parse_rat(text);
            if (!r || *r < 0) return Error{"UsageError", "bad duration '" + text + "'", {}, {}};
            slot = *r;
            return std::nullopt;
        };
        for (auto [txt, slot] : {std::pair<const std::string*, Rat*>{&t_e, &cm.t_e},
                                 {&t_x, &cm.t_x},
                                 {&t_asn, &cm.t_asn},
                                 {&t_br, &cm.t_br},
                                 {&t_ch, &cm.t_ch},
                                 {&t_skip, &cm.t_skip}}) {
            if (auto err = apply(*txt, *slot)) return *err;
        }
        return cm;
    }
};

int report_error(const Error& e) {
    std::cerr << "error: " << e.str() << "\n";
    return kExitUsage;
}

// Base-type validation is skipped for `check`, which reports such failures
// through its own verdict rather than as usage errors.
Result<Program> load_program(const std::string& path, bool run_base_check = true) {
    std::ifstream in(path);
    if (!in) return Error{"UsageError", "cannot open '" + path + "'", {}, {}};
    std::stringstream ss;
    ss << in.rdbuf();
    auto prog = parse_program(ss.str());
    if (!prog) return prog.error();
    if (run_base_check)
        if (auto err = base_check(prog.value())) return *err;
    return prog;
}

Result<Value> parse_scalar(const Decl& d, const std::string& text) {
    if (d.base == BaseType::Bool) {
        if (text == "true") return Value(true);
        if (text == "false") return Value(false);
        return Error{"UsageError", "'" + d.name + "' takes true or false", {}, {}};
    }
    try {
        return Value(static_cast<long long>(std::stoll(text)));
    } catch (...) {
        return Error{"UsageError", "'" + d.name + "' takes an integer", {}, {}};
    }
}

Result<std::vector<Value>> parse_array(const Decl& d, const std::string& text) {
    std::vector<Value> xs;
    if (text.find(',') != std::string::npos) {
        std::stringstream ss(text);
        std::string part;
        while (std::getline(ss, part, ',')) {
            auto v = parse_scalar(Decl{d.name, d.level, d.base, std::nullopt, {}}, part);
            if (!v) return v.error();
            xs.push_back(v.value());
        }
    } else {
        // bit-string shorthand
        for (char c : text) {
            if (c != '0' && c != '1')
                return Error{"UsageError", "array '" + d.name + "' takes a bit string or a comma list", {}, {}};
            if (d.base == BaseType::Bool)
                xs.push_back(Value(c == '1'));
            else
                xs.push_back(Value(static_cast<long long>(c - '0')));
        }
    }
    if (xs.size() != static_cast<size_t>(*d.array_len))
        return Error{"UsageError",
                     "array '" + d.name + "' has length " + std::to_string(*d.array_len), {}, {}};
    return xs;
}

std::optional<Error> apply_sets(const Program& prog, const std::vector<std::string>& sets, Env& env) {
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) return Error{"UsageError", "--set needs name=value", {}, {}};
        std::string name = s.substr(0, eq), value = s.substr(eq + 1);
        const Decl* d = prog.find_decl(name);
        if (!d) return Error{"UsageError", "unknown variable '" + name + "'", {}, {}};
        if (d->array_len) {
            auto xs = parse_array(*d, value);
            if (!xs) return xs.error();
            env[name] = xs.value();
        } else {
            auto v = parse_scalar(*d, value);
            if (!v) return v.error();
            env[name] = v.value();
        }
    }
    return std::nullopt;
}

// The single declared high array, required by the --k shorthands.
Result<const Decl*> sole_high_array(const Program& prog) {
    const Decl* found = nullptr;
    for (const auto& d : prog.decls) {
        if (d.level == SecurityLevel::H && d.array_len) {
            if (found) return Error{"UsageError", "several high arrays; use --set", {}, {}};
            found = &d;
        }
    }
    if (!found) return Error{"UsageError", "no high array declared; use --set", {}, {}};
    return found;
}

Result<Program> substitute_if_needed(const Program& prog, const std::string& p_text) {
    if (!has_param(prog)) {
        if (!p_text.empty())
            return Error{"UsageError", "program has no padding parameter; --p does not apply", {}, {}};
        return prog;
    }
    if (p_text.empty())
        return Error{"UsageError", "program is parameterised; give --p", {}, {}};
    auto p = parse_rat(p_text);
    if (!p || *p < 0 || *p > 1)
        return Error{"UsageError", "bad probability '" + p_text + "'", {}, {}};
    return substitute_param(prog, *p);
}

Rat logtime_weight(const Rat& t) {
    double x = static_cast<double>(numerator(t)) / static_cast<double>(denominator(t));
    if (x <= 1.0) return Rat(0);
    long long scaled = std::llround(std::log(x) * 1048576.0);
    if (scaled < 0) scaled = 0;
    return Rat(BigInt(scaled), BigInt(1048576));
}

int cmd_check(const std::string& path, const std::string& format, const CostFlags& cost) {
    auto prog = load_program(path, /*run_base_check=*/false);
    if (!prog) return report_error(prog.error());
    auto cm = cost.resolve();
    if (!cm) return report_error(cm.error());
    CheckOptions opt;
    opt.cm = cm.value();
    TypeReport rep = check_program(prog.value(), opt);
    if (format == "json") {
        std::cout << type_report_to_json(rep).dump(2) << "\n";
    } else {
        if (rep.ok) {
            std::cout << "typeable\n";
            std::cout << "low slice:\n" << render_command(rep.low_slice) << "\n";
        } else {
            for (const auto& f : rep.failures) {
                std::cout << "failure at " << f.pos.line << ":" << f.pos.col << " [" << f.rule << "] "
                          << f.kind << ": " << f.reason;
                if (f.delta_value) std::cout << " (delta = " << rat_str(*f.delta_value) << ")";
                std::cout << "\n";
            }
        }
    }
    return rep.ok ? kExitOk : kExitNegative;
}

int cmd_tree(const std::string& path, const std::vector<std::string>& sets, const std::string& k_bits,
             const std::string& p_text, bool collapse_tree, const std::string& format, int depth,
             const CostFlags& cost) {
    auto prog0 = load_program(path);
    if (!prog0) return report_error(prog0.error());
    auto prog = substitute_if_needed(prog0.value(), p_text);
    if (!prog) return report_error(prog.error());
    auto cm = cost.resolve();
    if (!cm) return report_error(cm.error());

    Env init = canonical_env(prog.value());
    if (!k_bits.empty()) {
        auto arr = sole_high_array(prog.value());
        if (!arr) return report_error(arr.error());
        auto xs = parse_array(*arr.value(), k_bits);
        if (!xs) return xs.error().kind.empty() ? kExitUsage : report_error(xs.error());
        init[arr.value()->name] = xs.value();
    }
    if (auto err = apply_sets(prog.value(), sets, init)) return report_error(*err);

    auto tree = build_tree(prog.value(), init, cm.value(), depth);
    if (!tree) return report_error(tree.error());
    TimedTree out = collapse_tree ? collapse(tree.value(), low_vars(prog.value())) : tree.value();

    if (format == "dot") {
        std::cout << tree_to_dot(out);
    } else if (format == "json") {
        std::cout << tree_to_json(out).dump(2) << "\n";
    } else {
        PathStats st = run_stats(out);
        std::cout << "nodes " << out.nodes.size() << ", paths " << st.paths.size() << "\n";
        for (size_t i = 0; i < out.nodes.size(); ++i)
            for (const auto& e : out.nodes[i].edges)
                std::cout << "  " << i << " -> " << e.child << "  " << rat_str(e.prob) << " : "
                          << rat_str(e.dur) << "\n";
        std::cout << "expected runtime " << rat_str(st.expected_time) << " ("
                  << rat_dec(st.expected_time) << ")\n";
    }
    return kExitOk;
}

int cmd_delta(const std::string& path, const std::string& k1, const std::string& k2,
              const std::vector<std::string>& sets, const std::string& p_text,
              const std::string& weights, const std::string& format, int depth, const CostFlags& cost) {
    auto prog0 = load_program(path);
    if (!prog0) return report_error(prog0.error());
    auto prog = substitute_if_needed(prog0.value(), p_text);
    if (!prog) return report_error(prog.error());
    auto cm = cost.resolve();
    if (!cm) return report_error(cm.error());

    auto arr = sole_high_array(prog.value());
    if (!arr) return report_error(arr.error());
    Env base = canonical_env(prog.value());
    if (auto err = apply_sets(prog.value(), sets, base)) return report_error(*err);

    auto mk_init = [&](const std::string& bits) -> Result<Env> {
        auto xs = parse_array(*arr.value(), bits);
        if (!xs) return xs.error();
        Env e = base;
        e[arr.value()->name] = xs.value();
        return e;
    };
    auto e1 = mk_init(k1);
    if (!e1) return report_error(e1.error());
    auto e2 = mk_init(k2);
    if (!e2) return report_error(e2.error());

    auto lows = low_vars(prog.value());
    auto t1 = build_tree(prog.value(), e1.value(), cm.value(), depth);
    if (!t1) return report_error(t1.error());
    auto t2 = build_tree(prog.value(), e2.value(), cm.value(), depth);
    if (!t2) return report_error(t2.error());
    TimedTree c1 = collapse(t1.value(), lows), c2 = collapse(t2.value(), lows);

    WeightScheme scheme = Uniform{};
    if (weights == "classmatch")
        scheme = ClassMatch{};
    else if (weights == "logtime")
        scheme = TimeRescale{logtime_weight};
    else if (weights != "uniform")
        return report_error(Error{"UsageError", "unknown weight scheme '" + weights + "'", {}, {}});

    DeltaResult d = delta(c1, c2, scheme);
    if (format == "json") {
        std::cout << delta_to_json(d).dump(2) << "\n";
    } else {
        std::cout << rat_str(d.value) << " (" << rat_dec(d.value) << ")\n";
    }
    return d.value == 0 ? kExitOk : kExitNegative;
}

int cmd_pad(const std::string& path, const std::string& p_text, const std::string& out_path,
            const std::string& report_path, bool table_three, bool materialize) {
    auto prog = load_program(path);
    if (!prog) return report_error(prog.error());
    PadOptions opt;
    opt.p_is_pad_prob = !table_three;
    std::vector<SourcePos> sites;
    auto padded = pad_program_symbolic(prog.value(), opt, &sites);
    if (!padded) {
        // a refused transformation is a negative verdict, not a usage error
        std::cerr << "error: " << padded.error().str() << "\n";
        return kExitNegative;
    }
    Program out = padded.value();
    if (p_text != "p" && !p_text.empty()) {
        auto p = parse_rat(p_text);
        if (!p || *p < 0 || *p > 1)
            return report_error(Error{"UsageError", "bad probability '" + p_text + "'", {}, {}});
        out = substitute_param(out, *p);
    }
    PrintOptions popt;
    popt.materialize_skip_asn = materialize;
    std::string text = render_program(out, popt);
    if (out_path == "-" || out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out_path);
        if (!f) return report_error(Error{"UsageError", "cannot write '" + out_path + "'", {}, {}});
        f << text;
    }
    if (!report_path.empty()) {
        json rep;
        rep["input"] = path;
        rep["pad_probability"] = (p_text.empty() || p_text == "p") ? "p" : p_text;
        rep["p_is_pad_prob"] = opt.p_is_pad_prob;
        json js = json::array();
        for (const auto& s : sites) js.push_back({{"line", s.line}, {"col", s.col}});
        rep["applied_sites"] = std::move(js);
        std::ofstream f(report_path);
        if (!f) return report_error(Error{"UsageError", "cannot write '" + report_path + "'", {}, {}});
        f << rep.dump(2) << "\n";
    }
    return kExitOk;
}

Result<std::vector<Rat>> parse_grid(const std::string& spec) {
    std::vector<Rat> grid;
    if (spec.find(':') != std::string::npos) {
        auto a = spec.find(':'), b = spec.rfind(':');
        if (a == b) return Error{"UsageError", "grid spec is start:end:step", {}, {}};
        auto lo = parse_rat(spec.substr(0, a));
        auto hi = parse_rat(spec.substr(a + 1, b - a - 1));
        auto st = parse_rat(spec.substr(b + 1));
        if (!lo || !hi || !st || *st <= 0) return Error{"UsageError", "bad grid spec '" + spec + "'", {}, {}};
        for (Rat p = *lo; p <= *hi; p += *st) grid.push_back(p);
    } else {
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ',')) {
            auto p = parse_rat(part);
            if (!p) return Error{"UsageError", "bad grid value '" + part + "'", {}, {}};
            grid.push_back(*p);
        }
    }
    if (grid.empty()) return Error{"UsageError", "empty grid", {}, {}};
    return grid;
}

int cmd_sweep(const std::string& path, const std::string& grid_spec, const std::string& alpha_text,
              const std::vector<std::string>& sets, const std::string& high_spec,
              const std::string& out_prefix, bool ordered, bool do_pad, int depth,
              const CostFlags& cost) {
    auto prog0 = load_program(path);
    if (!prog0) return report_error(prog0.error());
    Program prog = prog0.value();
    if (do_pad) {
        auto padded = pad_program_symbolic(prog);
        if (!padded) return report_error(padded.error());
        prog = padded.value();
    }
    auto cm = cost.resolve();
    if (!cm) return report_error(cm.error());
    auto grid = parse_grid(grid_spec);
    if (!grid) return report_error(grid.error());
    auto alpha = parse_rat(alpha_text);
    if (!alpha) return report_error(Error{"UsageError", "bad alpha '" + alpha_text + "'", {}, {}});

    SweepConfig cfg;
    cfg.prog = prog;
    cfg.grid = std::move(grid).value();
    cfg.alpha = *alpha;
    cfg.cm = cm.value();
    cfg.depth_bound = depth;
    cfg.unordered_pairs = !ordered;
    if (auto err = apply_sets(prog, sets, cfg.low_env)) return report_error(*err);

    // high domain
    std::string spec = high_spec;
    if (spec.empty()) {
        auto arr = sole_high_array(prog);
        if (!arr) return report_error(arr.error());
        spec = arr.value()->name + "=all";
    }
    auto eq = spec.find('=');
    if (eq == std::string::npos)
        return report_error(Error{"UsageError", "--high needs name=all or name=v1,v2,...", {}, {}});
    std::string hname = spec.substr(0, eq), hvals = spec.substr(eq + 1);
    const Decl* hd = prog.find_decl(hname);
    if (!hd || hd->level != SecurityLevel::H)
        return report_error(Error{"UsageError", "'" + hname + "' is not a declared high variable", {}, {}});
    if (hvals.rfind("all", 0) == 0) {
        if (!hd->array_len)
            return report_error(Error{"UsageError", "'all' needs an array variable", {}, {}});
        // an optional length suffix must agree with the declaration
        if (hvals != "all" && hvals != "all" + std::to_string(*hd->array_len))
            return report_error(Error{"UsageError",
                                      "'" + hvals + "' does not match the declared length " +
                                          std::to_string(*hd->array_len),
                                      {},
                                      {}});
        enumerate_bit_keys(hname, *hd->array_len, cfg.high_envs, cfg.high_labels, hd->base);
    } else {
        std::stringstream ss(hvals);
        std::string part;
        while (std::getline(ss, part, ';')) {
            Env e;
            if (hd->array_len) {
                auto xs = parse_array(*hd, part);
                if (!xs) return report_error(xs.error());
                e[hname] = xs.value();
            } else {
                auto v = parse_scalar(*hd, part);
                if (!v) return report_error(v.error());
                e[hname] = v.value();
            }
            cfg.high_envs.push_back(std::move(e));
            cfg.high_labels.push_back(part);
        }
    }

    auto records = sweep(cfg);
    if (!records) return report_error(records.error());
    auto optimum = cost_curve(records.value());
    if (!optimum) return report_error(optimum.error());

    std::string summary = summary_csv(records.value());
    std::string longform = long_csv(records.value(), cfg.high_labels);
    if (out_prefix == "-") {
        std::cout << summary;
    } else if (!out_prefix.empty()) {
        auto write = [&](const std::string& name, const std::string& text) -> bool {
            std::ofstream f(out_prefix + name);
            if (!f) return false;
            f << text;
            return true;
        };
        bool okw = write("_summary.csv", summary) && write("_long.csv", longform);
        for (const auto& rec : records.value()) {
            std::string tag = rat_str(rec.p);
            for (auto& ch : tag)
                if (ch == '/') ch = '_';
            okw = okw && write("_dprime_p" + tag + ".csv", matrix_csv(rec.dprime_matrix, cfg.high_labels));
            okw = okw &&
                  write("_dprime_dec_p" + tag + ".csv", matrix_csv_dec(rec.dprime_matrix, cfg.high_labels));
            okw = okw && write("_delta_p" + tag + ".csv", matrix_csv(rec.delta_matrix, cfg.high_labels));
        }
        if (!okw) return report_error(Error{"UsageError", "cannot write output files", {}, {}});
    }
    std::cout << "minimum cost " << rat_str(optimum.value().min_cost) << " ("
              << rat_dec(optimum.value().min_cost) << ") at p = " << rat_str(optimum.value().argmin_p)
              << " (" << rat_dec(optimum.value().argmin_p) << ")\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"timing-leak analysis for pWhile programs"};
    app.require_subcommand(1);

    std::string path, format = "text", p_text, k1, k2, k_bits, weights = "uniform";
    std::string grid_spec = "0:1:1/10", alpha_text = "6", high_spec, out_prefix, report_path,
                pad_out = "-", pad_p = "p";
    std::vector<std::string> sets;
    bool collapse_flag = false, ordered = false, do_pad = false, table_three = false,
         materialize = false;
    int depth = 10000;
    CostFlags cost;

    auto* check = app.add_subcommand("check", "security-type a program");
    check->add_option("file", path)->required();
    check->add_option("--format", format, "text or json");
    cost.attach(check);

    auto* tree = app.add_subcommand("tree", "build an execution tree");
    tree->add_option("file", path)->required();
    tree->add_option("--set", sets, "initial value, name=value");
    tree->add_option("--k", k_bits, "bits for the high key array");
    tree->add_option("--p", p_text, "padding probability to substitute");
    tree->add_flag("--collapse", collapse_flag, "collapse to the low observation semantics");
    tree->add_option("--format", format, "text, json or dot");
    tree->add_option("--depth", depth, "small-step bound");
    cost.attach(tree);

    auto* dcmd = app.add_subcommand("delta", "leakage estimate between two initial states");
    dcmd->add_option("file", path)->required();
    dcmd->add_option("--k1", k1, "first key")->required();
    dcmd->add_option("--k2", k2, "second key")->required();
    dcmd->add_option("--set", sets, "shared initial value, name=value");
    dcmd->add_option("--p", p_text, "padding probability to substitute");
    dcmd->add_option("--weights", weights, "uniform, classmatch or logtime");
    dcmd->add_option("--format", format, "text or json");
    dcmd->add_option("--depth", depth, "small-step bound");
    cost.attach(dcmd);

    auto* pad = app.add_subcommand("pad", "probabilistic padding transformation");
    pad->add_option("file", path)->required();
    pad->add_option("--p", pad_p, "probability, or 'p' to keep it symbolic");
    pad->add_option("--out", pad_out, "output file, '-' for stdout");
    pad->add_option("--report", report_path, "JSON pad-site report");
    pad->add_flag("--p-on-original", table_three,
                  "attach p to the original code instead of the padded alternative");
    pad->add_flag("--materialize-skipasn", materialize, "print skipAsn as a self-assignment");

    auto* sw = app.add_subcommand("sweep", "padding-probability sweep with cost analysis");
    sw->add_option("file", path)->required();
    sw->add_option("--grid", grid_spec, "start:end:step or comma list");
    sw->add_option("--alpha", alpha_text, "leakage weight in the cost");
    sw->add_option("--set", sets, "low initial value, name=value");
    sw->add_option("--high", high_spec, "high domain: name=all or name=v1;v2;...");
    sw->add_option("--out", out_prefix, "output file prefix, or '-' for stdout summary");
    sw->add_flag("--ordered", ordered, "average leakage over ordered pairs incl. diagonal");
    sw->add_flag("--pad", do_pad, "pad the program before sweeping");
    sw->add_option("--depth", depth, "small-step bound");
    cost.attach(sw);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (check->parsed()) return cmd_check(path, format, cost);
    if (tree->parsed())
        return cmd_tree(path, sets, k_bits, p_text, collapse_flag, format, depth, cost);
    if (dcmd->parsed())
        return cmd_delta(path, k1, k2, sets, p_text, weights, format, depth, cost);
    if (pad->parsed()) return cmd_pad(path, pad_p, pad_out, report_path, table_three, materialize);
    if (sw->parsed())
        return cmd_sweep(path, grid_spec, alpha_text, sets, high_spec, out_prefix, ordered, do_pad,
                         depth, cost);
    return kExitUsage;
}
