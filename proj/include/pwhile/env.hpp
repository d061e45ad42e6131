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

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace pwhile {

using Value = std::variant<long long, bool>;

inline bool value_is_int(const Value& v) { return std::holds_alternative<long long>(v); }

inline std::string value_str(const Value& v) {
    if (value_is_int(v)) return std::to_string(std::get<long long>(v));
    return std::get<bool>(v) ? "true" : "false";
}

// Scalars bind a value, arrays a fixed-length sequence. Arrays are read-only.
using Binding = std::variant<Value, std::vector<Value>>;

using Env = std::map<std::string, Binding>;

inline std::string binding_str(const Binding& b) {
    if (std::holds_alternative<Value>(b)) return value_str(std::get<Value>(b));
    std::string s = "[";
    const auto& xs = std::get<std::vector<Value>>(b);
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + value_str(xs[i]);
    return s + "]";
}

inline std::string env_str(const Env& e) {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, v] : e) {
        if (!first) s += ",";
        first = false;
        s += k + "=" + binding_str(v);
    }
    return s + "}";
}

/// Restriction of an environment to the given (low) variables.
inline Env project(const Env& e, const std::set<std::string>& vars) {
    Env out;
    for (const auto& [k, v] : e)
        if (vars.count(k)) out.emplace(k, v);
    return out;
}

/// Default initial environment: ints 0, bools false, arrays zero-filled.
inline Env canonical_env(const Program& prog) {
    Env env;
    for (const auto& d : prog.decls) {
        Value zero = d.base == BaseType::Int ? Value(0LL) : Value(false);
        if (d.array_len)
            env.emplace(d.name, std::vector<Value>(static_cast<size_t>(*d.array_len), zero));
        else
            env.emplace(d.name, zero);
    }
    return env;
}

inline std::set<std::string> low_vars(const Program& prog) {
    std::set<std::string> out;
    for (const auto& d : prog.decls)
        if (d.level == SecurityLevel::L) out.insert(d.name);
    return out;
}

inline std::set<std::string> high_vars(const Program& prog) {
    std::set<std::string> out;
    for (const auto& d : prog.decls)
        if (d.level == SecurityLevel::H) out.insert(d.name);
    return out;
}

} // namespace pwhile
