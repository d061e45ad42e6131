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

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace pwhile {

// All probabilities, durations and leakage values are exact rationals.
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string rat_str(const Rat& r) {
    BigInt num = numerator(r), den = denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

/// Fixed-point decimal rendering, round half to even.
inline std::string rat_dec(const Rat& r, unsigned digits = 6) {
    BigInt num = numerator(r), den = denominator(r);
    bool neg = num < 0;
    if (neg) num = -num;
    BigInt scale = boost::multiprecision::pow(BigInt(10), digits);
    BigInt scaled = num * scale;
    BigInt q = scaled / den, rem = scaled % den;
    BigInt twice = rem * 2;
    if (twice > den || (twice == den && q % 2 != 0)) ++q;
    BigInt ip = q / scale, fp = q % scale;
    std::string fps = fp.str();
    if (fps.size() < digits) fps.insert(0, digits - fps.size(), '0');
    std::string out = (neg && q != 0 ? "-" : "") + ip.str();
    if (digits > 0) out += "." + fps;
    return out;
}

/// Accepts "a", "a/b" and decimal "a.b" forms, with optional leading '-'.
inline std::optional<Rat> parse_rat(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool neg = false;
    size_t i = 0;
    if (s[0] == '-') { neg = true; i = 1; }
    if (i >= s.size()) return std::nullopt;

    auto digits = [&](size_t& j) -> std::optional<BigInt> {
        size_t start = j;
        while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
        if (j == start) return std::nullopt;
        return BigInt(std::string(s.substr(start, j - start)));
    };

    auto whole = digits(i);
    if (!whole) return std::nullopt;
    Rat value(*whole);
    if (i < s.size() && s[i] == '/') {
        ++i;
        auto den = digits(i);
        if (!den || i != s.size() || *den == 0) return std::nullopt;
        value = Rat(*whole, *den);
    } else if (i < s.size() && s[i] == '.') {
        ++i;
        size_t start = i;
        auto frac = digits(i);
        if (!frac || i != s.size()) return std::nullopt;
        BigInt scale = boost::multiprecision::pow(BigInt(10), unsigned(i - start));
        value = Rat(*whole) + Rat(*frac, scale);
    } else if (i != s.size()) {
        return std::nullopt;
    }
    return neg ? Rat(-value) : value;
}

} // namespace pwhile
