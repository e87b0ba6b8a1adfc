#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mapmeta {

// Input files that do not follow their documented format.
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a domain invariant.
class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// API misuse: a documented precondition does not hold.
class contract_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Bad paths, out-of-range parameters, unusable configuration.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::string to_upper(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    return out;
}

// Number of Unicode scalar values in a UTF-8 string (continuation bytes
// are not counted; invalid bytes count as one scalar each).
inline size_t utf8_length(std::string_view s) {
    size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

// Decodes UTF-8 into code points; bad sequences decode byte-wise.
inline std::vector<uint32_t> utf8_decode(std::string_view s) {
    std::vector<uint32_t> cps;
    cps.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        uint32_t cp = c;
        int extra = 0;
        if ((c & 0x80) == 0x00) extra = 0;
        else if ((c & 0xE0) == 0xC0) { extra = 1; cp = c & 0x1F; }
        else if ((c & 0xF0) == 0xE0) { extra = 2; cp = c & 0x0F; }
        else if ((c & 0xF8) == 0xF0) { extra = 3; cp = c & 0x07; }
        if (i + extra >= s.size()) extra = 0;
        bool ok = true;
        for (int k = 1; k <= extra; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) { ok = false; break; }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok || extra == 0) { cps.push_back(c); i += 1; }
        else { cps.push_back(cp); i += extra + 1; }
    }
    return cps;
}

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view tok, const std::string& what) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw parse_error("invalid number for " + what + ": '" + std::string(tok) + "'");
    return v;
}

inline long long parse_int(std::string_view tok, const std::string& what) {
    long long v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw parse_error("invalid integer for " + what + ": '" + std::string(tok) + "'");
    return v;
}

// --- deterministic RNG helpers ------------------------------------------
//
// std::distributions are implementation-defined, so everything that must be
// reproducible bit-for-bit draws through these instead.

using Rng = std::mt19937_64;

inline double rng_uniform(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double rng_uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * rng_uniform(rng);
}

inline size_t rng_index(Rng& rng, size_t n) {
    size_t i = static_cast<size_t>(rng_uniform(rng) * static_cast<double>(n));
    return i >= n ? n - 1 : i;
}

inline double rng_normal(Rng& rng) {
    // Box-Muller; u clamped away from 0.
    double u = rng_uniform(rng);
    double v = rng_uniform(rng);
    if (u < 1e-300) u = 1e-300;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
}

// Weighted draw over non-negative weights; all-zero weights fall back to
// uniform.
inline size_t rng_weighted(Rng& rng, const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return rng_index(rng, weights.size());
    double x = rng_uniform(rng) * total;
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (x < acc) return i;
    }
    return weights.size() - 1;
}

// --- little-endian binary encoding ---------------------------------------

inline void put_le_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_le_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_le_f64(std::string& out, double d) {
    uint64_t v;
    static_assert(sizeof v == sizeof d);
    std::memcpy(&v, &d, sizeof v);
    put_le_u64(out, v);
}

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    uint32_t u32() { return static_cast<uint32_t>(raw(4)); }
    uint64_t u64() { return raw(8); }
    double f64() {
        uint64_t v = raw(8);
        double d;
        std::memcpy(&d, &v, sizeof d);
        return d;
    }
    std::string_view bytes(size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

private:
    uint64_t raw(size_t n) {
        need(n);
        uint64_t v = 0;
        for (size_t i = 0; i < n; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += n;
        return v;
    }
    void need(size_t n) {
        if (pos_ + n > data_.size()) throw parse_error("unexpected end of binary data");
    }
    std::string_view data_;
    size_t pos_ = 0;
};

}  // namespace mapmeta
