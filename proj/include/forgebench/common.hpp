// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace forgebench {

/// Error taxonomy shared by all modules. Diagnostics that are ordinary data
/// (validation findings) are not errors; everything here aborts an operation.
enum class ErrorKind {
    Syntax,        // malformed document text
    Schema,        // structurally valid document violating the schema
    Shape,         // tensor operand shape mismatch
    Group,         // channel/head grouping divisibility violation
    Bounds,        // region outside buffer bounds
    Validation,    // operation requires a cleanly validating design
    UnsupportedSpec,
    Arity,
    Policy,
    FamilyMismatch,
    InvalidAxisValue,
    Io,
    ToolNotFound,
    BackendUnavailable,
    Format,        // unparseable report document
    Oracle,        // non-finite value produced by the golden model
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Syntax: return "SyntaxError";
        case ErrorKind::Schema: return "SchemaError";
        case ErrorKind::Shape: return "ShapeError";
        case ErrorKind::Group: return "GroupError";
        case ErrorKind::Bounds: return "BoundsError";
        case ErrorKind::Validation: return "ValidationError";
        case ErrorKind::UnsupportedSpec: return "UnsupportedSpec";
        case ErrorKind::Arity: return "ArityError";
        case ErrorKind::Policy: return "PolicyError";
        case ErrorKind::FamilyMismatch: return "FamilyMismatch";
        case ErrorKind::InvalidAxisValue: return "InvalidAxisValue";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::ToolNotFound: return "ToolNotFound";
        case ErrorKind::BackendUnavailable: return "BackendUnavailable";
        case ErrorKind::Format: return "FormatError";
        case ErrorKind::Oracle: return "OracleError";
    }
    return "Error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message, std::string path = {})
        : std::runtime_error(compose(kind, message, path)),
          kind_(kind),
          message_(std::move(message)),
          path_(std::move(path)) {}

    ErrorKind kind() const { return kind_; }
    /// Bare message without the kind prefix or path suffix.
    const std::string& message() const { return message_; }
    /// Document or buffer path the error refers to ("calls[0].inputs[0]"), may be empty.
    const std::string& path() const { return path_; }

private:
    static std::string compose(ErrorKind kind, const std::string& message,
                               const std::string& path) {
        std::string s = error_kind_name(kind);
        s += ": ";
        s += message;
        if (!path.empty()) {
            s += " (at ";
            s += path;
            s += ")";
        }
        return s;
    }

    ErrorKind kind_;
    std::string message_;
    std::string path_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message,
                               const std::string& path = {}) {
    throw Error(kind, message, path);
}

/// C-family identifier: letters, digits, underscore, non-digit start.
inline bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Hashing

/// FNV-1a over bytes; stable across platforms, used for content-derived symbols.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    return fnv1a64(s.data(), s.size());
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

/// First 8 hex chars of the 64-bit content hash; collision-safe enough for
/// per-design kernel symbol disambiguation.
inline std::string hash8(const std::string& content) {
    return hex64(fnv1a64(content)).substr(0, 8);
}

/// SplitMix64 finalizer. Keyed counter generators derive per-index draws as
/// mix(seed + (index + 1) * GAMMA); the same arithmetic is reproduced in
/// emitted testbench code, so any change here is a format change.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kSplitMixGamma = 0x9e3779b97f4a7c15ull;

inline std::uint64_t keyed_draw(std::uint64_t seed, std::uint64_t index) {
    return splitmix64_mix(seed + (index + 1) * kSplitMixGamma);
}

/// Uniform double in [0, 1) from a 64-bit draw (53 mantissa bits).
inline double draw_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// SHA-256 (for file manifests)

namespace detail {

struct Sha256 {
    std::uint32_t state[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                              0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::uint64_t total = 0;
    unsigned char buf[64];
    std::size_t fill = 0;

    static std::uint32_t rr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void block(const unsigned char* p) {
        static const std::uint32_t K[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i) {
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        }
        for (int i = 16; i < 64; ++i) {
            std::uint32_t s0 = rr(w[i - 15], 7) ^ rr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            std::uint32_t s1 = rr(w[i - 2], 17) ^ rr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = state[0], b = state[1], c = state[2], d = state[3];
        std::uint32_t e = state[4], f = state[5], g = state[6], h = state[7];
        for (int i = 0; i < 64; ++i) {
            std::uint32_t s1 = rr(e, 6) ^ rr(e, 11) ^ rr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t t1 = h + s1 + ch + K[i] + w[i];
            std::uint32_t s0 = rr(a, 2) ^ rr(a, 13) ^ rr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t t2 = s0 + maj;
            h = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        state[0] += a; state[1] += b; state[2] += c; state[3] += d;
        state[4] += e; state[5] += f; state[6] += g; state[7] += h;
    }

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        total += len;
        while (len > 0) {
            std::size_t take = std::min<std::size_t>(64 - fill, len);
            std::memcpy(buf + fill, p, take);
            fill += take;
            p += take;
            len -= take;
            if (fill == 64) {
                block(buf);
                fill = 0;
            }
        }
    }

    std::string finish() {
        std::uint64_t bits = total * 8;  // message length before padding
        unsigned char pad = 0x80;
        update(&pad, 1);
        unsigned char zero = 0;
        while (fill != 56) update(&zero, 1);
        unsigned char lenb[8];
        for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(lenb, 8);
        std::string out;
        out.reserve(64);
        for (std::uint32_t s : state) {
            char b[9];
            std::snprintf(b, sizeof b, "%08x", s);
            out += b;
        }
        return out;
    }
};

}  // namespace detail

inline std::string sha256_hex(const std::string& data) {
    detail::Sha256 h;
    h.update(data.data(), data.size());
    return h.finish();
}

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest decimal form that round-trips a double; locale independent.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return std::string(buf);
}

/// 1-based line/column of a byte offset in a document, for parse diagnostics.
inline std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace forgebench
