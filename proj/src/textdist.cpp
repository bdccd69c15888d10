#include "cfeval/textdist.hpp"

#include <algorithm>
#include <cstdint>

#include "cfeval/digest.hpp"

namespace cfeval {
namespace {

// Decodes one UTF-8 code point starting at i; advances i past it.
// Invalid bytes are treated as single-byte code points.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
    unsigned char c = s[i];
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0) { len = 4; cp = c & 0x07; }
    else if (c >= 0xE0) { len = 3; cp = c & 0x0F; }
    else if (c >= 0xC0) { len = 2; cp = c & 0x1F; }
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
        unsigned char cc = s[i + k];
        if ((cc & 0xC0) != 0x80) { len = k; cp = c; break; }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += len;
    return cp;
}

bool is_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punct(char32_t cp) {
    if (cp < 0x80) {
        // ASCII code points in Unicode category P
        switch (cp) {
            case '!': case '"': case '#': case '%': case '&': case '\'':
            case '(': case ')': case '*': case ',': case '-': case '.':
            case '/': case ':': case ';': case '?': case '@': case '[':
            case '\\': case ']': case '_': case '{': case '}':
                return true;
            default:
                return false;
        }
    }
    if (cp >= 0x2010 && cp <= 0x2027) return true;   // dashes, quotes, bullets
    if (cp >= 0x2030 && cp <= 0x205E) return true;   // permille .. general punct
    if (cp >= 0x2E00 && cp <= 0x2E7F) return true;   // supplemental punct
    if (cp >= 0x3001 && cp <= 0x3003) return true;   // CJK comma, stop
    if (cp >= 0x3008 && cp <= 0x3011) return true;   // CJK brackets
    if (cp >= 0x3014 && cp <= 0x301F) return true;
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;   // fullwidth forms
    if (cp >= 0xFF1A && cp <= 0xFF1B) return true;
    if (cp >= 0xFF1F && cp <= 0xFF20) return true;
    switch (cp) {
        case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
        case 0x30FB: case 0xFF3B: case 0xFF3D: case 0xFF5B: case 0xFF5D:
            return true;
        default:
            return false;
    }
}

struct Cp {
    char32_t cp;
    std::string bytes;
};

void emit_chunk(const std::vector<Cp>& chunk, std::vector<std::string>& out) {
    std::size_t lo = 0, hi = chunk.size();
    std::vector<std::string> tail;
    while (lo < hi && is_punct(chunk[lo].cp)) {
        out.push_back(chunk[lo].bytes);
        ++lo;
    }
    while (hi > lo && is_punct(chunk[hi - 1].cp)) {
        tail.push_back(chunk[hi - 1].bytes);
        --hi;
    }
    if (lo < hi) {
        std::string middle;
        for (std::size_t k = lo; k < hi; ++k) middle += chunk[k].bytes;
        out.push_back(std::move(middle));
    }
    out.insert(out.end(), tail.rbegin(), tail.rend());
}

}  // namespace

TokenSequence tokenize(const std::string& text) {
    TokenSequence seq;
    seq.source_hash = hex_digest(text);
    std::vector<Cp> chunk;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        char32_t cp = decode_utf8(text, i);
        if (is_space(cp)) {
            if (!chunk.empty()) {
                emit_chunk(chunk, seq.tokens);
                chunk.clear();
            }
        } else {
            chunk.push_back({cp, text.substr(start, i - start)});
        }
    }
    if (!chunk.empty()) emit_chunk(chunk, seq.tokens);
    return seq;
}

std::size_t levenshtein(const TokenSequence& a, const TokenSequence& b) {
    const auto& s = a.tokens;
    const auto& t = b.tokens;
    const std::size_t n = s.size(), m = t.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

std::vector<std::vector<std::size_t>> pairwise_distances(
    const std::vector<TokenSequence>& sequences) {
    const std::size_t n = sequences.size();
    std::vector<std::vector<std::size_t>> m(n, std::vector<std::size_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            std::size_t d = levenshtein(sequences[i], sequences[j]);
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    return m;
}

}  // namespace cfeval
