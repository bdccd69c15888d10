#pragma once

#include <string>
#include <vector>

namespace cfeval {

struct TokenSequence {
    std::vector<std::string> tokens;
    std::string source_hash;

    bool operator==(const TokenSequence&) const = default;
};

// Splits on Unicode whitespace, then peels leading/trailing punctuation
// characters into standalone tokens. Casing preserved; deterministic.
TokenSequence tokenize(const std::string& text);

// Token-level Levenshtein distance, unit cost for insert/delete/substitute.
std::size_t levenshtein(const TokenSequence& a, const TokenSequence& b);

// Full pairwise distance matrix; symmetric with zero diagonal.
std::vector<std::vector<std::size_t>> pairwise_distances(
    const std::vector<TokenSequence>& sequences);

}  // namespace cfeval
