#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cfeval/textdist.hpp"

namespace cfeval {

// Sample Pearson correlation. Throws LengthMismatch / DegenerateSeries.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Pearson of rank vectors; ties receive average ranks.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

struct Histogram {
    static constexpr std::size_t kBins = 20;
    std::array<double, kBins + 1> bin_edges{};  // uniform over [0,1]
    std::array<std::size_t, kBins> counts{};
    std::size_t total = 0;

    bool operator==(const Histogram&) const = default;
};

// 20 uniform bins over [0,1], last bin right-closed.
Histogram probability_histogram(const std::vector<double>& values);

struct MethodDistanceMatrix {
    std::vector<std::string> method_ids;            // sorted
    std::vector<std::vector<double>> matrix;        // symmetric, zero diagonal
};

// Entry (a,b) = mean Levenshtein distance over instances shared by the two
// methods. Callers include the original text as a pseudo-method.
MethodDistanceMatrix method_distance_matrix(
    const std::map<std::string, std::map<std::string, TokenSequence>>& texts_by_method);

}  // namespace cfeval
