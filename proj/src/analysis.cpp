#include "cfeval/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfeval/errors.hpp"

namespace cfeval {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw LengthMismatch(xs.size(), ys.size());
    const std::size_t n = xs.size();
    if (n < 2) throw DegenerateSeries();
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateSeries();
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

namespace {

// Average ranks, 1-based; ties share the mean of their rank positions.
std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw LengthMismatch(xs.size(), ys.size());
    return pearson(average_ranks(xs), average_ranks(ys));
}

Histogram probability_histogram(const std::vector<double>& values) {
    Histogram h;
    for (std::size_t i = 0; i <= Histogram::kBins; ++i)
        h.bin_edges[i] = static_cast<double>(i) / Histogram::kBins;
    for (double v : values) {
        if (v < 0.0 || v > 1.0) throw OutOfRange("histogram value " + std::to_string(v));
        auto bin = static_cast<std::size_t>(v * Histogram::kBins);
        if (bin == Histogram::kBins) bin = Histogram::kBins - 1;  // right-closed last bin
        ++h.counts[bin];
        ++h.total;
    }
    return h;
}

MethodDistanceMatrix method_distance_matrix(
    const std::map<std::string, std::map<std::string, TokenSequence>>& texts_by_method) {
    MethodDistanceMatrix out;
    for (const auto& [method, _] : texts_by_method) out.method_ids.push_back(method);
    const std::size_t n = out.method_ids.size();
    out.matrix.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = texts_by_method.at(out.method_ids[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& b = texts_by_method.at(out.method_ids[j]);
            double sum = 0.0;
            std::size_t shared = 0;
            for (const auto& [instance_id, seq] : a) {
                auto it = b.find(instance_id);
                if (it == b.end()) continue;
                sum += static_cast<double>(levenshtein(seq, it->second));
                ++shared;
            }
            if (shared == 0) throw NoOverlap(out.method_ids[i], out.method_ids[j]);
            out.matrix[i][j] = out.matrix[j][i] = sum / static_cast<double>(shared);
        }
    }
    return out;
}

}  // namespace cfeval
