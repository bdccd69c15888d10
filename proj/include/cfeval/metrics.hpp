#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfeval/backends.hpp"
#include "cfeval/corpus.hpp"
#include "cfeval/textdist.hpp"

namespace cfeval {

struct InstanceMetrics {
    std::string instance_id;
    std::string method_id;
    bool flipped = false;
    bool reached_target = false;
    double delta_p = 0.0;               // P(y'|x') - P(y'|x)
    double p_target_orig = 0.0;
    double p_target_cf = 0.0;
    std::string predicted_orig;
    std::string predicted_cf;
    std::size_t token_distance = 0;     // first variant
    double perplexity = 1.0;            // first variant
    std::optional<double> diversity;    // absent when < 2 variants

    bool operator==(const InstanceMetrics&) const = default;
};

struct MethodReport {
    std::string method_id;
    std::size_t n = 0;                  // instances evaluated
    double flip_rate = 0.0;
    double target_flip_rate = 0.0;
    double delta_p_mean = 0.0;
    double perplexity_mean = 0.0;
    std::optional<double> distance_mean;   // absent when the flip filter removed everything
    std::optional<double> diversity_mean;  // absent when no instance has >= 2 variants
    std::size_t missing = 0;
    std::map<std::string, std::size_t> missing_reasons;
};

// ---------------------------------------------------------------------------
// metric primitives

// (1/N) sum 1[f(x) != f(x')]
double flip_rate(const std::vector<std::pair<std::string, std::string>>& pairs);

// fraction where predicted_cf == target
double target_flip_rate(const std::vector<std::pair<std::string, std::string>>& pairs);

// mean of (p_target_cf - p_target_orig)
double probability_change(const std::vector<std::pair<double, double>>& items);

// mean distance over (distance, flipped) items; when only_flipped, keeps
// only items whose counterfactual changed the prediction
double token_distance(const std::vector<std::pair<std::size_t, bool>>& items,
                      bool only_flipped);

// exp of negative mean token logprob
double perplexity(const TokenLogprobs& lp);

// mean pairwise Levenshtein distance over counterfactual variants
double diversity(const std::vector<std::pair<TokenSequence, TokenSequence>>& variant_pairs);

// ---------------------------------------------------------------------------
// per-method evaluation

struct EvalOptions {
    bool only_flipped_distance = true;
    bool compute_diversity = true;
    std::size_t max_parallel = 1;
};

struct MethodEvaluation {
    std::vector<InstanceMetrics> per_instance;  // in unit order; failed units omitted
    MethodReport report;
};

// Runs classify + logprob backends over every unit (variant 0 is the
// canonical counterfactual) and aggregates. Per-instance backend failures
// become missing counts, never aborts.
MethodEvaluation evaluate_method(const std::string& method_id,
                                 const std::vector<EvaluationUnit>& units,
                                 Backend& classifier, Backend& language_model,
                                 const EvalOptions& options = {});

// Token distance between an instance and one record; NLI fields are
// tokenized separately and their distances summed.
std::size_t record_distance(const Instance& instance, const CounterfactualRecord& record);
std::size_t fields_distance(const TextFields& a, const TextFields& b);

// Single text used for language-model calls: NLI joins premise and
// hypothesis with one newline.
std::string joined_text(const TextFields& fields);

}  // namespace cfeval
