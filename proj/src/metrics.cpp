#include "cfeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "cfeval/errors.hpp"
#include "cfeval/parallel.hpp"
#include "cfeval/textdist.hpp"

namespace cfeval {

double flip_rate(const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) throw EmptyInput();
    std::size_t flips = 0;
    for (const auto& [orig, cf] : pairs)
        if (orig != cf) ++flips;
    return static_cast<double>(flips) / static_cast<double>(pairs.size());
}

double target_flip_rate(const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (pairs.empty()) throw EmptyInput();
    std::size_t hits = 0;
    for (const auto& [cf, target] : pairs)
        if (cf == target) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

double probability_change(const std::vector<std::pair<double, double>>& items) {
    if (items.empty()) throw EmptyInput();
    double sum = 0.0;
    for (const auto& [p_orig, p_cf] : items) {
        if (p_orig < 0.0 || p_orig > 1.0 || p_cf < 0.0 || p_cf > 1.0)
            throw OutOfRange("probability outside [0,1]");
        sum += p_cf - p_orig;
    }
    return sum / static_cast<double>(items.size());
}

double token_distance(const std::vector<std::pair<std::size_t, bool>>& items,
                      bool only_flipped) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [distance, flipped] : items) {
        if (only_flipped && !flipped) continue;
        sum += static_cast<double>(distance);
        ++n;
    }
    if (n == 0) throw NothingIncluded();
    return sum / static_cast<double>(n);
}

double perplexity(const TokenLogprobs& lp) {
    if (lp.logprobs.empty()) throw EmptyInput();
    double mean = std::accumulate(lp.logprobs.begin(), lp.logprobs.end(), 0.0) /
                  static_cast<double>(lp.logprobs.size());
    return std::exp(-mean);
}

double diversity(const std::vector<std::pair<TokenSequence, TokenSequence>>& variant_pairs) {
    if (variant_pairs.empty()) throw EmptyInput();
    double sum = 0.0;
    for (const auto& [a, b] : variant_pairs)
        sum += static_cast<double>(levenshtein(a, b));
    return sum / static_cast<double>(variant_pairs.size());
}

std::string joined_text(const TextFields& fields) {
    auto it = fields.find("text");
    if (it != fields.end()) return it->second;
    return fields.at("premise") + "\n" + fields.at("hypothesis");
}

std::size_t fields_distance(const TextFields& a, const TextFields& b) {
    auto ta = a.find("text");
    if (ta != a.end()) return levenshtein(tokenize(ta->second), tokenize(b.at("text")));
    // NLI: premise and hypothesis tokenized separately, distances summed
    return levenshtein(tokenize(a.at("premise")), tokenize(b.at("premise"))) +
           levenshtein(tokenize(a.at("hypothesis")), tokenize(b.at("hypothesis")));
}

std::size_t record_distance(const Instance& instance, const CounterfactualRecord& record) {
    return fields_distance(instance.fields, record.fields);
}

namespace {

struct ClassifySlot {
    TextFields fields;
    std::optional<ClassifierOutput> output;
    std::string error;
};

struct LogprobSlot {
    std::string text;
    std::optional<TokenLogprobs> output;
    std::string error;
};

}  // namespace

MethodEvaluation evaluate_method(const std::string& method_id,
                                 const std::vector<EvaluationUnit>& units,
                                 Backend& classifier, Backend& language_model,
                                 const EvalOptions& options) {
    MethodEvaluation eval;
    eval.report.method_id = method_id;

    // one classify call per distinct text, one logprob call per counterfactual
    std::vector<ClassifySlot> classify_slots;
    std::map<std::string, std::size_t> classify_index;
    auto classify_slot = [&](const TextFields& fields) {
        std::string key = joined_text(fields);
        auto [it, inserted] = classify_index.try_emplace(key, classify_slots.size());
        if (inserted) classify_slots.push_back({fields, std::nullopt, {}});
        return it->second;
    };

    std::vector<LogprobSlot> logprob_slots;
    std::map<std::string, std::size_t> logprob_index;
    auto logprob_slot = [&](const std::string& text) {
        auto [it, inserted] = logprob_index.try_emplace(text, logprob_slots.size());
        if (inserted) logprob_slots.push_back({text, std::nullopt, {}});
        return it->second;
    };

    struct UnitPlan {
        std::size_t orig_classify, cf_classify, cf_logprob;
    };
    std::vector<UnitPlan> plans;
    plans.reserve(units.size());
    for (const auto& unit : units) {
        const auto& cf = unit.variants.front();
        plans.push_back({classify_slot(unit.instance.fields), classify_slot(cf.fields),
                         logprob_slot(joined_text(cf.fields))});
    }

    const auto& labels = label_set(units.empty() ? Task::sentiment : units.front().instance.task);
    parallel_for(classify_slots.size(), options.max_parallel, [&](std::size_t i) {
        try {
            classify_slots[i].output = classifier.classify(classify_slots[i].fields, labels);
        } catch (const Error& e) {
            classify_slots[i].error = e.what();
        }
    });
    parallel_for(logprob_slots.size(), options.max_parallel, [&](std::size_t i) {
        try {
            logprob_slots[i].output = language_model.token_logprobs(logprob_slots[i].text);
        } catch (const Error& e) {
            logprob_slots[i].error = e.what();
        }
    });

    // deterministic sequential reduce in unit order
    std::vector<std::pair<std::string, std::string>> flip_pairs, target_pairs;
    std::vector<std::pair<double, double>> dp_items;
    std::vector<std::pair<std::size_t, bool>> distance_items;
    double ppl_sum = 0.0;
    double div_sum = 0.0;
    std::size_t div_n = 0;

    for (std::size_t u = 0; u < units.size(); ++u) {
        const auto& unit = units[u];
        const auto& plan = plans[u];
        const auto& orig = classify_slots[plan.orig_classify];
        const auto& cf = classify_slots[plan.cf_classify];
        const auto& lp = logprob_slots[plan.cf_logprob];
        if (!orig.output || !cf.output) {
            ++eval.report.missing;
            ++eval.report.missing_reasons["classify"];
            continue;
        }
        if (!lp.output) {
            ++eval.report.missing;
            ++eval.report.missing_reasons["logprob"];
            continue;
        }

        InstanceMetrics m;
        m.instance_id = unit.instance.id;
        m.method_id = method_id;
        m.predicted_orig = orig.output->predicted;
        m.predicted_cf = cf.output->predicted;
        m.flipped = m.predicted_orig != m.predicted_cf;
        m.reached_target = m.predicted_cf == unit.instance.target_label;
        m.p_target_orig = orig.output->probabilities.at(unit.instance.target_label);
        m.p_target_cf = cf.output->probabilities.at(unit.instance.target_label);
        m.delta_p = m.p_target_cf - m.p_target_orig;
        m.token_distance = record_distance(unit.instance, unit.variants.front());
        m.perplexity = perplexity(*lp.output);
        if (options.compute_diversity && unit.variants.size() >= 2) {
            double sum = 0.0;
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < unit.variants.size(); ++i)
                for (std::size_t j = i + 1; j < unit.variants.size(); ++j) {
                    sum += static_cast<double>(
                        fields_distance(unit.variants[i].fields, unit.variants[j].fields));
                    ++pairs;
                }
            m.diversity = sum / static_cast<double>(pairs);
            div_sum += *m.diversity;
            ++div_n;
        }

        flip_pairs.emplace_back(m.predicted_orig, m.predicted_cf);
        target_pairs.emplace_back(m.predicted_cf, unit.instance.target_label);
        dp_items.emplace_back(m.p_target_orig, m.p_target_cf);
        distance_items.emplace_back(m.token_distance, m.flipped);
        ppl_sum += m.perplexity;
        eval.per_instance.push_back(std::move(m));
    }

    eval.report.n = eval.per_instance.size();
    if (eval.report.n > 0) {
        eval.report.flip_rate = flip_rate(flip_pairs);
        eval.report.target_flip_rate = target_flip_rate(target_pairs);
        eval.report.delta_p_mean = probability_change(dp_items);
        eval.report.perplexity_mean = ppl_sum / static_cast<double>(eval.report.n);
        try {
            eval.report.distance_mean =
                token_distance(distance_items, options.only_flipped_distance);
        } catch (const NothingIncluded&) {
            // flip filter removed everything; reported as missing
        }
        if (div_n > 0) eval.report.diversity_mean = div_sum / static_cast<double>(div_n);
    }
    return eval;
}

}  // namespace cfeval
