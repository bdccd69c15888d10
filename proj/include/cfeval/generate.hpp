#pragma once

#include <string>
#include <vector>

#include "cfeval/backends.hpp"
#include "cfeval/corpus.hpp"

namespace cfeval {

// One worked original -> counterfactual example shown in the prompt.
struct Exemplar {
    TextFields original;
    TextFields counterfactual;
    std::string label;
    std::string target_label;

    bool empty() const { return original.empty() || counterfactual.empty(); }
};

struct GenerationConfig {
    double temperature = 1.0;
    int k_variants = 1;
    Exemplar exemplar;
    std::string method_id = "llm";
    std::string template_id = "gen-v1";
    std::size_t max_parallel = 1;
};

// One-shot prompt: system states the task, user shows the exemplar then the
// instance; output requested between <cf> and </cf>. sample_index > 0 asks
// for an alternative edit so independent samples stay distinct under caching.
std::vector<Message> build_generation_prompt(const Instance& instance,
                                             const GenerationConfig& config,
                                             int sample_index = 0);

// Extracts the first <cf>...</cf> span; NLI responses must contain labeled
// Premise:/Hypothesis: lines inside the markers.
TextFields parse_counterfactual(const std::string& response, Task task);

// k_variants records per instance; parse failures are retried once, then
// the variant is dropped.
std::vector<CounterfactualRecord> generate_counterfactuals(
    const std::vector<Instance>& instances, Backend& backend,
    const GenerationConfig& config);

}  // namespace cfeval
