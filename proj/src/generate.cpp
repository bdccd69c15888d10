#include "cfeval/generate.hpp"

#include <algorithm>
#include <sstream>

#include "cfeval/errors.hpp"
#include "cfeval/parallel.hpp"

namespace cfeval {
namespace {

void append_fields(std::ostringstream& os, const TextFields& fields) {
    auto it = fields.find("text");
    if (it != fields.end()) {
        os << it->second << "\n";
    } else {
        os << "Premise: " << fields.at("premise") << "\n"
           << "Hypothesis: " << fields.at("hypothesis") << "\n";
    }
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<Message> build_generation_prompt(const Instance& instance,
                                             const GenerationConfig& config,
                                             int sample_index) {
    if (config.exemplar.empty()) throw Error("generation config has no exemplar");

    std::string unit = instance.task == Task::sentiment ? "text" : "sentence pair";
    std::ostringstream sys;
    sys << "You minimally edit a " << unit << " so that its label becomes \""
        << instance.target_label << "\". Keep the edit as small as possible.";

    std::ostringstream user;
    user << "Example:\nOriginal (" << config.exemplar.label << "):\n";
    append_fields(user, config.exemplar.original);
    user << "Edited (" << config.exemplar.target_label << "):\n<cf>";
    if (instance.task == Task::sentiment) {
        user << config.exemplar.counterfactual.at("text");
    } else {
        user << "Premise: " << config.exemplar.counterfactual.at("premise")
             << "\nHypothesis: " << config.exemplar.counterfactual.at("hypothesis");
    }
    user << "</cf>\n\nNow edit this " << unit << " so its label becomes \""
         << instance.target_label << "\":\n";
    append_fields(user, instance.fields);
    if (instance.task == Task::sentiment) {
        user << "\nReply with only the edited text between <cf> and </cf>.";
    } else {
        user << "\nReply with the edited pair between <cf> and </cf>, "
                "as labeled Premise: and Hypothesis: lines.";
    }
    if (sample_index > 0)
        user << "\nGive a different edit than your previous answers (variation "
             << sample_index + 1 << ").";
    return {{"system", sys.str()}, {"user", user.str()}};
}

TextFields parse_counterfactual(const std::string& response, Task task) {
    auto open = response.find("<cf>");
    if (open == std::string::npos) throw MissingMarkers();
    auto start = open + 4;
    auto close = response.find("</cf>", start);
    if (close == std::string::npos) throw MissingMarkers();
    std::string body = trim(response.substr(start, close - start));

    TextFields fields;
    if (task == Task::sentiment) {
        if (body.empty()) throw MissingField("text");
        fields["text"] = body;
        return fields;
    }
    auto extract = [&](const std::string& label) {
        auto pos = body.find(label);
        if (pos == std::string::npos) throw MissingField(label.substr(0, label.size() - 1));
        auto end = body.find('\n', pos);
        std::string value =
            trim(body.substr(pos + label.size(),
                             (end == std::string::npos ? body.size() : end) - pos - label.size()));
        if (value.empty()) throw MissingField(label.substr(0, label.size() - 1));
        return value;
    };
    fields["premise"] = extract("Premise:");
    fields["hypothesis"] = extract("Hypothesis:");
    return fields;
}

std::vector<CounterfactualRecord> generate_counterfactuals(
    const std::vector<Instance>& instances, Backend& backend,
    const GenerationConfig& config) {
    if (config.k_variants < 1) throw Error("k_variants must be >= 1");

    struct Slot {
        const Instance* instance;
        int variant;
        std::optional<TextFields> fields;
    };
    std::vector<Slot> slots;
    slots.reserve(instances.size() * config.k_variants);
    for (const auto& inst : instances)
        for (int k = 0; k < config.k_variants; ++k) slots.push_back({&inst, k, std::nullopt});

    parallel_for(slots.size(), config.max_parallel, [&](std::size_t i) {
        auto& slot = slots[i];
        auto messages = build_generation_prompt(*slot.instance, config, slot.variant);
        for (int attempt = 0; attempt < 2; ++attempt) {
            std::string response;
            try {
                response = backend.chat(messages, config.temperature);
            } catch (const Error&) {
                return;  // transport failure after retries: variant dropped
            }
            try {
                slot.fields = parse_counterfactual(response, slot.instance->task);
                return;
            } catch (const Error&) {
                // parse failure: retried once, then dropped
            }
        }
    });

    std::vector<CounterfactualRecord> out;
    for (auto& slot : slots) {
        if (!slot.fields) continue;
        out.push_back({slot.instance->id, config.method_id, slot.variant,
                       std::move(*slot.fields)});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::tie(a.instance_id, a.variant_index) <
               std::tie(b.instance_id, b.variant_index);
    });
    return out;
}

}  // namespace cfeval
