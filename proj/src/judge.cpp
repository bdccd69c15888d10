#include "cfeval/judge.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cfeval/analysis.hpp"
#include "cfeval/errors.hpp"
#include "cfeval/parallel.hpp"

namespace cfeval {

using json = nlohmann::json;

Dimension dimension_from_string(const std::string& s) {
    if (s == "fluency") return Dimension::fluency;
    if (s == "cohesiveness") return Dimension::cohesiveness;
    if (s == "grammar") return Dimension::grammar;
    throw Error("unknown quality dimension: " + s);
}

std::string to_string(Dimension d) {
    switch (d) {
        case Dimension::fluency: return "fluency";
        case Dimension::cohesiveness: return "cohesiveness";
        default: return "grammar";
    }
}

const std::string& dimension_definition(Dimension d) {
    static const std::string fluency = "natural and readable text flow";
    static const std::string cohesiveness = "logical and coherent structure";
    static const std::string grammar = "syntactical and grammatical accuracy";
    switch (d) {
        case Dimension::fluency: return fluency;
        case Dimension::cohesiveness: return cohesiveness;
        default: return grammar;
    }
}

const std::vector<Dimension>& all_dimensions() {
    static const std::vector<Dimension> dims{Dimension::fluency, Dimension::cohesiveness,
                                             Dimension::grammar};
    return dims;
}

std::vector<Message> build_judge_prompt(const TextFields& fields, Dimension dimension) {
    std::string name = to_string(dimension);
    std::ostringstream user;
    user << "Rate the " << name << " of the text below on a scale from 1 to 5.\n"
         << name << " means: " << dimension_definition(dimension) << ".\n\n";
    auto it = fields.find("text");
    if (it != fields.end()) {
        user << "Text:\n" << it->second << "\n";
    } else {
        user << "Premise: " << fields.at("premise") << "\n"
             << "Hypothesis: " << fields.at("hypothesis") << "\n";
    }
    user << "\nAnswer with exactly \"Score: <1-5>\" and nothing else.";
    return {{"system", "You are a careful rater of text quality."}, {"user", user.str()}};
}

int parse_score(const std::string& response) {
    static const std::regex after_marker(R"(Score:\s*([1-5])(?![0-9]))");
    std::smatch m;
    if (std::regex_search(response, m, after_marker))
        return m[1].str()[0] - '0';
    static const std::regex standalone(R"((?:^|[^0-9])([1-5])(?![0-9]))");
    if (std::regex_search(response, m, standalone))
        return m[1].str()[0] - '0';
    throw Unparseable(response);
}

std::pair<std::vector<JudgeScore>, QualityReport> judge_corpus(
    const std::vector<CounterfactualRecord>& records, Backend& backend,
    const JudgeConfig& config) {
    struct Slot {
        const CounterfactualRecord* record;
        Dimension dimension;
        std::optional<JudgeScore> score;
    };
    std::vector<Slot> slots;
    slots.reserve(records.size() * config.dimensions.size());
    for (const auto& rec : records)
        for (Dimension dim : config.dimensions) slots.push_back({&rec, dim, std::nullopt});

    parallel_for(slots.size(), config.max_parallel, [&](std::size_t i) {
        auto& slot = slots[i];
        auto messages = build_judge_prompt(slot.record->fields, slot.dimension);
        for (int attempt = 0; attempt <= config.retries_on_unparseable; ++attempt) {
            std::string response;
            try {
                response = backend.chat(messages, config.temperature);
            } catch (const Error&) {
                break;  // transport failure after backend retries: recorded as missing
            }
            try {
                int value = parse_score(response);
                slot.score = JudgeScore{slot.record->instance_id, slot.record->method_id,
                                        slot.dimension,           value,
                                        config.judge_id,          config.temperature,
                                        response,                 config.template_id};
                break;
            } catch (const Unparseable&) {
                // retry, then record as missing
            }
        }
    });

    std::vector<JudgeScore> scores;
    // method -> dimension -> (sum, count)
    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> acc;
    std::map<std::string, std::pair<std::size_t, std::size_t>> missing;  // missing, total
    for (auto& slot : slots) {
        auto& [miss, total] = missing[slot.record->method_id];
        ++total;
        if (slot.score) {
            auto& [sum, count] = acc[slot.record->method_id][to_string(slot.dimension)];
            sum += slot.score->score;
            ++count;
            scores.push_back(std::move(*slot.score));
        } else {
            ++miss;
        }
    }

    QualityReport report;
    for (const auto& [method, by_dim] : acc) {
        double dim_sum = 0.0;
        for (const auto& [dim, sc] : by_dim) {
            double mean = sc.first / static_cast<double>(sc.second);
            report.means[method][dim] = mean;
            dim_sum += mean;
        }
        report.average[method] = dim_sum / static_cast<double>(by_dim.size());
    }
    for (const auto& [method, mt] : missing)
        report.missing_rate[method] =
            static_cast<double>(mt.first) / static_cast<double>(mt.second);
    return {std::move(scores), std::move(report)};
}

JudgeAgreement compare_judges(const std::vector<JudgeScore>& scores_a,
                              const std::vector<JudgeScore>& scores_b) {
    using Key = std::tuple<std::string, std::string, std::string>;
    auto index = [](const std::vector<JudgeScore>& scores) {
        std::map<Key, double> out;
        for (const auto& s : scores)
            out[{s.instance_id, s.method_id, to_string(s.dimension)}] =
                static_cast<double>(s.score);
        return out;
    };
    auto a = index(scores_a);
    auto b = index(scores_b);

    std::vector<double> xs, ys;
    for (const auto& [key, va] : a) {
        auto it = b.find(key);
        if (it == b.end()) continue;
        xs.push_back(va);
        ys.push_back(it->second);
    }
    if (xs.size() < 2) throw InsufficientOverlap();

    JudgeAgreement agreement;
    agreement.pearson_per_instance = pearson(xs, ys);

    // per-dimension method means, Spearman of rankings, averaged across dimensions
    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> by_dim_a,
        by_dim_b;
    std::map<std::string, std::pair<double, std::size_t>> pooled_a, pooled_b;
    for (const auto& [key, va] : a) {
        auto it = b.find(key);
        if (it == b.end()) continue;
        const auto& [instance, method, dim] = key;
        auto add = [](auto& slot, double v) {
            slot.first += v;
            ++slot.second;
        };
        add(by_dim_a[dim][method], va);
        add(by_dim_b[dim][method], it->second);
        add(pooled_a[method], va);
        add(pooled_b[method], it->second);
    }
    for (const auto& [method, sc] : pooled_a)
        agreement.method_means_a[method] = sc.first / static_cast<double>(sc.second);
    for (const auto& [method, sc] : pooled_b)
        agreement.method_means_b[method] = sc.first / static_cast<double>(sc.second);

    double spearman_sum = 0.0;
    std::size_t spearman_n = 0;
    for (const auto& [dim, means_a] : by_dim_a) {
        const auto& means_b = by_dim_b.at(dim);
        std::vector<double> ma, mb;
        for (const auto& [method, sc] : means_a) {
            ma.push_back(sc.first / static_cast<double>(sc.second));
            const auto& scb = means_b.at(method);
            mb.push_back(scb.first / static_cast<double>(scb.second));
        }
        if (ma.size() < 2) continue;
        try {
            spearman_sum += spearman(ma, mb);
            ++spearman_n;
        } catch (const DegenerateSeries&) {
            // all method means tied for this dimension; no ranking to compare
        }
    }
    if (spearman_n == 0) throw InsufficientOverlap();
    agreement.spearman_method_ranking = spearman_sum / static_cast<double>(spearman_n);
    return agreement;
}

std::string scores_to_records(const std::vector<JudgeScore>& scores) {
    std::ostringstream out;
    for (const auto& s : scores) {
        json row{{"instance_id", s.instance_id}, {"method_id", s.method_id},
                 {"dimension", to_string(s.dimension)}, {"score", s.score},
                 {"judge_id", s.judge_id},       {"temperature", s.temperature},
                 {"template_id", s.template_id}};
        out << row.dump() << "\n";
    }
    return out.str();
}

std::vector<JudgeScore> scores_from_records(const std::string& text) {
    std::vector<JudgeScore> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw MalformedRow(line_no, "not a JSON object");
        JudgeScore s;
        s.instance_id = row.at("instance_id").get<std::string>();
        s.method_id = row.at("method_id").get<std::string>();
        s.dimension = dimension_from_string(row.at("dimension").get<std::string>());
        s.score = row.at("score").get<int>();
        if (s.score < 1 || s.score > 5)
            throw MalformedRow(line_no, "score outside 1..5");
        s.judge_id = row.value("judge_id", "");
        s.temperature = row.value("temperature", 0.2);
        s.template_id = row.value("template_id", "");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace cfeval
