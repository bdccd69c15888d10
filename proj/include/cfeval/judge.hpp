#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cfeval/backends.hpp"
#include "cfeval/corpus.hpp"

namespace cfeval {

enum class Dimension { fluency, cohesiveness, grammar };

Dimension dimension_from_string(const std::string& s);
std::string to_string(Dimension d);
const std::string& dimension_definition(Dimension d);
const std::vector<Dimension>& all_dimensions();

struct JudgeScore {
    std::string instance_id;
    std::string method_id;
    Dimension dimension = Dimension::fluency;
    int score = 0;  // 1..5
    std::string judge_id;
    double temperature = 0.2;
    std::string raw_response;
    std::string template_id;

    bool operator==(const JudgeScore&) const = default;
};

struct JudgeConfig {
    std::string judge_id;
    double temperature = 0.2;
    int retries_on_unparseable = 1;
    std::string template_id = "judge-v1";
    std::vector<Dimension> dimensions = all_dimensions();
    std::size_t max_parallel = 1;
};

struct QualityReport {
    // method -> dimension name -> mean score (only methods/dims with scores)
    std::map<std::string, std::map<std::string, double>> means;
    std::map<std::string, double> average;       // mean of the dimension means
    std::map<std::string, double> missing_rate;  // fraction of unscored requests
};

struct JudgeAgreement {
    double pearson_per_instance = 0.0;
    double spearman_method_ranking = 0.0;
    std::map<std::string, double> method_means_a;
    std::map<std::string, double> method_means_b;
};

// System + user message pair asking for exactly "Score: <1-5>".
std::vector<Message> build_judge_prompt(const TextFields& fields, Dimension dimension);

// First integer 1..5 after "Score:", else the first standalone 1..5.
int parse_score(const std::string& response);

std::pair<std::vector<JudgeScore>, QualityReport> judge_corpus(
    const std::vector<CounterfactualRecord>& records, Backend& backend,
    const JudgeConfig& config);

JudgeAgreement compare_judges(const std::vector<JudgeScore>& scores_a,
                              const std::vector<JudgeScore>& scores_b);

// Line-delimited score export / import.
std::string scores_to_records(const std::vector<JudgeScore>& scores);
std::vector<JudgeScore> scores_from_records(const std::string& text);

}  // namespace cfeval
