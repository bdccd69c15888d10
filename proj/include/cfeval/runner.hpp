#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cfeval/analysis.hpp"
#include "cfeval/backends.hpp"
#include "cfeval/corpus.hpp"
#include "cfeval/generate.hpp"
#include "cfeval/judge.hpp"
#include "cfeval/metrics.hpp"

namespace cfeval {

struct EvalFlags {
    bool only_flipped_distance = true;
    bool compute_diversity = true;
    bool histogram = true;
    bool pairwise_matrix = true;
};

struct EvalConfig {
    Task task = Task::sentiment;
    std::filesystem::path instances_path;
    std::map<std::string, std::filesystem::path> method_records;
    std::map<std::string, BackendConfig> backends;  // classify, logprob, chat_judge, chat_generate
    std::vector<Dimension> judge_dimensions = all_dimensions();
    std::vector<double> judge_temperatures{0.2};
    int judge_retries_on_unparseable = 1;
    EvalFlags flags;
    std::optional<GenerationConfig> generation;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> cache_dir;

    std::filesystem::path base_dir = ".";  // config file directory; resolves relative paths
    std::string config_digest;
};

// Parses the declarative config file; relative paths resolve against the
// config file's directory. Throws ConfigError.
EvalConfig load_config(const std::filesystem::path& path);

struct BackendSet {
    std::shared_ptr<Backend> classify;
    std::shared_ptr<Backend> logprob;
    std::shared_ptr<Backend> judge;
    std::shared_ptr<Backend> generate;
};

// Instantiates the configured backends (fixture:// or HTTP), wrapping each
// in the file cache when cache_dir is set.
BackendSet make_backends(const EvalConfig& config);

struct BenchmarkReport {
    std::string task;
    std::vector<std::string> method_ids;
    std::map<std::string, MethodReport> cf;
    std::map<std::string, std::vector<InstanceMetrics>> per_instance;
    std::map<std::string, std::size_t> covered;
    std::map<std::string, std::size_t> omitted;
    std::optional<QualityReport> quality;
    std::vector<JudgeScore> scores;
    std::map<std::string, Histogram> histograms;
    std::optional<MethodDistanceMatrix> matrix;
    std::optional<double> diversity_distance_pearson;
    std::optional<JudgeAgreement> judge_agreement;
    // artifact name -> reason code for anything that could not be computed
    std::map<std::string, std::string> missing;
    std::map<std::string, std::string> metadata;
};

// Full pipeline: corpus -> metrics -> judge -> analysis. Per-instance
// backend failures degrade to missing-data counts.
BenchmarkReport run(const EvalConfig& config, const BackendSet& backends);

enum class RenderFormat { table_text, delimited, structured };
RenderFormat render_format_from_string(const std::string& s);

std::string render(const BenchmarkReport& report, RenderFormat format);
BenchmarkReport report_from_structured(const std::string& text);

// Writes report.structured, report.txt, scores.records, histograms.records,
// matrix.records and run-metadata.json under config.output_dir.
void write_outputs(const BenchmarkReport& report, const EvalConfig& config);

// Fraction of cells flagged for missing data; drives the partial exit code.
bool has_flagged_cells(const BenchmarkReport& report);

}  // namespace cfeval
