#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfeval/errors.hpp"
#include "cfeval/runner.hpp"

namespace fs = std::filesystem;
using namespace cfeval;

namespace {

EvalConfig load_and_override(const std::string& config_path,
                             const std::string& cache_dir,
                             const std::string& seed, const std::string& output_dir) {
    EvalConfig config = load_config(config_path);
    if (!cache_dir.empty()) config.cache_dir = fs::path(cache_dir);
    if (!seed.empty()) config.seed = std::stoull(seed);
    if (!output_dir.empty()) config.output_dir = fs::path(output_dir);
    return config;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_evaluate(const EvalConfig& config, const std::string& format) {
    auto backends = make_backends(config);
    BenchmarkReport report = run(config, backends);
    write_outputs(report, config);
    std::cout << render(report, render_format_from_string(format));
    return has_flagged_cells(report) ? 2 : 0;
}

int run_generate(const EvalConfig& config, const std::string& out_path) {
    if (!config.generation) throw ConfigError("config has no generation section");
    auto backends = make_backends(config);
    if (!backends.generate) throw ConfigError("config has no chat_generate backend");
    auto instances = load_instances(
        config.instances_path.is_relative() ? config.base_dir / config.instances_path
                                            : config.instances_path,
        config.task);
    GenerationConfig gen = *config.generation;
    gen.max_parallel = static_cast<std::size_t>(backends.generate->config().max_parallel);
    auto records = generate_counterfactuals(instances, *backends.generate, gen);

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write: " + out_path);
    for (const auto& r : records) {
        nlohmann::json row{{"instance_id", r.instance_id},
                           {"method_id", r.method_id},
                           {"variant_index", r.variant_index}};
        for (const auto& [k, v] : r.fields) row[k] = v;
        out << row.dump() << "\n";
    }
    std::cerr << records.size() << " records written to " << out_path << "\n";
    return 0;
}

int run_judge(const EvalConfig& config) {
    auto backends = make_backends(config);
    if (!backends.judge) throw ConfigError("config has no chat_judge backend");
    auto instances = load_instances(
        config.instances_path.is_relative() ? config.base_dir / config.instances_path
                                            : config.instances_path,
        config.task);
    std::vector<CounterfactualRecord> all_records;
    for (const auto& [method, path] : config.method_records) {
        auto recs = load_records(path.is_relative() ? config.base_dir / path : path);
        all_records.insert(all_records.end(), recs.begin(), recs.end());
    }
    auto joined = join(instances, all_records);
    std::vector<CounterfactualRecord> canonical;
    for (const auto& [method, units] : joined.by_method)
        for (const auto& unit : units) canonical.push_back(unit.variants.front());

    JudgeConfig jc;
    jc.judge_id = backends.judge->config().model_id;
    jc.temperature = config.judge_temperatures.empty() ? 0.2
                                                       : config.judge_temperatures.front();
    jc.retries_on_unparseable = config.judge_retries_on_unparseable;
    jc.dimensions = config.judge_dimensions;
    jc.max_parallel = static_cast<std::size_t>(backends.judge->config().max_parallel);
    auto [scores, quality] = judge_corpus(canonical, *backends.judge, jc);

    auto dir = config.output_dir.is_relative() ? config.base_dir / config.output_dir
                                               : config.output_dir;
    fs::create_directories(dir);
    std::ofstream out(dir / "scores.records", std::ios::binary | std::ios::trunc);
    out << scores_to_records(scores);
    for (const auto& [method, avg] : quality.average)
        std::cout << method << " average " << avg << "\n";
    return 0;
}

int run_compare_judges(const std::string& path_a, const std::string& path_b) {
    auto a = scores_from_records(slurp(path_a));
    auto b = scores_from_records(slurp(path_b));
    auto agreement = compare_judges(a, b);
    nlohmann::json j{{"pearson_per_instance", agreement.pearson_per_instance},
                     {"spearman_method_ranking", agreement.spearman_method_ranking},
                     {"method_means_a", agreement.method_means_a},
                     {"method_means_b", agreement.method_means_b}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_distance_matrix(const EvalConfig& config) {
    auto instances = load_instances(
        config.instances_path.is_relative() ? config.base_dir / config.instances_path
                                            : config.instances_path,
        config.task);
    std::vector<CounterfactualRecord> all_records;
    for (const auto& [method, path] : config.method_records) {
        auto recs = load_records(path.is_relative() ? config.base_dir / path : path);
        all_records.insert(all_records.end(), recs.begin(), recs.end());
    }
    auto joined = join(instances, all_records);
    std::map<std::string, std::map<std::string, TokenSequence>> texts;
    for (const auto& inst : instances)
        texts["original"][inst.id] = tokenize(joined_text(inst.fields));
    for (const auto& [method, units] : joined.by_method)
        for (const auto& unit : units)
            texts[method][unit.instance.id] =
                tokenize(joined_text(unit.variants.front().fields));
    auto matrix = method_distance_matrix(texts);
    nlohmann::json j{{"method_ids", matrix.method_ids}, {"matrix", matrix.matrix}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_report(const std::string& input, const std::string& format) {
    auto report = report_from_structured(slurp(input));
    std::cout << render(report, render_format_from_string(format));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual text generation benchmark"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path, cache_dir, seed, output_dir, format = "table-text";
    app.add_option("--config", config_path, "Path to the declarative config file");
    app.add_option("--cache-dir", cache_dir, "Override the response cache directory");
    app.add_option("--seed", seed, "Override the random seed");
    app.add_option("--output-dir", output_dir, "Override the output directory");
    app.add_option("--format", format, "Output format: table-text, delimited, structured");

    auto* evaluate = app.add_subcommand("evaluate", "Run the full benchmark");
    auto* generate = app.add_subcommand("generate", "Prompt-based baseline -> record file");
    std::string generate_out = "generated.records";
    generate->add_option("--out", generate_out, "Record file to write");
    auto* judge = app.add_subcommand("judge", "Text quality scores only");
    auto* compare = app.add_subcommand("compare-judges", "Agreement between two score files");
    std::string scores_a, scores_b;
    compare->add_option("--scores-a", scores_a)->required();
    compare->add_option("--scores-b", scores_b)->required();
    auto* matrix = app.add_subcommand("distance-matrix", "Pairwise method distance matrix");
    auto* report = app.add_subcommand("report", "Re-render a stored report");
    std::string report_input;
    report->add_option("--input", report_input, "Path to report.structured")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (compare->parsed()) return run_compare_judges(scores_a, scores_b);
        if (report->parsed()) return run_report(report_input, format);
        if (config_path.empty()) throw ConfigError("--config is required");
        EvalConfig config = load_and_override(config_path, cache_dir, seed, output_dir);
        if (evaluate->parsed()) return run_evaluate(config, format);
        if (generate->parsed()) return run_generate(config, generate_out);
        if (judge->parsed()) return run_judge(config);
        if (matrix->parsed()) return run_distance_matrix(config);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Transport& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
