#include "cfeval/runner.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <iterator>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfeval/digest.hpp"
#include "cfeval/errors.hpp"
#include "cfeval/textdist.hpp"

namespace cfeval {

using json = nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& p,
                              const std::filesystem::path& base) {
    return p.is_relative() ? base / p : p;
}

BackendConfig backend_from_json(const json& j, BackendKind kind) {
    BackendConfig c;
    c.kind = kind;
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model_id = j.value("model_id", "");
    c.timeout_s = j.value("timeout_s", 30.0);
    c.max_parallel = j.value("max_parallel", 1);
    c.retries = j.value("retries", 0);
    c.backoff_ms = j.value("backoff_ms", 1000);
    return c;
}

TextFields fields_from_json(const json& j) {
    TextFields f;
    for (const auto& [k, v] : j.items()) f[k] = v.get<std::string>();
    return f;
}

}  // namespace

EvalConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config is not a JSON object");

    EvalConfig c;
    c.base_dir = path.has_parent_path() ? path.parent_path() : ".";
    c.config_digest = hex_digest(j.dump());
    try {
        c.task = task_from_string(j.at("task").get<std::string>());
        c.instances_path = j.at("instances_path").get<std::string>();
        if (j.contains("method_records"))
            for (const auto& [method, p] : j.at("method_records").items())
                c.method_records[method] = p.get<std::string>();
        const auto& backends = j.at("backends");
        for (const auto& [key, bj] : backends.items()) {
            BackendKind kind;
            if (key == "classify") kind = BackendKind::classify;
            else if (key == "logprob") kind = BackendKind::logprob;
            else if (key == "chat_judge" || key == "chat_generate") kind = BackendKind::chat;
            else throw ConfigError("unknown backend key: " + key);
            c.backends[key] = backend_from_json(bj, kind);
        }
        if (j.contains("judge_dimensions")) {
            c.judge_dimensions.clear();
            for (const auto& d : j.at("judge_dimensions"))
                c.judge_dimensions.push_back(dimension_from_string(d.get<std::string>()));
        }
        if (j.contains("judge_temperatures"))
            c.judge_temperatures = j.at("judge_temperatures").get<std::vector<double>>();
        c.judge_retries_on_unparseable = j.value("judge_retries_on_unparseable", 1);
        if (j.contains("flags")) {
            const auto& f = j.at("flags");
            c.flags.only_flipped_distance = f.value("only_flipped_distance", true);
            c.flags.compute_diversity = f.value("compute_diversity", true);
            c.flags.histogram = f.value("histogram", true);
            c.flags.pairwise_matrix = f.value("pairwise_matrix", true);
        }
        if (j.contains("generation")) {
            const auto& g = j.at("generation");
            GenerationConfig gen;
            gen.temperature = g.value("temperature", 1.0);
            gen.k_variants = g.value("k_variants", 1);
            gen.method_id = g.value("method_id", "llm");
            gen.template_id = g.value("template_id", "gen-v1");
            const auto& ex = g.at("exemplar");
            gen.exemplar.original = fields_from_json(ex.at("original"));
            gen.exemplar.counterfactual = fields_from_json(ex.at("counterfactual"));
            gen.exemplar.label = ex.at("label").get<std::string>();
            gen.exemplar.target_label = ex.at("target_label").get<std::string>();
            c.generation = std::move(gen);
        }
        c.output_dir = j.value("output_dir", "out");
        c.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("cache_dir") && !j.at("cache_dir").is_null())
            c.cache_dir = std::filesystem::path(j.at("cache_dir").get<std::string>());
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    }

    if (!std::filesystem::exists(resolve(c.instances_path, c.base_dir)))
        throw ConfigError("instances_path does not exist: " + c.instances_path.string());
    for (const auto& [method, p] : c.method_records)
        if (!std::filesystem::exists(resolve(p, c.base_dir)))
            throw ConfigError("record path for " + method + " does not exist: " + p.string());
    return c;
}

BackendSet make_backends(const EvalConfig& config) {
    std::optional<std::filesystem::path> cache;
    if (config.cache_dir) cache = resolve(*config.cache_dir, config.base_dir);
    auto build = [&](const char* key) -> std::shared_ptr<Backend> {
        auto it = config.backends.find(key);
        if (it == config.backends.end()) return nullptr;
        std::optional<std::filesystem::path> backend_cache;
        if (cache) backend_cache = *cache / key;
        auto b = make_backend(it->second, backend_cache, config.base_dir);
        b->seed_jitter(config.seed ^ fnv1a64(key));
        return b;
    };
    return {build("classify"), build("logprob"), build("chat_judge"), build("chat_generate")};
}

BenchmarkReport run(const EvalConfig& config, const BackendSet& backends) {
    if (config.method_records.empty())
        throw ConfigError("at least one method is required");
    if (!backends.classify || !backends.logprob)
        throw ConfigError("classify and logprob backends are required");

    auto instances = load_instances(resolve(config.instances_path, config.base_dir),
                                    config.task);
    std::vector<CounterfactualRecord> all_records;
    for (const auto& [method, path] : config.method_records) {
        auto recs = load_records(resolve(path, config.base_dir));
        for (const auto& r : recs)
            if (r.method_id != method)
                throw ConfigError("file for method " + method +
                                  " contains records for method " + r.method_id);
        all_records.insert(all_records.end(), std::make_move_iterator(recs.begin()),
                           std::make_move_iterator(recs.end()));
    }
    auto joined = join(instances, all_records);

    BenchmarkReport report;
    report.task = to_string(config.task);
    report.covered = joined.covered;
    report.omitted = joined.omitted;
    for (const auto& [method, _] : joined.by_method) report.method_ids.push_back(method);

    EvalOptions options;
    options.only_flipped_distance = config.flags.only_flipped_distance;
    options.compute_diversity = config.flags.compute_diversity;
    options.max_parallel =
        static_cast<std::size_t>(backends.classify->config().max_parallel);

    for (const auto& method : report.method_ids) {
        auto eval = evaluate_method(method, joined.by_method.at(method),
                                    *backends.classify, *backends.logprob, options);
        if (config.flags.histogram) {
            std::vector<double> values;
            values.reserve(eval.per_instance.size());
            for (const auto& m : eval.per_instance) values.push_back(m.p_target_cf);
            report.histograms[method] = probability_histogram(values);
        }
        report.cf[method] = std::move(eval.report);
        report.per_instance[method] = std::move(eval.per_instance);
    }

    // text quality judging over canonical (variant 0) counterfactuals
    if (backends.judge && !config.judge_temperatures.empty()) {
        std::vector<CounterfactualRecord> canonical;
        for (const auto& method : report.method_ids)
            for (const auto& unit : joined.by_method.at(method))
                canonical.push_back(unit.variants.front());

        JudgeConfig jc;
        jc.judge_id = backends.judge->config().model_id;
        jc.temperature = config.judge_temperatures.front();
        jc.retries_on_unparseable = config.judge_retries_on_unparseable;
        jc.dimensions = config.judge_dimensions;
        jc.max_parallel = static_cast<std::size_t>(backends.judge->config().max_parallel);

        auto [scores, quality] = judge_corpus(canonical, *backends.judge, jc);
        report.quality = std::move(quality);
        report.scores = std::move(scores);
        report.metadata["judge_template_id"] = jc.template_id;

        if (config.judge_temperatures.size() >= 2) {
            JudgeConfig jc2 = jc;
            jc2.temperature = config.judge_temperatures[1];
            auto [scores_b, quality_b] = judge_corpus(canonical, *backends.judge, jc2);
            try {
                report.judge_agreement = compare_judges(report.scores, scores_b);
            } catch (const Error&) {
                report.missing["judge_agreement"] = "insufficient-overlap";
            }
            report.scores.insert(report.scores.end(),
                                 std::make_move_iterator(scores_b.begin()),
                                 std::make_move_iterator(scores_b.end()));
        } else {
            report.missing["judge_agreement"] = "single-judge-configuration";
        }
    } else {
        report.missing["quality"] = "no-judge-backend";
        report.missing["judge_agreement"] = "no-judge-backend";
    }

    if (config.flags.pairwise_matrix) {
        std::map<std::string, std::map<std::string, TokenSequence>> texts;
        for (const auto& inst : instances)
            texts["original"][inst.id] = tokenize(joined_text(inst.fields));
        for (const auto& method : report.method_ids)
            for (const auto& unit : joined.by_method.at(method))
                texts[method][unit.instance.id] =
                    tokenize(joined_text(unit.variants.front().fields));
        try {
            report.matrix = method_distance_matrix(texts);
        } catch (const NoOverlap&) {
            report.missing["matrix"] = "no-shared-instances";
        }
    }

    // diversity-distance coupling over per-instance values, pooled
    {
        std::vector<double> div, dist;
        for (const auto& method : report.method_ids)
            for (const auto& m : report.per_instance.at(method)) {
                if (!m.diversity) continue;
                div.push_back(*m.diversity);
                dist.push_back(static_cast<double>(m.token_distance));
            }
        if (div.size() < 2) {
            report.missing["diversity_distance_pearson"] = "insufficient-data";
        } else {
            try {
                report.diversity_distance_pearson = pearson(div, dist);
            } catch (const DegenerateSeries&) {
                report.missing["diversity_distance_pearson"] = "degenerate-series";
            }
        }
    }

    report.metadata["config_digest"] = config.config_digest;
    report.metadata["seed"] = std::to_string(config.seed);
    report.metadata["classify_model"] = backends.classify->config().model_id;
    report.metadata["logprob_model"] = backends.logprob->config().model_id;
    if (backends.judge) report.metadata["judge_model"] = backends.judge->config().model_id;
    return report;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

json optional_to_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

json method_report_to_json(const MethodReport& r) {
    return {{"method_id", r.method_id},
            {"n", r.n},
            {"flip_rate", r.flip_rate},
            {"target_flip_rate", r.target_flip_rate},
            {"delta_p_mean", r.delta_p_mean},
            {"perplexity_mean", r.perplexity_mean},
            {"distance_mean", optional_to_json(r.distance_mean)},
            {"diversity_mean", optional_to_json(r.diversity_mean)},
            {"missing", r.missing},
            {"missing_reasons", r.missing_reasons}};
}

MethodReport method_report_from_json(const json& j) {
    MethodReport r;
    r.method_id = j.at("method_id").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.flip_rate = j.at("flip_rate").get<double>();
    r.target_flip_rate = j.at("target_flip_rate").get<double>();
    r.delta_p_mean = j.at("delta_p_mean").get<double>();
    r.perplexity_mean = j.at("perplexity_mean").get<double>();
    r.distance_mean = optional_from_json(j.at("distance_mean"));
    r.diversity_mean = optional_from_json(j.at("diversity_mean"));
    r.missing = j.at("missing").get<std::size_t>();
    r.missing_reasons = j.at("missing_reasons").get<std::map<std::string, std::size_t>>();
    return r;
}

json instance_metrics_to_json(const InstanceMetrics& m) {
    return {{"instance_id", m.instance_id},
            {"method_id", m.method_id},
            {"flipped", m.flipped},
            {"reached_target", m.reached_target},
            {"delta_p", m.delta_p},
            {"p_target_orig", m.p_target_orig},
            {"p_target_cf", m.p_target_cf},
            {"predicted_orig", m.predicted_orig},
            {"predicted_cf", m.predicted_cf},
            {"token_distance", m.token_distance},
            {"perplexity", m.perplexity},
            {"diversity", optional_to_json(m.diversity)}};
}

InstanceMetrics instance_metrics_from_json(const json& j) {
    InstanceMetrics m;
    m.instance_id = j.at("instance_id").get<std::string>();
    m.method_id = j.at("method_id").get<std::string>();
    m.flipped = j.at("flipped").get<bool>();
    m.reached_target = j.at("reached_target").get<bool>();
    m.delta_p = j.at("delta_p").get<double>();
    m.p_target_orig = j.at("p_target_orig").get<double>();
    m.p_target_cf = j.at("p_target_cf").get<double>();
    m.predicted_orig = j.at("predicted_orig").get<std::string>();
    m.predicted_cf = j.at("predicted_cf").get<std::string>();
    m.token_distance = j.at("token_distance").get<std::size_t>();
    m.perplexity = j.at("perplexity").get<double>();
    m.diversity = optional_from_json(j.at("diversity"));
    return m;
}

json score_to_json(const JudgeScore& s) {
    return {{"instance_id", s.instance_id}, {"method_id", s.method_id},
            {"dimension", to_string(s.dimension)}, {"score", s.score},
            {"judge_id", s.judge_id},       {"temperature", s.temperature},
            {"raw_response", s.raw_response}, {"template_id", s.template_id}};
}

JudgeScore score_from_json(const json& j) {
    JudgeScore s;
    s.instance_id = j.at("instance_id").get<std::string>();
    s.method_id = j.at("method_id").get<std::string>();
    s.dimension = dimension_from_string(j.at("dimension").get<std::string>());
    s.score = j.at("score").get<int>();
    s.judge_id = j.at("judge_id").get<std::string>();
    s.temperature = j.at("temperature").get<double>();
    s.raw_response = j.at("raw_response").get<std::string>();
    s.template_id = j.at("template_id").get<std::string>();
    return s;
}

json histogram_to_json(const Histogram& h) {
    return {{"bin_edges", h.bin_edges}, {"counts", h.counts}, {"total", h.total}};
}

Histogram histogram_from_json(const json& j) {
    Histogram h;
    auto edges = j.at("bin_edges").get<std::vector<double>>();
    auto counts = j.at("counts").get<std::vector<std::size_t>>();
    std::copy(edges.begin(), edges.end(), h.bin_edges.begin());
    std::copy(counts.begin(), counts.end(), h.counts.begin());
    h.total = j.at("total").get<std::size_t>();
    return h;
}

json report_to_json(const BenchmarkReport& r) {
    json j;
    j["task"] = r.task;
    j["method_ids"] = r.method_ids;
    json cf = json::object();
    for (const auto& [m, rep] : r.cf) cf[m] = method_report_to_json(rep);
    j["cf"] = std::move(cf);
    json pi = json::object();
    for (const auto& [m, list] : r.per_instance) {
        json arr = json::array();
        for (const auto& im : list) arr.push_back(instance_metrics_to_json(im));
        pi[m] = std::move(arr);
    }
    j["per_instance"] = std::move(pi);
    j["coverage"] = {{"covered", r.covered}, {"omitted", r.omitted}};
    if (r.quality) {
        j["quality"] = {{"means", r.quality->means},
                        {"average", r.quality->average},
                        {"missing_rate", r.quality->missing_rate}};
    } else {
        j["quality"] = nullptr;
    }
    json scores = json::array();
    for (const auto& s : r.scores) scores.push_back(score_to_json(s));
    j["scores"] = std::move(scores);
    json hist = json::object();
    for (const auto& [m, h] : r.histograms) hist[m] = histogram_to_json(h);
    j["histograms"] = std::move(hist);
    if (r.matrix) {
        j["matrix"] = {{"method_ids", r.matrix->method_ids}, {"matrix", r.matrix->matrix}};
    } else {
        j["matrix"] = nullptr;
    }
    j["diversity_distance_pearson"] = optional_to_json(r.diversity_distance_pearson);
    if (r.judge_agreement) {
        j["judge_agreement"] = {
            {"pearson_per_instance", r.judge_agreement->pearson_per_instance},
            {"spearman_method_ranking", r.judge_agreement->spearman_method_ranking},
            {"method_means_a", r.judge_agreement->method_means_a},
            {"method_means_b", r.judge_agreement->method_means_b}};
    } else {
        j["judge_agreement"] = nullptr;
    }
    j["missing"] = r.missing;
    j["metadata"] = r.metadata;
    return j;
}

BenchmarkReport report_from_json(const json& j) {
    BenchmarkReport r;
    r.task = j.at("task").get<std::string>();
    r.method_ids = j.at("method_ids").get<std::vector<std::string>>();
    for (const auto& [m, rep] : j.at("cf").items())
        r.cf[m] = method_report_from_json(rep);
    for (const auto& [m, list] : j.at("per_instance").items()) {
        auto& vec = r.per_instance[m];
        for (const auto& im : list) vec.push_back(instance_metrics_from_json(im));
    }
    r.covered = j.at("coverage").at("covered").get<std::map<std::string, std::size_t>>();
    r.omitted = j.at("coverage").at("omitted").get<std::map<std::string, std::size_t>>();
    if (!j.at("quality").is_null()) {
        QualityReport q;
        q.means = j.at("quality").at("means")
                      .get<std::map<std::string, std::map<std::string, double>>>();
        q.average = j.at("quality").at("average").get<std::map<std::string, double>>();
        q.missing_rate =
            j.at("quality").at("missing_rate").get<std::map<std::string, double>>();
        r.quality = std::move(q);
    }
    for (const auto& s : j.at("scores")) r.scores.push_back(score_from_json(s));
    for (const auto& [m, h] : j.at("histograms").items())
        r.histograms[m] = histogram_from_json(h);
    if (!j.at("matrix").is_null()) {
        MethodDistanceMatrix mx;
        mx.method_ids = j.at("matrix").at("method_ids").get<std::vector<std::string>>();
        mx.matrix = j.at("matrix").at("matrix").get<std::vector<std::vector<double>>>();
        r.matrix = std::move(mx);
    }
    r.diversity_distance_pearson = optional_from_json(j.at("diversity_distance_pearson"));
    if (!j.at("judge_agreement").is_null()) {
        const auto& a = j.at("judge_agreement");
        JudgeAgreement agreement;
        agreement.pearson_per_instance = a.at("pearson_per_instance").get<double>();
        agreement.spearman_method_ranking = a.at("spearman_method_ranking").get<double>();
        agreement.method_means_a =
            a.at("method_means_a").get<std::map<std::string, double>>();
        agreement.method_means_b =
            a.at("method_means_b").get<std::map<std::string, double>>();
        r.judge_agreement = std::move(agreement);
    }
    r.missing = j.at("missing").get<std::map<std::string, std::string>>();
    r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return r;
}

std::string format_cell(const std::optional<double>& v) {
    if (!v) return "--";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return buf;
}

bool method_flagged(const BenchmarkReport& r, const std::string& method) {
    const auto& rep = r.cf.at(method);
    std::size_t total = rep.n + rep.missing;
    if (total > 0 && static_cast<double>(rep.missing) / total > 0.2) return true;
    if (r.quality) {
        auto it = r.quality->missing_rate.find(method);
        if (it != r.quality->missing_rate.end() && it->second > 0.2) return true;
    }
    return false;
}

std::string render_table(const BenchmarkReport& r) {
    struct Row {
        std::string label;
        std::vector<std::string> cells;
    };
    std::vector<Row> rows;
    auto quality_cell = [&](const std::string& method,
                            const std::string& dim) -> std::optional<double> {
        if (!r.quality) return std::nullopt;
        auto mit = r.quality->means.find(method);
        if (mit == r.quality->means.end()) return std::nullopt;
        auto dit = mit->second.find(dim);
        if (dit == mit->second.end()) return std::nullopt;
        return dit->second;
    };
    auto add = [&](const std::string& label,
                   auto get) {
        Row row{label, {}};
        for (const auto& m : r.method_ids) row.cells.push_back(format_cell(get(m)));
        rows.push_back(std::move(row));
    };
    add("Flip Rate ↑", [&](const std::string& m) -> std::optional<double> {
        return r.cf.at(m).flip_rate;
    });
    add("Target Flip Rate ↑", [&](const std::string& m) -> std::optional<double> {
        return r.cf.at(m).target_flip_rate;
    });
    add("Delta P ↑", [&](const std::string& m) -> std::optional<double> {
        return r.cf.at(m).delta_p_mean;
    });
    add("Perplexity ↓", [&](const std::string& m) -> std::optional<double> {
        return r.cf.at(m).perplexity_mean;
    });
    add("Distance ↓", [&](const std::string& m) -> std::optional<double> {
        return r.cf.at(m).distance_mean;
    });
    add("Diversity ↑", [&](const std::string& m) -> std::optional<double> {
        return r.cf.at(m).diversity_mean;
    });
    for (const char* dim : {"grammar", "cohesiveness", "fluency"}) {
        std::string label(dim);
        label[0] = static_cast<char>(std::toupper(label[0]));
        add(label + " ↑", [&](const std::string& m) { return quality_cell(m, dim); });
    }
    add("Average ↑", [&](const std::string& m) -> std::optional<double> {
        if (!r.quality) return std::nullopt;
        auto it = r.quality->average.find(m);
        if (it == r.quality->average.end()) return std::nullopt;
        return it->second;
    });

    std::vector<std::string> headers;
    bool any_flag = false;
    for (const auto& m : r.method_ids) {
        bool flagged = method_flagged(r, m);
        any_flag |= flagged;
        headers.push_back(flagged ? m + "!" : m);
    }

    std::size_t label_w = 0;
    for (const auto& row : rows) label_w = std::max(label_w, row.label.size());
    std::vector<std::size_t> col_w(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        col_w[c] = headers[c].size();
        for (const auto& row : rows) col_w[c] = std::max(col_w[c], row.cells[c].size());
    }

    std::ostringstream out;
    out << "cfeval report  task=" << r.task
        << "  config=" << (r.metadata.count("config_digest")
                               ? r.metadata.at("config_digest")
                               : "-")
        << "\n\n";
    // the arrows occupy 3 bytes but render 1 column wide; pad accordingly
    auto pad = [](const std::string& s, std::size_t w) {
        std::size_t display = s.size();
        for (std::size_t i = 0; i < s.size(); ++i)
            if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) --display;
        return s + std::string(display < w ? w - display : 0, ' ');
    };
    out << pad("Metric", label_w + 2);
    for (std::size_t c = 0; c < headers.size(); ++c)
        out << "  " << pad(headers[c], col_w[c]);
    out << "\n";
    for (const auto& row : rows) {
        out << pad(row.label, label_w + 2);
        for (std::size_t c = 0; c < row.cells.size(); ++c) {
            const auto& cell = row.cells[c];
            out << "  " << std::string(col_w[c] - std::min(col_w[c], cell.size()), ' ')
                << cell;
        }
        out << "\n";
    }
    out << "\n";
    out << "coverage:";
    for (const auto& m : r.method_ids)
        out << " " << m << " " << r.covered.at(m) << "/"
            << (r.covered.at(m) + r.omitted.at(m));
    out << "\n";
    if (r.diversity_distance_pearson)
        out << "diversity-distance pearson: "
            << format_cell(r.diversity_distance_pearson) << "\n";
    if (r.judge_agreement)
        out << "judge agreement: pearson="
            << format_cell(r.judge_agreement->pearson_per_instance)
            << " spearman=" << format_cell(r.judge_agreement->spearman_method_ranking)
            << "\n";
    for (const auto& [artifact, reason] : r.missing)
        out << "missing: " << artifact << " (" << reason << ")\n";
    if (any_flag) out << "! method has > 20% missing instances\n";
    return out.str();
}

std::string render_delimited(const BenchmarkReport& r) {
    std::ostringstream out;
    out << "method,metric,value\n";
    for (const auto& m : r.method_ids) {
        const auto& rep = r.cf.at(m);
        auto emit = [&](const char* metric, const std::optional<double>& v) {
            out << m << "," << metric << ",";
            if (v) out << *v;
            out << "\n";
        };
        emit("flip_rate", rep.flip_rate);
        emit("target_flip_rate", rep.target_flip_rate);
        emit("delta_p_mean", rep.delta_p_mean);
        emit("perplexity_mean", rep.perplexity_mean);
        emit("distance_mean", rep.distance_mean);
        emit("diversity_mean", rep.diversity_mean);
        for (const char* dim : {"grammar", "cohesiveness", "fluency"}) {
            std::optional<double> v;
            if (r.quality) {
                auto mit = r.quality->means.find(m);
                if (mit != r.quality->means.end()) {
                    auto dit = mit->second.find(dim);
                    if (dit != mit->second.end()) v = dit->second;
                }
            }
            emit(dim, v);
        }
        std::optional<double> avg;
        if (r.quality) {
            auto it = r.quality->average.find(m);
            if (it != r.quality->average.end()) avg = it->second;
        }
        emit("quality_average", avg);
    }
    return out.str();
}

}  // namespace

RenderFormat render_format_from_string(const std::string& s) {
    if (s == "table-text") return RenderFormat::table_text;
    if (s == "delimited") return RenderFormat::delimited;
    if (s == "structured") return RenderFormat::structured;
    throw UnknownFormat(s);
}

std::string render(const BenchmarkReport& report, RenderFormat format) {
    switch (format) {
        case RenderFormat::structured: return report_to_json(report).dump(2) + "\n";
        case RenderFormat::delimited: return render_delimited(report);
        default: return render_table(report);
    }
}

BenchmarkReport report_from_structured(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error("report is not valid JSON");
    return report_from_json(j);
}

bool has_flagged_cells(const BenchmarkReport& report) {
    for (const auto& m : report.method_ids)
        if (method_flagged(report, m)) return true;
    return false;
}

void write_outputs(const BenchmarkReport& report, const EvalConfig& config) {
    auto dir = resolve(config.output_dir, config.base_dir);
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw Error(std::string("cannot write output file: ") + name);
    };
    write("report.structured", render(report, RenderFormat::structured));
    write("report.txt", render(report, RenderFormat::table_text));
    write("scores.records", scores_to_records(report.scores));
    {
        std::ostringstream os;
        for (const auto& [method, h] : report.histograms) {
            json row = histogram_to_json(h);
            row["method"] = method;
            os << row.dump() << "\n";
        }
        write("histograms.records", os.str());
    }
    {
        std::ostringstream os;
        if (report.matrix) {
            json row{{"method_ids", report.matrix->method_ids},
                     {"matrix", report.matrix->matrix}};
            os << row.dump() << "\n";
        }
        write("matrix.records", os.str());
    }
    {
        // wall-clock timestamp lives here only, keeping report files
        // byte-identical across reruns
        std::time_t now = std::time(nullptr);
        char ts[32];
        std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        json meta{{"config_digest", config.config_digest},
                  {"seed", config.seed},
                  {"timestamp", ts}};
        write("run-metadata.json", meta.dump(2) + "\n");
    }
}

}  // namespace cfeval
