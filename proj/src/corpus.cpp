#include "cfeval/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "cfeval/errors.hpp"

namespace cfeval {

using json = nlohmann::json;

Task task_from_string(const std::string& s) {
    if (s == "sentiment") return Task::sentiment;
    if (s == "nli") return Task::nli;
    throw Error("unknown task: " + s);
}

std::string to_string(Task t) {
    return t == Task::sentiment ? "sentiment" : "nli";
}

const std::vector<std::string>& label_set(Task t) {
    static const std::vector<std::string> sentiment{"negative", "positive"};
    static const std::vector<std::string> nli{"contradiction", "entailment", "neutral"};
    return t == Task::sentiment ? sentiment : nli;
}

namespace {

std::string require_string(const json& row, const char* key, std::size_t line_no) {
    auto it = row.find(key);
    if (it == row.end() || it->is_null())
        throw MalformedRow(line_no, std::string("missing field \"") + key + "\"");
    if (!it->is_string())
        throw MalformedRow(line_no, std::string("field \"") + key + "\" is not a string");
    return it->get<std::string>();
}

bool has_value(const json& row, const char* key) {
    auto it = row.find(key);
    return it != row.end() && it->is_string();
}

// Extracts the text payload and checks its shape against the task.
TextFields read_fields(const json& row, Task task, std::size_t line_no) {
    TextFields fields;
    if (task == Task::sentiment) {
        if (!has_value(row, "text"))
            throw MalformedRow(line_no, "sentiment row requires \"text\"");
        if (has_value(row, "premise") || has_value(row, "hypothesis"))
            throw MalformedRow(line_no, "sentiment row must not carry premise/hypothesis");
        fields["text"] = row.at("text").get<std::string>();
    } else {
        if (!has_value(row, "premise") || !has_value(row, "hypothesis"))
            throw MalformedRow(line_no, "nli row requires \"premise\" and \"hypothesis\"");
        if (has_value(row, "text"))
            throw MalformedRow(line_no, "nli row must not carry \"text\"");
        fields["premise"] = row.at("premise").get<std::string>();
        fields["hypothesis"] = row.at("hypothesis").get<std::string>();
    }
    return fields;
}

json parse_line(const std::string& line, std::size_t line_no) {
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object())
        throw MalformedRow(line_no, "not a JSON object");
    return row;
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        fn(line, line_no);
    }
}

}  // namespace

std::vector<Instance> load_instances(const std::filesystem::path& path, Task task) {
    std::vector<Instance> out;
    std::unordered_set<std::string> seen;
    const auto& labels = label_set(task);
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        json row = parse_line(line, line_no);
        Instance inst;
        inst.id = require_string(row, "id", line_no);
        std::string row_task = require_string(row, "task", line_no);
        if (row_task != to_string(task))
            throw MalformedRow(line_no, "task \"" + row_task + "\" does not match dataset task");
        inst.task = task;
        inst.fields = read_fields(row, task, line_no);
        inst.label = require_string(row, "label", line_no);
        inst.target_label = require_string(row, "target_label", line_no);
        if (std::find(labels.begin(), labels.end(), inst.label) == labels.end())
            throw MalformedRow(line_no, "label \"" + inst.label + "\" not in task label set");
        if (std::find(labels.begin(), labels.end(), inst.target_label) == labels.end())
            throw MalformedRow(line_no, "target_label \"" + inst.target_label + "\" not in task label set");
        if (inst.label == inst.target_label)
            throw MalformedRow(line_no, "label equals target_label");
        if (!seen.insert(inst.id).second) throw DuplicateId(inst.id);
        out.push_back(std::move(inst));
    });
    return out;
}

std::vector<CounterfactualRecord> load_records(const std::filesystem::path& path) {
    std::vector<CounterfactualRecord> out;
    std::set<std::tuple<std::string, std::string, int>> seen;
    for_each_line(path, [&](const std::string& line, std::size_t line_no) {
        json row = parse_line(line, line_no);
        CounterfactualRecord rec;
        rec.instance_id = require_string(row, "instance_id", line_no);
        rec.method_id = require_string(row, "method_id", line_no);
        auto vi = row.find("variant_index");
        if (vi == row.end() || !vi->is_number_integer())
            throw MalformedRow(line_no, "missing or non-integer variant_index");
        rec.variant_index = vi->get<int>();
        if (rec.variant_index < 0) throw NegativeVariantIndex(line_no);
        // shape is validated against the instance's task at join time
        if (has_value(row, "text")) {
            rec.fields["text"] = row.at("text").get<std::string>();
        } else if (has_value(row, "premise") && has_value(row, "hypothesis")) {
            rec.fields["premise"] = row.at("premise").get<std::string>();
            rec.fields["hypothesis"] = row.at("hypothesis").get<std::string>();
        } else {
            throw MalformedRow(line_no, "record requires \"text\" or premise+hypothesis");
        }
        if (!seen.insert({rec.instance_id, rec.method_id, rec.variant_index}).second)
            throw MalformedRow(line_no, "duplicate (instance_id, method_id, variant_index)");
        out.push_back(std::move(rec));
    });
    return out;
}

JoinResult join(const std::vector<Instance>& instances,
                const std::vector<CounterfactualRecord>& records) {
    std::unordered_map<std::string, const Instance*> by_id;
    for (const auto& inst : instances) by_id[inst.id] = &inst;

    // method -> instance_id -> variants
    std::map<std::string, std::map<std::string, std::vector<CounterfactualRecord>>> grouped;
    for (const auto& rec : records) {
        auto it = by_id.find(rec.instance_id);
        if (it == by_id.end()) throw OrphanRecord(rec.instance_id);
        const Instance& inst = *it->second;
        bool sentiment_shape = rec.fields.count("text") > 0;
        if (sentiment_shape != (inst.task == Task::sentiment))
            throw Error("record for instance " + rec.instance_id +
                        " does not match the instance's task shape");
        grouped[rec.method_id][rec.instance_id].push_back(rec);
    }

    JoinResult result;
    for (auto& [method, per_instance] : grouped) {
        auto& units = result.by_method[method];
        // preserve dataset order
        for (const auto& inst : instances) {
            auto it = per_instance.find(inst.id);
            if (it == per_instance.end()) continue;
            EvaluationUnit unit;
            unit.instance = inst;
            unit.variants = std::move(it->second);
            std::sort(unit.variants.begin(), unit.variants.end(),
                      [](const auto& a, const auto& b) { return a.variant_index < b.variant_index; });
            units.push_back(std::move(unit));
        }
        result.covered[method] = units.size();
        result.omitted[method] = instances.size() - units.size();
    }
    return result;
}

}  // namespace cfeval
