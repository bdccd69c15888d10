#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cfeval {

enum class Task { sentiment, nli };

Task task_from_string(const std::string& s);
std::string to_string(Task t);

// Declared label set for a task, in lexicographic order.
const std::vector<std::string>& label_set(Task t);

// Text payload of an instance or record: {"text": ...} for sentiment,
// {"premise": ..., "hypothesis": ...} for NLI.
using TextFields = std::map<std::string, std::string>;

struct Instance {
    std::string id;
    Task task = Task::sentiment;
    TextFields fields;
    std::string label;
    std::string target_label;

    bool operator==(const Instance&) const = default;
};

struct CounterfactualRecord {
    std::string instance_id;
    std::string method_id;
    int variant_index = 0;
    TextFields fields;

    bool operator==(const CounterfactualRecord&) const = default;
};

struct EvaluationUnit {
    Instance instance;
    std::vector<CounterfactualRecord> variants;  // sorted by variant_index
};

struct JoinResult {
    std::map<std::string, std::vector<EvaluationUnit>> by_method;
    // coverage summary: covered[m] + omitted[m] == |instances| for every m
    std::map<std::string, std::size_t> covered;
    std::map<std::string, std::size_t> omitted;
};

// Line-delimited JSON, one object per line. Unknown fields ignored.
std::vector<Instance> load_instances(const std::filesystem::path& path, Task task);
std::vector<CounterfactualRecord> load_records(const std::filesystem::path& path);

JoinResult join(const std::vector<Instance>& instances,
                const std::vector<CounterfactualRecord>& records);

}  // namespace cfeval
