#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cfeval/corpus.hpp"
#include "cfeval/errors.hpp"

using namespace cfeval;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    auto path = fs::temp_directory_path() / ("cfeval_corpus_" + name);
    std::ofstream out(path, std::ios::trunc);
    out << content;
    return path;
}

const char* kTwoInstances =
    R"({"id":"a","task":"sentiment","text":"good film","label":"positive","target_label":"negative"}
{"id":"b","task":"sentiment","text":"bad film","label":"negative","target_label":"positive"}
)";

}  // namespace

TEST_CASE("load_instances keeps file order") {
    auto path = write_temp("two.jsonl", kTwoInstances);
    auto instances = load_instances(path, Task::sentiment);
    REQUIRE(instances.size() == 2);
    CHECK(instances[0].id == "a");
    CHECK(instances[1].id == "b");
    CHECK(instances[0].fields.at("text") == "good film");
}

TEST_CASE("load_instances rejects duplicate ids") {
    auto path = write_temp("dup.jsonl",
        R"({"id":"a","task":"sentiment","text":"x","label":"positive","target_label":"negative"}
{"id":"a","task":"sentiment","text":"y","label":"negative","target_label":"positive"}
)");
    CHECK_THROWS_AS(load_instances(path, Task::sentiment), DuplicateId);
}

TEST_CASE("load_instances validates labels and shape") {
    auto eq = write_temp("eq.jsonl",
        R"({"id":"a","task":"sentiment","text":"x","label":"positive","target_label":"positive"})");
    CHECK_THROWS_AS(load_instances(eq, Task::sentiment), MalformedRow);

    auto unknown = write_temp("lbl.jsonl",
        R"({"id":"a","task":"sentiment","text":"x","label":"pos","target_label":"negative"})");
    CHECK_THROWS_AS(load_instances(unknown, Task::sentiment), MalformedRow);

    auto shape = write_temp("shape.jsonl",
        R"({"id":"a","task":"nli","text":"x","label":"entailment","target_label":"neutral"})");
    CHECK_THROWS_AS(load_instances(shape, Task::nli), MalformedRow);

    auto nli = write_temp("nli.jsonl",
        R"({"id":"a","task":"nli","premise":"p","hypothesis":"h","label":"entailment","target_label":"neutral"})");
    auto instances = load_instances(nli, Task::nli);
    CHECK(instances[0].fields.at("premise") == "p");
    CHECK(instances[0].fields.at("hypothesis") == "h");
}

TEST_CASE("load_instances ignores unknown extra fields") {
    auto path = write_temp("extra.jsonl",
        R"({"id":"a","task":"sentiment","text":"x","label":"positive","target_label":"negative","note":"kept upstream"})");
    CHECK(load_instances(path, Task::sentiment).size() == 1);
}

TEST_CASE("load_records") {
    auto path = write_temp("recs.jsonl",
        R"({"instance_id":"a","method_id":"editor","variant_index":0,"text":"v0"}
{"instance_id":"a","method_id":"editor","variant_index":1,"text":"v1"}
{"instance_id":"a","method_id":"editor","variant_index":2,"text":"v2"}
)");
    auto records = load_records(path);
    REQUIRE(records.size() == 3);
    CHECK(records[2].variant_index == 2);

    auto neg = write_temp("neg.jsonl",
        R"({"instance_id":"a","method_id":"m","variant_index":-1,"text":"v"})");
    CHECK_THROWS_AS(load_records(neg), NegativeVariantIndex);

    auto empty = write_temp("empty.jsonl", "");
    CHECK(load_records(empty).empty());

    auto dup = write_temp("dupkey.jsonl",
        R"({"instance_id":"a","method_id":"m","variant_index":0,"text":"v"}
{"instance_id":"a","method_id":"m","variant_index":0,"text":"w"}
)");
    CHECK_THROWS_AS(load_records(dup), MalformedRow);
}

TEST_CASE("join pairs instances with method variants") {
    auto instances =
        load_instances(write_temp("ji.jsonl", kTwoInstances), Task::sentiment);
    auto records = load_records(write_temp("jr.jsonl",
        R"({"instance_id":"a","method_id":"m","variant_index":0,"text":"ca"}
{"instance_id":"b","method_id":"m","variant_index":0,"text":"cb"}
)"));
    auto joined = join(instances, records);
    REQUIRE(joined.by_method.count("m") == 1);
    CHECK(joined.by_method.at("m").size() == 2);
    CHECK(joined.covered.at("m") == 2);
    CHECK(joined.omitted.at("m") == 0);
}

TEST_CASE("join rejects orphan records") {
    auto instances =
        load_instances(write_temp("oi.jsonl", kTwoInstances), Task::sentiment);
    std::vector<CounterfactualRecord> records{{"z", "m", 0, {{"text", "x"}}}};
    CHECK_THROWS_AS(join(instances, records), OrphanRecord);
}

TEST_CASE("join sorts variants by index") {
    auto instances =
        load_instances(write_temp("si.jsonl", kTwoInstances), Task::sentiment);
    std::vector<CounterfactualRecord> records{
        {"a", "m", 1, {{"text", "v1"}}}, {"a", "m", 0, {{"text", "v0"}}}};
    auto joined = join(instances, records);
    const auto& unit = joined.by_method.at("m").front();
    REQUIRE(unit.variants.size() == 2);
    CHECK(unit.variants[0].variant_index == 0);
    CHECK(unit.variants[1].variant_index == 1);
    CHECK(joined.omitted.at("m") == 1);  // instance b uncovered
}

TEST_CASE("load-join-flatten round trip is lossless") {
    auto instances =
        load_instances(write_temp("ri.jsonl", kTwoInstances), Task::sentiment);
    auto records = load_records(write_temp("rr.jsonl",
        R"({"instance_id":"b","method_id":"m","variant_index":1,"text":"b1"}
{"instance_id":"a","method_id":"m","variant_index":0,"text":"a0"}
{"instance_id":"b","method_id":"n","variant_index":0,"text":"bn"}
{"instance_id":"b","method_id":"m","variant_index":0,"text":"b0"}
)"));
    auto joined = join(instances, records);
    std::vector<CounterfactualRecord> flattened;
    for (const auto& [method, units] : joined.by_method)
        for (const auto& unit : units)
            for (const auto& v : unit.variants) flattened.push_back(v);
    auto sorted = [](std::vector<CounterfactualRecord> v) {
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
            return std::tie(a.method_id, a.instance_id, a.variant_index) <
                   std::tie(b.method_id, b.instance_id, b.variant_index);
        });
        return v;
    };
    CHECK(sorted(flattened) == sorted(records));

    for (const auto& [method, covered] : joined.covered)
        CHECK(covered + joined.omitted.at(method) == instances.size());
}
