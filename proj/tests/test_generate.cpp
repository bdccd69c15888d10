#include <doctest.h>

#include "cfeval/errors.hpp"
#include "cfeval/generate.hpp"

using namespace cfeval;

namespace {

BackendConfig chat_config() {
    BackendConfig c;
    c.kind = BackendKind::chat;
    c.endpoint = "fixture://unused";
    c.model_id = "gen-model";
    return c;
}

GenerationConfig sentiment_config() {
    GenerationConfig config;
    config.exemplar.original = {{"text", "the food was awful"}};
    config.exemplar.counterfactual = {{"text", "the food was delicious"}};
    config.exemplar.label = "negative";
    config.exemplar.target_label = "positive";
    return config;
}

Instance sentiment_instance(const std::string& id, const std::string& text) {
    return {id, Task::sentiment, {{"text", text}}, "negative", "positive"};
}

}  // namespace

TEST_CASE("generation prompt shows the exemplar and the instance") {
    auto inst = sentiment_instance("i1", "this film is dreadful");
    auto messages = build_generation_prompt(inst, sentiment_config());
    REQUIRE(messages.size() == 2);
    CHECK(messages[0].role == "system");
    CHECK(messages[0].content.find("positive") != std::string::npos);
    const auto& user = messages[1].content;
    CHECK(user.find("the food was awful") != std::string::npos);
    CHECK(user.find("<cf>the food was delicious</cf>") != std::string::npos);
    CHECK(user.find("this film is dreadful") != std::string::npos);
    CHECK(user.find("<cf>") < user.find("</cf>"));
}

TEST_CASE("later samples ask for a different edit") {
    auto inst = sentiment_instance("i1", "x");
    auto config = sentiment_config();
    auto first = build_generation_prompt(inst, config, 0);
    auto second = build_generation_prompt(inst, config, 1);
    CHECK(first != second);
    CHECK(second[1].content.find("different edit") != std::string::npos);
    // distinct prompts also mean distinct chat digests, so caching cannot
    // collapse independent samples
    CHECK(chat_digest("m", first, 1.0) != chat_digest("m", second, 1.0));
}

TEST_CASE("prompt requires an exemplar") {
    GenerationConfig config;  // empty exemplar
    CHECK_THROWS_AS(build_generation_prompt(sentiment_instance("i", "x"), config),
                    Error);
}

TEST_CASE("parse_counterfactual sentiment") {
    CHECK(parse_counterfactual("<cf>a fine film</cf>", Task::sentiment).at("text") ==
          "a fine film");
    CHECK(parse_counterfactual("Sure!\n<cf>\n  a fine film \n</cf>\nDone.",
                               Task::sentiment)
              .at("text") == "a fine film");
    // first pair wins
    CHECK(parse_counterfactual("<cf>one</cf> <cf>two</cf>", Task::sentiment)
              .at("text") == "one");
    CHECK_THROWS_AS(parse_counterfactual("no markers", Task::sentiment), MissingMarkers);
    CHECK_THROWS_AS(parse_counterfactual("<cf>never closed", Task::sentiment),
                    MissingMarkers);
    CHECK_THROWS_AS(parse_counterfactual("<cf>   </cf>", Task::sentiment), MissingField);
}

TEST_CASE("parse_counterfactual nli") {
    auto fields = parse_counterfactual(
        "<cf>Premise: a man sits\nHypothesis: someone rests</cf>", Task::nli);
    CHECK(fields.at("premise") == "a man sits");
    CHECK(fields.at("hypothesis") == "someone rests");
    CHECK_THROWS_AS(parse_counterfactual("<cf>just prose</cf>", Task::nli), MissingField);
    CHECK_THROWS_AS(parse_counterfactual("<cf>Premise: only this</cf>", Task::nli),
                    MissingField);
}

TEST_CASE("generate_counterfactuals produces k records per instance") {
    FixtureBackend backend(chat_config());
    backend.add_chat_rule("variation", "<cf>film one is great</cf>");
    backend.set_chat_default("<cf>film one is good</cf>");

    auto config = sentiment_config();
    config.k_variants = 2;
    std::vector<Instance> instances{sentiment_instance("i1", "film one is bad")};
    auto records = generate_counterfactuals(instances, backend, config);
    REQUIRE(records.size() == 2);
    CHECK(records[0].instance_id == "i1");
    CHECK(records[0].variant_index == 0);
    CHECK(records[1].variant_index == 1);
    CHECK(records[0].method_id == "llm");
    CHECK(records[0].fields.at("text") == "film one is good");
    CHECK(records[1].fields.at("text") == "film one is great");
}

TEST_CASE("generated records are sorted and survive a join") {
    FixtureBackend backend(chat_config());
    backend.add_chat_rule("film two", "<cf>film two is good</cf>");
    backend.set_chat_default("<cf>film one is good</cf>");

    std::vector<Instance> instances{sentiment_instance("i2", "film two is bad"),
                                    sentiment_instance("i1", "film one is bad")};
    auto records = generate_counterfactuals(instances, backend, sentiment_config());
    REQUIRE(records.size() == 2);
    CHECK(records[0].instance_id == "i1");
    CHECK(records[1].instance_id == "i2");

    auto joined = join(instances, records);
    CHECK(joined.by_method.at("llm").size() == 2);
    CHECK(joined.covered.at("llm") == 2);
}

TEST_CASE("unparseable generations are retried then dropped") {
    FixtureBackend backend(chat_config());
    backend.set_chat_default("I cannot help with that.");
    std::vector<Instance> instances{sentiment_instance("i1", "x")};
    auto records = generate_counterfactuals(instances, backend, sentiment_config());
    CHECK(records.empty());
    CHECK(backend.request_count() == 2);  // one retry
}
