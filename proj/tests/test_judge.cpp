#include <doctest.h>

#include "cfeval/errors.hpp"
#include "cfeval/judge.hpp"

using namespace cfeval;

namespace {

BackendConfig chat_config() {
    BackendConfig c;
    c.kind = BackendKind::chat;
    c.endpoint = "fixture://unused";
    c.model_id = "judge-model";
    return c;
}

JudgeScore score(const std::string& instance, const std::string& method,
                 Dimension dim, int value) {
    JudgeScore s;
    s.instance_id = instance;
    s.method_id = method;
    s.dimension = dim;
    s.score = value;
    s.judge_id = "j";
    return s;
}

}  // namespace

TEST_CASE("parse_score accepts the requested format") {
    CHECK(parse_score("Score: 4") == 4);
    CHECK(parse_score("Score: 1\n") == 1);
    CHECK(parse_score("score: 5") == 5);
    CHECK(parse_score("The text reads well.\nScore: 3") == 3);
}

TEST_CASE("parse_score falls back to a standalone digit") {
    CHECK(parse_score("I would rate this a 3 out of 5.") == 3);
    CHECK(parse_score("4") == 4);
    CHECK(parse_score("Rating: 2/5 overall") == 2);
}

TEST_CASE("parse_score rejects out-of-range and missing scores") {
    CHECK_THROWS_AS(parse_score("Score: 7"), Unparseable);
    CHECK_THROWS_AS(parse_score("no rating here"), Unparseable);
    CHECK_THROWS_AS(parse_score(""), Unparseable);
    CHECK_THROWS_AS(parse_score("Score: 10"), Unparseable);
    CHECK_THROWS_AS(parse_score("chapter 12, page 345"), Unparseable);
}

TEST_CASE("dimension round trip and definitions") {
    for (auto d : all_dimensions()) {
        CHECK(dimension_from_string(to_string(d)) == d);
        CHECK(!dimension_definition(d).empty());
    }
    CHECK_THROWS_AS(dimension_from_string("sparkle"), Error);
}

TEST_CASE("judge prompt carries the text and the score format") {
    auto messages = build_judge_prompt({{"text", "a quiet film"}}, Dimension::fluency);
    REQUIRE(messages.size() == 2);
    CHECK(messages[0].role == "system");
    CHECK(messages[1].role == "user");
    CHECK(messages[1].content.find("a quiet film") != std::string::npos);
    CHECK(messages[1].content.find("Score: <1-5>") != std::string::npos);
    CHECK(messages[1].content.find(dimension_definition(Dimension::fluency)) !=
          std::string::npos);

    auto nli = build_judge_prompt({{"premise", "pp"}, {"hypothesis", "hh"}},
                                  Dimension::grammar);
    CHECK(nli[1].content.find("Premise: pp") != std::string::npos);
    CHECK(nli[1].content.find("Hypothesis: hh") != std::string::npos);
}

TEST_CASE("judge_corpus scores each record on each dimension") {
    FixtureBackend backend(chat_config());
    backend.add_chat_rule("very good", "Score: 5");
    backend.add_chat_rule("not bad", "Score: 2");
    backend.set_chat_default("Score: 4");

    std::vector<CounterfactualRecord> records{
        {"i1", "m", 0, {{"text", "film one is very good"}}},
        {"i2", "m", 0, {{"text", "film two is not bad"}}},
        {"i3", "m", 0, {{"text", "film three is fine"}}},
    };
    JudgeConfig config;
    config.judge_id = "j1";
    auto [scores, report] = judge_corpus(records, backend, config);
    CHECK(scores.size() == 9);  // 3 records x 3 dimensions
    for (const auto& s : scores) {
        CHECK(s.judge_id == "j1");
        CHECK(s.temperature == doctest::Approx(0.2));
        CHECK(s.score >= 1);
        CHECK(s.score <= 5);
    }
    CHECK(report.means.at("m").at("fluency") == doctest::Approx((5 + 2 + 4) / 3.0));
    CHECK(report.average.at("m") == doctest::Approx((5 + 2 + 4) / 3.0));
    CHECK(report.missing_rate.at("m") == 0.0);
}

TEST_CASE("judge_corpus retries unparseable responses then records a gap") {
    FixtureBackend backend(chat_config());
    backend.set_chat_default("no rating at all");
    std::vector<CounterfactualRecord> records{{"i1", "m", 0, {{"text", "x"}}}};
    JudgeConfig config;
    config.judge_id = "j1";
    config.dimensions = {Dimension::fluency};
    auto [scores, report] = judge_corpus(records, backend, config);
    CHECK(scores.empty());
    CHECK(report.missing_rate.at("m") == doctest::Approx(1.0));
    // one retry after the unparseable first answer
    CHECK(backend.request_count() == 2);
}

TEST_CASE("compare_judges on identical score sets") {
    std::vector<JudgeScore> a;
    int v = 0;
    for (const auto* method : {"m1", "m2"})
        for (const auto* inst : {"i1", "i2", "i3"})
            for (auto dim : all_dimensions())
                a.push_back(score(inst, method, dim, 1 + (v++ % 5)));
    auto agreement = compare_judges(a, a);
    CHECK(agreement.pearson_per_instance == doctest::Approx(1.0));
    CHECK(agreement.spearman_method_ranking == doctest::Approx(1.0));
}

TEST_CASE("compare_judges on inverted score sets") {
    std::vector<JudgeScore> a, b;
    int v = 0;
    for (const auto* method : {"m1", "m2"})
        for (const auto* inst : {"i1", "i2", "i3"})
            for (auto dim : all_dimensions()) {
                int s = 1 + (v++ % 5);
                a.push_back(score(inst, method, dim, s));
                b.push_back(score(inst, method, dim, 6 - s));
            }
    auto agreement = compare_judges(a, b);
    CHECK(agreement.pearson_per_instance == doctest::Approx(-1.0));
    CHECK(agreement.spearman_method_ranking == doctest::Approx(-1.0));
}

TEST_CASE("compare_judges only uses keys both judges scored") {
    std::vector<JudgeScore> a{score("i1", "m1", Dimension::fluency, 5),
                              score("i2", "m1", Dimension::fluency, 1),
                              score("i1", "m2", Dimension::fluency, 2),
                              score("i3", "m1", Dimension::fluency, 3)};
    std::vector<JudgeScore> b{score("i1", "m1", Dimension::fluency, 5),
                              score("i2", "m1", Dimension::fluency, 1),
                              score("i1", "m2", Dimension::fluency, 2),
                              score("i9", "m1", Dimension::fluency, 4)};
    // i3/i9 are unmatched and must not influence the correlation
    auto agreement = compare_judges(a, b);
    CHECK(agreement.pearson_per_instance == doctest::Approx(1.0));
    CHECK(agreement.spearman_method_ranking == doctest::Approx(1.0));
    CHECK(agreement.method_means_a.at("m1") == doctest::Approx(3.0));
}

TEST_CASE("compare_judges needs overlap") {
    std::vector<JudgeScore> a{score("i1", "m1", Dimension::fluency, 4)};
    std::vector<JudgeScore> b{score("i2", "m1", Dimension::fluency, 4)};
    CHECK_THROWS_AS(compare_judges(a, b), InsufficientOverlap);
}

TEST_CASE("score records round trip") {
    std::vector<JudgeScore> scores;
    for (int i = 0; i < 4; ++i) {
        auto s = score("i" + std::to_string(i), "m", all_dimensions()[i % 3], 1 + i);
        s.temperature = 0.2;
        s.template_id = "judge-v1";
        s.raw_response = "Score: " + std::to_string(1 + i);
        scores.push_back(s);
    }
    auto text = scores_to_records(scores);
    auto back = scores_from_records(text);
    REQUIRE(back.size() == scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(back[i].instance_id == scores[i].instance_id);
        CHECK(back[i].dimension == scores[i].dimension);
        CHECK(back[i].score == scores[i].score);
        CHECK(back[i].raw_response.empty());  // raw text stays out of the export
    }
}
