#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cfeval/errors.hpp"
#include "cfeval/metrics.hpp"
#include "cfeval/textdist.hpp"

using namespace cfeval;

namespace {

TokenSequence seq(std::vector<std::string> tokens) {
    TokenSequence s;
    s.tokens = std::move(tokens);
    return s;
}

Instance sentiment_instance(const std::string& id, const std::string& text,
                            const std::string& label, const std::string& target) {
    return {id, Task::sentiment, {{"text", text}}, label, target};
}

// Four-unit fixture: three flips with delta_p 0.8/0.7/0.9, one non-flip -0.1.
struct Fixture {
    std::vector<EvaluationUnit> units;
    std::shared_ptr<FixtureBackend> classifier;
    std::shared_ptr<FixtureBackend> lm;

    Fixture() {
        BackendConfig clf_cfg;
        clf_cfg.kind = BackendKind::classify;
        clf_cfg.endpoint = "fixture://";
        classifier = std::make_shared<FixtureBackend>(clf_cfg);
        BackendConfig lm_cfg = clf_cfg;
        lm_cfg.kind = BackendKind::logprob;
        lm = std::make_shared<FixtureBackend>(lm_cfg);

        struct Row {
            const char* id;
            double p_orig, p_cf;
            const char* cf_text;
        };
        const Row rows[] = {{"i1", 0.1, 0.9, "film one is good"},
                            {"i2", 0.2, 0.9, "film two is very good"},
                            {"i3", 0.05, 0.95, "film three is good"},
                            {"i4", 0.3, 0.2, "film four is not bad"}};
        const char* names[] = {"one", "two", "three", "four"};
        for (int i = 0; i < 4; ++i) {
            std::string orig = std::string("film ") + names[i] + " is bad";
            classifier->add_classify(
                orig, {{"negative", 1.0 - rows[i].p_orig}, {"positive", rows[i].p_orig}});
            classifier->add_classify(
                rows[i].cf_text,
                {{"negative", 1.0 - rows[i].p_cf}, {"positive", rows[i].p_cf}});
            lm->add_logprobs(rows[i].cf_text, {"t"},
                             {-std::log(2.0)});  // PPL 2 everywhere
            EvaluationUnit unit;
            unit.instance = sentiment_instance(rows[i].id, orig, "negative", "positive");
            unit.variants.push_back({rows[i].id, "m", 0, {{"text", rows[i].cf_text}}});
            units.push_back(std::move(unit));
        }
    }
};

}  // namespace

TEST_CASE("flip_rate") {
    CHECK(flip_rate({{"pos", "neg"}, {"pos", "pos"}, {"neg", "pos"}}) ==
          doctest::Approx(2.0 / 3.0));
    CHECK(flip_rate({{"a", "a"}, {"b", "b"}}) == 0.0);
    CHECK(flip_rate({{"a", "b"}, {"b", "a"}}) == 1.0);
    CHECK_THROWS_AS(flip_rate({}), EmptyInput);
}

TEST_CASE("target_flip_rate") {
    CHECK(target_flip_rate({{"entailment", "entailment"}}) == 1.0);
    CHECK(target_flip_rate({{"neutral", "entailment"}}) == 0.0);
    CHECK(target_flip_rate({{"e", "e"}, {"n", "e"}, {"c", "c"}}) ==
          doctest::Approx(2.0 / 3.0));
}

TEST_CASE("probability_change") {
    CHECK(probability_change({{0.1, 0.9}}) == doctest::Approx(0.8));
    CHECK(probability_change({{0.5, 0.5}}) == 0.0);
    CHECK(probability_change({{0.2, 0.9}, {0.4, 0.1}}) == doctest::Approx(0.2));
    CHECK_THROWS_AS(probability_change({}), EmptyInput);
    CHECK_THROWS_AS(probability_change({{1.2, 0.5}}), OutOfRange);
}

TEST_CASE("token_distance aggregation") {
    CHECK(token_distance({{0, true}}, true) == 0.0);
    CHECK(token_distance({{2, true}, {4, true}}, true) == doctest::Approx(3.0));
    CHECK(token_distance({{2, false}, {4, true}}, true) == doctest::Approx(4.0));
    CHECK(token_distance({{2, false}, {4, true}}, false) == doctest::Approx(3.0));
    CHECK_THROWS_AS(token_distance({{2, false}}, true), NothingIncluded);
}

TEST_CASE("perplexity") {
    TokenLogprobs uniform{{"a", "b", "c"}, {-std::log(2.0), -std::log(2.0), -std::log(2.0)}};
    CHECK(perplexity(uniform) == doctest::Approx(2.0).epsilon(1e-12));
    TokenLogprobs certain{{"a"}, {0.0}};
    CHECK(perplexity(certain) == doctest::Approx(1.0));
    TokenLogprobs mixed{{"a", "b"}, {-std::log(2.0), -std::log(8.0)}};
    CHECK(perplexity(mixed) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(perplexity(TokenLogprobs{}), EmptyInput);
}

TEST_CASE("diversity") {
    CHECK(diversity({{seq({"a"}), seq({"a"})}}) == 0.0);
    CHECK(diversity({{seq({"a"}), seq({"b"})}, {seq({"a", "b", "c"}), seq({"x", "y"})}}) ==
          doctest::Approx(2.0));
    // three variants, pairwise distances {1,2,3}
    auto v1 = seq({"a", "b", "c"});
    auto v2 = seq({"a", "b", "d"});
    auto v3 = seq({"x", "y", "c"});
    CHECK(diversity({{v1, v2}, {v1, v3}, {v2, v3}}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(diversity({}), EmptyInput);
}

TEST_CASE("record distance sums NLI fields") {
    Instance inst{"n1", Task::nli,
                  {{"premise", "a man walks"}, {"hypothesis", "someone moves"}},
                  "entailment", "contradiction"};
    CounterfactualRecord rec{"n1", "m", 0,
                             {{"premise", "a man sits"}, {"hypothesis", "someone rests"}}};
    CHECK(record_distance(inst, rec) == 2);
}

TEST_CASE("evaluate_method on the four-unit fixture") {
    Fixture fx;
    auto eval = evaluate_method("m", fx.units, *fx.classifier, *fx.lm);
    CHECK(eval.report.n == 4);
    CHECK(eval.report.flip_rate == doctest::Approx(0.75));
    CHECK(eval.report.target_flip_rate == doctest::Approx(0.75));
    CHECK(eval.report.delta_p_mean == doctest::Approx(0.575));
    CHECK(eval.report.perplexity_mean == doctest::Approx(2.0).epsilon(1e-9));
    // flipped distances: 1, 2, 1
    REQUIRE(eval.report.distance_mean);
    CHECK(*eval.report.distance_mean == doctest::Approx(4.0 / 3.0));
    CHECK(!eval.report.diversity_mean);  // single variant everywhere
    CHECK(eval.per_instance[3].flipped == false);
    CHECK(eval.per_instance[0].delta_p == doctest::Approx(0.8));
}

TEST_CASE("evaluate_method issues one classify call per distinct text") {
    Fixture fx;
    evaluate_method("m", fx.units, *fx.classifier, *fx.lm);
    CHECK(fx.classifier->request_count() == 8);  // 4 originals + 4 counterfactuals
    CHECK(fx.lm->request_count() == 4);
}

TEST_CASE("evaluate_method aggregates are permutation invariant") {
    Fixture fx;
    auto base = evaluate_method("m", fx.units, *fx.classifier, *fx.lm);
    auto shuffled = fx.units;
    std::mt19937 rng(3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto other = evaluate_method("m", shuffled, *fx.classifier, *fx.lm);
    CHECK(base.report.flip_rate == other.report.flip_rate);
    CHECK(base.report.delta_p_mean == doctest::Approx(other.report.delta_p_mean));
    CHECK(base.report.perplexity_mean == doctest::Approx(other.report.perplexity_mean));
    CHECK(*base.report.distance_mean == doctest::Approx(*other.report.distance_mean));
}

TEST_CASE("evaluate_method matches brute-force aggregation on random fixtures") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> prob(0.0, 1.0);
    for (int round = 0; round < 20; ++round) {
        Fixture fx;  // reuse backends, fresh probabilities per text
        std::vector<EvaluationUnit> units;
        std::vector<double> p_orig, p_cf;
        int n = 3 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            std::string orig = "orig " + std::to_string(round) + " " + std::to_string(i);
            std::string cf = "cf " + std::to_string(round) + " " + std::to_string(i);
            double po = prob(rng), pc = prob(rng);
            p_orig.push_back(po);
            p_cf.push_back(pc);
            fx.classifier->add_classify(orig, {{"negative", 1 - po}, {"positive", po}});
            fx.classifier->add_classify(cf, {{"negative", 1 - pc}, {"positive", pc}});
            fx.lm->add_logprobs(cf, {"t"}, {-1.0});
            EvaluationUnit unit;
            unit.instance = sentiment_instance("r" + std::to_string(i), orig,
                                               "negative", "positive");
            unit.variants.push_back({unit.instance.id, "m", 0, {{"text", cf}}});
            units.push_back(std::move(unit));
        }
        auto eval = evaluate_method("m", units, *fx.classifier, *fx.lm);
        // straight-line recomputation
        double flips = 0, dsum = 0;
        for (int i = 0; i < n; ++i) {
            bool orig_pos = p_orig[i] > 0.5 || (p_orig[i] == 0.5);
            bool cf_pos = p_cf[i] > 0.5 || (p_cf[i] == 0.5);
            // lexicographic tie-break makes 0.5 predict "negative"
            orig_pos = p_orig[i] > 0.5;
            cf_pos = p_cf[i] > 0.5;
            if (orig_pos != cf_pos) ++flips;
            dsum += p_cf[i] - p_orig[i];
        }
        CHECK(eval.report.flip_rate == doctest::Approx(flips / n).epsilon(1e-12));
        CHECK(eval.report.delta_p_mean == doctest::Approx(dsum / n).epsilon(1e-9));
    }
}

TEST_CASE("evaluate_method reports missing units instead of aborting") {
    Fixture fx;
    EvaluationUnit extra;
    extra.instance = sentiment_instance("i5", "no fixture entry", "negative", "positive");
    extra.variants.push_back({"i5", "m", 0, {{"text", "also missing"}}});
    auto units = fx.units;
    units.push_back(extra);
    auto eval = evaluate_method("m", units, *fx.classifier, *fx.lm);
    CHECK(eval.report.n == 4);
    CHECK(eval.report.missing == 1);
    CHECK(eval.report.missing_reasons.at("classify") == 1);
}

TEST_CASE("evaluate_method computes diversity over all variant pairs") {
    Fixture fx;
    auto units = fx.units;
    // add a second variant one token away from the first
    units[0].variants.push_back(
        {"i1", "m", 1, {{"text", "film one is good indeed"}}});
    auto eval = evaluate_method("m", units, *fx.classifier, *fx.lm);
    REQUIRE(eval.per_instance[0].diversity);
    CHECK(*eval.per_instance[0].diversity == doctest::Approx(1.0));
    REQUIRE(eval.report.diversity_mean);
    CHECK(*eval.report.diversity_mean == doctest::Approx(1.0));
}
