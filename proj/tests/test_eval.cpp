#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "craft/experiments.hpp"
#include "craft/metrics.hpp"
#include "craft/trace_io.hpp"

using namespace craft;

namespace {

Conversation derail_conv(const std::string& id, std::size_t attack,
                         const std::vector<std::int64_t>& timestamps) {
    Conversation c;
    c.id = id;
    for (std::size_t i = 0; i < timestamps.size(); ++i)
        c.comments.push_back({"c" + std::to_string(i), "u", timestamps[i], "word"});
    c.label = Label::derail;
    c.attack_index = attack;
    return c;
}

ForecastTrace trace_with_trigger(std::size_t trigger, std::size_t n_scores) {
    ForecastTrace t;
    t.threshold = 0.5;
    for (std::size_t i = 1; i <= n_scores; ++i) t.push_score(i == trigger ? 0.9 : 0.1);
    return t;
}

}  // namespace

TEST_CASE("compute_metrics hand arithmetic") {
    using O = Outcome;
    std::vector<Outcome> outcomes = {O::TP, O::TP, O::FP, O::FN, O::TN, O::TN, O::TN};
    auto r = compute_metrics(outcomes);
    CHECK(r.tp == 2);
    CHECK(r.fp == 1);
    CHECK(r.fn == 1);
    CHECK(r.tn == 3);
    CHECK(r.accuracy == Catch::Approx(5.0 / 7.0));
    CHECK(r.precision == Catch::Approx(2.0 / 3.0));
    CHECK(r.recall == Catch::Approx(2.0 / 3.0));
    CHECK(r.fpr == Catch::Approx(1.0 / 4.0));
    CHECK(r.f1 == Catch::Approx(2.0 / 3.0));
    CHECK_FALSE(r.precision_undefined);
}

TEST_CASE("compute_metrics flags undefined ratios") {
    auto all_tn = compute_metrics({Outcome::TN, Outcome::TN});
    CHECK(all_tn.precision_undefined);
    CHECK(all_tn.recall_undefined);
    CHECK(all_tn.accuracy == 1.0);

    auto all_tp = compute_metrics({Outcome::TP});
    CHECK(all_tp.fpr_undefined);
    CHECK(all_tp.f1 == 1.0);

    CHECK_THROWS_AS(compute_metrics({}), Error);
}

TEST_CASE("compute_metrics matches a brute-force recount") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Outcome> outcomes;
        int n = 1 + int(rng() % 40);
        double tp = 0, fp = 0, fn = 0, tn = 0;
        for (int i = 0; i < n; ++i) {
            switch (rng() % 4) {
                case 0: outcomes.push_back(Outcome::TP); ++tp; break;
                case 1: outcomes.push_back(Outcome::FP); ++fp; break;
                case 2: outcomes.push_back(Outcome::FN); ++fn; break;
                default: outcomes.push_back(Outcome::TN); ++tn; break;
            }
        }
        auto r = compute_metrics(outcomes);
        CHECK(r.accuracy == Catch::Approx((tp + tn) / double(n)));
        if (tp + fp > 0) CHECK(r.precision == Catch::Approx(tp / (tp + fp)));
        if (tp + fn > 0) CHECK(r.recall == Catch::Approx(tp / (tp + fn)));
        if (fp + tn > 0) CHECK(r.fpr == Catch::Approx(fp / (fp + tn)));
    }
}

TEST_CASE("pr_curve hand case") {
    std::vector<std::pair<double, bool>> scores = {
        {0.9, true}, {0.8, false}, {0.7, true}, {0.3, false}};
    auto curve = pr_curve(scores);
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points[0] == std::pair<double, double>{0.5, 1.0});
    CHECK(curve.points[1] == std::pair<double, double>{0.5, 0.5});
    CHECK(curve.points[2].first == 1.0);
    CHECK(curve.points[2].second == Catch::Approx(2.0 / 3.0));
    CHECK(curve.points[3] == std::pair<double, double>{1.0, 0.5});
    // 0.5 * 1.0 + 0 + 0.5 * 2/3 + 0
    CHECK(curve.aupr == Catch::Approx(0.5 + 1.0 / 3.0));
}

TEST_CASE("pr_curve matches an independent sweep") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<double, bool>> scores;
        int n = 4 + int(rng() % 30);
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            bool p = rng() % 2 == 0;
            pos += p;
            scores.emplace_back(dist(rng), p);
        }
        if (pos == 0 || pos == n) continue;
        auto curve = pr_curve(scores);

        std::vector<double> ths;
        for (const auto& [s, p] : scores) ths.push_back(s);
        std::sort(ths.begin(), ths.end(), std::greater<double>());
        ths.erase(std::unique(ths.begin(), ths.end()), ths.end());
        double aupr = 0, prev_r = 0;
        std::size_t k = 0;
        for (double th : ths) {
            double tp = 0, fp = 0;
            for (const auto& [s, p] : scores)
                if (s >= th) (p ? tp : fp) += 1;
            double precision = tp / (tp + fp);
            double recall = tp / double(pos);
            REQUIRE(k < curve.points.size());
            CHECK(curve.points[k].first == recall);
            CHECK(curve.points[k].second == precision);
            aupr += (recall - prev_r) * precision;
            prev_r = recall;
            ++k;
        }
        CHECK(curve.aupr == aupr);
    }
}

TEST_CASE("pr_curve of random scores sits near the prevalence") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<std::pair<double, bool>> scores;
    for (int i = 0; i < 4000; ++i) scores.emplace_back(dist(rng), dist(rng) < 0.3);
    auto curve = pr_curve(scores);
    CHECK(curve.aupr == Catch::Approx(0.3).margin(0.05));
}

TEST_CASE("pr_curve needs both classes") {
    CHECK_THROWS_AS(pr_curve({{0.5, true}, {0.6, true}}), Error);
    CHECK_THROWS_AS(pr_curve({{0.5, false}}), Error);
}

TEST_CASE("warning gaps") {
    SECTION("hand-computed gaps and the 12h horizon boundary") {
        // trigger 2, attack 5: gap 3 comments; time gap exactly 12h counts
        Conversation a = derail_conv("a", 5, {0, 1000, 10000, 20000, 1000 + 43200});
        // trigger 3, attack 4: gap 1 comment; 600s < 12h
        Conversation b = derail_conv("b", 4, {0, 100, 200, 800});
        std::vector<ForecastTrace> traces = {trace_with_trigger(2, 4), trace_with_trigger(3, 3)};
        auto r = warning_gaps(traces, {a, b});
        CHECK(r.n_tp == 2);
        CHECK(r.comment_gaps == std::vector<std::size_t>{3, 1});
        CHECK(r.time_gaps == std::vector<std::int64_t>{43200, 600});
        CHECK(r.mean_comment_gap == 2.0);
        CHECK(r.median_comment_gap == 2.0);
        CHECK(r.frac_time_gap_at_least_h == 0.5);
    }
    SECTION("non-positives and civil conversations are skipped") {
        Conversation civil = derail_conv("c", 3, {0, 1, 2});
        civil.label = Label::civil;
        civil.attack_index.reset();
        ForecastTrace neg;
        neg.threshold = 0.5;
        neg.push_score(0.1);
        auto r = warning_gaps({trace_with_trigger(1, 2), neg}, {civil, derail_conv("d", 3, {0, 1, 2})});
        CHECK(r.empty);
        CHECK(r.n_tp == 0);
    }
    SECTION("trigger at or after the attack is an error") {
        Conversation a = derail_conv("a", 2, {0, 1, 2});
        CHECK_THROWS_AS(warning_gaps({trace_with_trigger(2, 2)}, {a}), Error);
    }
    SECTION("size mismatch is an error") {
        CHECK_THROWS_AS(warning_gaps({}, {derail_conv("a", 3, {0, 1, 2})}), Error);
    }
}

TEST_CASE("prefix shuffle experiment") {
    // scorer fires iff the first comment is "lead"
    PrefixScorer scorer = [](const std::vector<std::string>& texts) {
        return texts.front() == "lead" ? 0.9 : 0.1;
    };
    auto conv = [](const std::string& id, std::vector<std::string> texts) {
        Conversation c;
        c.id = id;
        for (std::size_t i = 0; i < texts.size(); ++i)
            c.comments.push_back({"c" + std::to_string(i), "u", std::int64_t(i), texts[i]});
        return c;
    };
    std::vector<Conversation> convs = {conv("a", {"lead", "mid", "tail", "end"})};
    std::vector<ForecastTrace> traces = {trace_with_trigger(3, 3)};

    SECTION("order-dependent scorer flips") {
        auto r = prefix_shuffle_experiment(scorer, traces, convs, 20, 5);
        CHECK(r.eligible == 1);
        CHECK(r.flipped == 1);
        CHECK(r.flip_rate == 1.0);
    }
    SECTION("order-invariant scorer never flips") {
        PrefixScorer constant = [](const std::vector<std::string>&) { return 0.9; };
        auto r = prefix_shuffle_experiment(constant, traces, convs, 20, 5);
        CHECK(r.flipped == 0);
        CHECK(r.flip_rate == 0.0);
    }
    SECTION("deterministic under a fixed seed") {
        auto a = prefix_shuffle_experiment(scorer, traces, convs, 5, 9);
        auto b = prefix_shuffle_experiment(scorer, traces, convs, 5, 9);
        CHECK(a.flipped == b.flipped);
    }
    SECTION("triggers before index 3 are ineligible") {
        std::vector<ForecastTrace> early = {trace_with_trigger(2, 3)};
        CHECK_THROWS_AS(prefix_shuffle_experiment(scorer, early, convs, 5, 9), Error);
    }
}

TEST_CASE("shuffle_corpus keeps the event comment and timestamps in place") {
    Corpus c;
    c.kind = CorpusKind::labeled;
    c.conversations.push_back(derail_conv("a", 5, {0, 10, 20, 30, 40}));
    for (std::size_t i = 0; i < 5; ++i)
        c.conversations[0].comments[i].text = "t" + std::to_string(i);
    Corpus s = shuffle_corpus(c, 1);
    const auto& orig = c.conversations[0].comments;
    const auto& got = s.conversations[0].comments;
    CHECK(got[4].text == orig[4].text);  // the attack comment never moves
    std::multiset<std::string> a, b;
    for (std::size_t i = 0; i < 4; ++i) {
        a.insert(orig[i].text);
        b.insert(got[i].text);
        CHECK(got[i].timestamp == orig[i].timestamp);
    }
    CHECK(a == b);
}

TEST_CASE("trace files round trip") {
    ForecastTrace t;
    t.conversation_id = "conv42";
    t.model_name = "craft";
    t.threshold = 0.62;
    for (double s : {0.1, 0.7, 0.3}) t.push_score(s);
    save_traces("traces_rt.jsonl", {t});
    auto loaded = load_traces("traces_rt.jsonl");
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].conversation_id == "conv42");
    CHECK(loaded[0].scores == t.scores);
    CHECK(loaded[0].trigger_index == t.trigger_index);
    CHECK(loaded[0].positive == t.positive);
    CHECK(loaded[0].threshold == t.threshold);
    std::remove("traces_rt.jsonl");
}

TEST_CASE("file hashing and manifests") {
    {
        std::ofstream os("hash_a.txt");
        os << "same bytes";
    }
    {
        std::ofstream os("hash_b.txt");
        os << "same bytes";
    }
    {
        std::ofstream os("hash_c.txt");
        os << "other bytes";
    }
    CHECK(file_hash("hash_a.txt") == file_hash("hash_b.txt"));
    CHECK(file_hash("hash_a.txt") != file_hash("hash_c.txt"));

    nlohmann::ordered_json m;
    m["corpus_hash"] = file_hash("hash_a.txt");
    write_manifest("hash_a.txt", m);
    auto loaded = read_manifest("hash_a.txt");
    CHECK(loaded["corpus_hash"] == m["corpus_hash"]);
    for (const char* p : {"hash_a.txt", "hash_b.txt", "hash_c.txt", "hash_a.txt.manifest.json"})
        std::remove(p);
}
