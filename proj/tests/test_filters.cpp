#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "test_util.hpp"
#include "textforge/filters.hpp"
#include "textforge/synthetic.hpp"

using namespace textforge;
using tf_test::doc;
using tf_test::generated;

namespace {

const std::vector<std::string> kAB = {"a", "b"};

using tf_oracle::shares_window;

FilterResult leak(const std::vector<Document>& gen, const std::vector<Document>& orig, LeakageOptions o = {}) {
    return leakage_filter(LabeledCorpus(gen, kAB), LabeledCorpus(orig, kAB), o);
}

}  // namespace

TEST(LeakageFilter, SharedFiveTokenWindowRemoved) {
    const auto r = leak({generated("g", "x a b c d e y", "a")}, {doc("o", "a b c d e f", "a")});
    EXPECT_EQ(r.corpus.size(), 0u);
    EXPECT_EQ(r.report.removed, 1u);
    EXPECT_EQ(r.report.reasons.at("g"), "leak: shares \"a b c d e\" with original o");
}

TEST(LeakageFilter, RunOfFourKept) {
    const auto r = leak({generated("g", "a b c d x e f", "a")}, {doc("o", "a b c d e f", "a")});
    EXPECT_EQ(r.corpus.size(), 1u);
    EXPECT_EQ(r.report.removed, 0u);
}

TEST(LeakageFilter, OtherClassOnlyKeptUnlessStrict) {
    const std::vector<Document> gen = {generated("g", "a b c d e f", "a")};
    const std::vector<Document> orig = {doc("o", "a b c d e f", "b")};
    EXPECT_EQ(leak(gen, orig).corpus.size(), 1u);
    LeakageOptions strict;
    strict.strict = true;
    EXPECT_EQ(leak(gen, orig, strict).corpus.size(), 0u);
}

TEST(LeakageFilter, WindowsCompareNormalizedTokens) {
    const auto r = leak({generated("g", "A, B C D", "a")}, {doc("o", "a , b c d", "a")});
    EXPECT_EQ(r.corpus.size(), 0u);
}

TEST(LeakageFilter, CollapsesDuplicatesWithinClass) {
    const auto r = leak({generated("g1", "p q r", "a"), generated("g2", "P  q r", "a"), generated("g3", "p q r", "b"),
                         generated("g4", "s t", "a")},
                        {doc("o", "z z z z z", "a")});
    EXPECT_EQ(r.corpus.size(), 3u);
    EXPECT_EQ(r.report.reasons.at("g2"), "duplicate of g1");
    LeakageOptions keep;
    keep.collapse_duplicates = false;
    EXPECT_EQ(leak({generated("g1", "p q r", "a"), generated("g2", "p q r", "a")}, {doc("o", "z", "a")}, keep).corpus.size(), 2u);
}

TEST(LeakageFilter, ReportInvariantsAndJson) {
    const auto r = leak({generated("g1", "a b c d e", "a"), generated("g2", "v w", "a")}, {doc("o", "a b c d e", "a")});
    EXPECT_EQ(r.report.kept + r.report.removed, r.report.input);
    EXPECT_DOUBLE_EQ(r.report.removal_rate(), 0.5);
    const auto j = r.report.to_json();
    EXPECT_EQ(j.at("input"), 2);
    EXPECT_EQ(j.at("kept"), 1);
    EXPECT_EQ(j.at("removed"), 1);
    EXPECT_DOUBLE_EQ(j.at("removal_rate").get<double>(), 0.5);
    EXPECT_TRUE(j.at("reasons").contains("g1"));
    EXPECT_EQ(FilterReport::from_json(j), r.report);
}

TEST(LeakageFilter, WindowMustBeAtLeastTwo) {
    LeakageOptions o;
    o.window = 1;
    EXPECT_THROW(leak({}, {doc("o", "a", "a")}, o), DataError);
}

TEST(ShingleIndex, ContainsExactlyTheClassWindows) {
    const LabeledCorpus orig({doc("1", "a b c d e f", "a"), doc("2", "b c d e f g", "a"), doc("3", "x y", "a"),
                              doc("4", "a b c d e", "b")},
                             kAB);
    const ShingleIndex index(orig, 5);
    std::set<std::string> expected = {"a b c d e", "b c d e f", "c d e f g"};
    const auto got = index.windows(0);
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), expected);
    EXPECT_EQ(index.window_count(0), 3u);
    EXPECT_EQ(index.window_count(1), 1u);
    const TokenStream probe = {"c", "d", "e", "f", "g"};
    ASSERT_TRUE(index.find(0, probe));
    EXPECT_EQ(index.document_id(index.find(0, probe)->doc), "2");
    EXPECT_FALSE(index.find(1, probe));
}

TEST(LeakageFilter, BruteForceSoundAndComplete) {
    // Tiny vocabulary so that 5-token collisions are common.
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        auto text = [&](std::size_t len) {
            std::string s;
            for (std::size_t i = 0; i < len; ++i) s += std::string(i ? " " : "") + "t" + std::to_string(uniform_index(rng, 3));
            return s;
        };
        std::vector<Document> orig, gen;
        for (int i = 0; i < 8; ++i) orig.push_back(doc("o" + std::to_string(i), text(3 + uniform_index(rng, 8)), kAB[i % 2]));
        for (int i = 0; i < 30; ++i)
            gen.push_back(generated("g" + std::to_string(i), text(2 + uniform_index(rng, 10)), kAB[uniform_index(rng, 2)]));
        const auto r = leak(gen, orig);
        for (const auto& k : r.corpus.documents())
            for (const auto& o : orig)
                if (o.label == k.label) {
                    ASSERT_FALSE(shares_window(tokenize(k.text), tokenize(o.text), 5));
                }
        std::set<std::string> kept;
        for (const auto& k : r.corpus.documents()) kept.insert(k.id);
        for (const auto& g : gen) {
            if (kept.contains(g.id)) continue;
            ASSERT_TRUE(r.report.reasons.contains(g.id));
            bool leaks = false;
            for (const auto& o : orig)
                if (o.label == g.label) leaks = leaks || shares_window(tokenize(g.text), tokenize(o.text), 5);
            const bool is_leak = r.report.reasons.at(g.id).rfind("leak:", 0) == 0;
            ASSERT_EQ(is_leak, leaks) << g.text;
        }
        EXPECT_EQ(r.report.kept + r.report.removed, r.report.input);
        EXPECT_EQ(r.report.reasons.size(), r.report.removed);
    }
}

TEST(LabelFilter, KeepsConsistentRemovesOthers) {
    const LabeledCorpus train({doc("1", "sun beach sand", "a"), doc("2", "sun warm beach", "a"),
                               doc("3", "snow cold ice", "b"), doc("4", "ice snow wind", "b")},
                              kAB);
    const auto vec = TfIdfVectorizer::fit(train);
    const auto model = train_on_corpus(train, vec);
    for (const auto& d : train.documents())
        ASSERT_EQ(model.classes()[model.predict(vec.transform(d.text))], d.label);

    const LabeledCorpus gen({generated("g1", "sun beach sand", "a"), generated("g2", "snow cold ice", "a")}, kAB);
    const auto r = label_filter(gen, model, vec);
    ASSERT_EQ(r.corpus.size(), 1u);
    EXPECT_EQ(r.corpus[0], gen[0]);
    EXPECT_EQ(r.report.reasons.at("g2"), "classified 'b', intended 'a'");

    const auto other = TfIdfVectorizer::fit(LabeledCorpus({doc("x", "q", "a")}, kAB));
    EXPECT_THROW(label_filter(gen, model, other), FingerprintError);
}

TEST(LabelFilter, KeptFractionTracksFilterAccuracy) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SyntheticBenchmarkConfig bc;
        bc.train_per_class = 30;
        bc.test_per_class = 600;
        bc.seed = seed;
        const auto bench = make_synthetic_benchmark(bc);
        const auto vec = TfIdfVectorizer::fit(bench.train);
        const auto model = train_on_corpus(bench.train, vec);
        // Accuracy on one half of fresh draws, kept fraction on the other half.
        std::vector<Document> first, second;
        for (std::size_t i = 0; i < bench.test.size(); ++i) {
            auto d = bench.test[i];
            if (i % 2) {
                d.provenance = Provenance::generated;
                d.gen_meta = GenerationMeta{"oracle", d.label, "", seed};
                second.push_back(std::move(d));
            } else {
                first.push_back(std::move(d));
            }
        }
        const LabeledCorpus held(first, bench.test.classes());
        std::size_t correct = 0;
        for (const auto& d : held.documents()) correct += model.classes()[model.predict(vec.transform(d.text))] == d.label;
        const double a = static_cast<double>(correct) / static_cast<double>(held.size());
        const auto r = label_filter(LabeledCorpus(second, bench.test.classes()), model, vec);
        const double kept = static_cast<double>(r.report.kept) / static_cast<double>(r.report.input);
        EXPECT_NEAR(kept, a, 0.05) << "seed " << seed;
        for (const auto& d : r.corpus.documents())
            ASSERT_EQ(model.classes()[model.predict(vec.transform(d.text))], intended_label(d));
    }
}

TEST(LabelNoise, CorruptionCount) {
    EXPECT_EQ(noise_corruption_count(100, 4, 0.70), 40u);
    EXPECT_EQ(noise_corruption_count(100, 4, 1.0), 0u);
    EXPECT_EQ(noise_corruption_count(100, 2, 0.5), 100u);
    EXPECT_EQ(noise_corruption_count(90, 3, 1.0 / 3.0), 90u);
    EXPECT_THROW(noise_corruption_count(100, 3, 0.3), DataError);
    EXPECT_THROW(noise_corruption_count(100, 2, 1.01), DataError);
}

TEST(LabelNoise, FullAccuracyLeavesCorpusUnchanged) {
    const LabeledCorpus c({generated("g1", "x", "a"), generated("g2", "y", "b")}, kAB);
    const auto r = inject_label_noise(c, 1.0, 3);
    EXPECT_EQ(r.corpus, c);
    EXPECT_TRUE(r.report.reasons.empty());
    EXPECT_THROW(inject_label_noise(c, 0.4, 3), DataError);
}

TEST(LabelNoise, RealizedAccuracyMatchesTarget) {
    for (std::size_t n : {2u, 3u, 4u}) {
        std::vector<std::string> classes;
        for (std::size_t c = 0; c < n; ++c) classes.push_back("k" + std::to_string(c));
        std::vector<Document> docs;
        for (int i = 0; i < 1000; ++i) docs.push_back(generated("g" + std::to_string(i), "w", classes[i % n]));
        const LabeledCorpus corpus(docs, classes);
        for (double a : {0.6, 0.8, 0.95}) {
            double mean = 0.0;
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                const auto r = inject_label_noise(corpus, a, seed);
                std::size_t same = 0;
                for (std::size_t i = 0; i < corpus.size(); ++i) {
                    same += r.corpus[i].label == corpus[i].label;
                    ASSERT_EQ(r.corpus[i].id, corpus[i].id);
                    ASSERT_EQ(r.corpus[i].gen_meta, corpus[i].gen_meta);
                }
                EXPECT_EQ(r.report.input, 1000u);
                EXPECT_EQ(r.report.kept, 1000u);
                mean += static_cast<double>(same) / 1000.0 / 20.0;
            }
            EXPECT_NEAR(mean, a, 0.03) << "n=" << n << " a=" << a;
        }
    }
}

TEST(LabelNoise, DeterministicGivenSeed) {
    std::vector<Document> docs;
    for (int i = 0; i < 50; ++i) docs.push_back(generated("g" + std::to_string(i), "w", kAB[i % 2]));
    const LabeledCorpus c(docs, kAB);
    EXPECT_EQ(inject_label_noise(c, 0.7, 11).corpus, inject_label_noise(c, 0.7, 11).corpus);
    EXPECT_NE(inject_label_noise(c, 0.7, 11).corpus, inject_label_noise(c, 0.7, 12).corpus);
}
