#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "textforge/ngram_lm.hpp"
#include "textforge/synthetic.hpp"

using namespace textforge;

namespace {

double sum(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

LabeledCorpus one_doc(const std::string& text) {
    return LabeledCorpus({tf_test::doc("d0", text, "c")}, {"c", "other"});
}

}  // namespace

TEST(NgramLm, HandComputedBigramOnSingleDoc) {
    // Unigram counts a:1 b:1 </s>:1, add-one over {a, b, </s>} -> 1/3 each.
    // P(b | a) = (1 - d)/1 + d * 1/1 * 1/3.
    for (double d : {0.1, 0.4, 0.75}) {
        const auto lm = NgramLanguageModel::fit(one_doc("a b"), 2, d);
        const auto pa = lm.next_token_distribution({"a"});
        const auto pb = lm.next_token_distribution({"b"});
        const double expected = (1.0 - d) + d / 3.0;
        EXPECT_NEAR(pa[lm.id_of("b")], expected, 1e-15);
        EXPECT_NEAR(pb[lm.end_id()], expected, 1e-15);
        if (d < 0.5) {
            EXPECT_GE(pa[lm.id_of("b")], 0.5);
            EXPECT_GE(pb[lm.end_id()], 0.5);
        }
        // From the start context the only continuation seen is "a".
        EXPECT_NEAR(lm.next_token_distribution({})[lm.id_of("a")], expected, 1e-15);
    }
}

TEST(NgramLm, UnigramIsAddOne) {
    const auto lm = NgramLanguageModel::fit(one_doc("x x y"), 3);
    ASSERT_EQ(lm.unigram().size(), 3u);  // x, y, </s>
    EXPECT_NEAR(lm.unigram()[lm.id_of("x")], 3.0 / 7.0, 1e-15);
    EXPECT_NEAR(lm.unigram()[lm.id_of("y")], 2.0 / 7.0, 1e-15);
    EXPECT_NEAR(lm.unigram()[lm.end_id()], 2.0 / 7.0, 1e-15);
}

TEST(NgramLm, UnseenContextBacksOffToUnigram) {
    for (std::size_t order : {2u, 3u, 4u}) {
        const auto lm = NgramLanguageModel::fit(one_doc("a b c a b"), order);
        const auto p = lm.next_token_distribution({"zzz"});
        ASSERT_EQ(p.size(), lm.unigram().size());
        for (std::size_t i = 0; i < p.size(); ++i) EXPECT_DOUBLE_EQ(p[i], lm.unigram()[i]);
    }
}

TEST(NgramLm, DistributionsSumToOneOverRandomContexts) {
    SyntheticBenchmarkConfig bc;
    bc.train_per_class = 40;
    bc.seed = 3;
    const auto bench = make_synthetic_benchmark(bc);
    for (std::size_t order : {2u, 3u, 4u}) {
        const auto lm = NgramLanguageModel::fit(bench.train.subcorpus("c0"), order, 0.75);
        Rng rng(order);
        std::vector<TokenStream> docs;
        for (const auto& d : bench.train.subcorpus("c0").documents()) docs.push_back(tokenize(d.text));
        for (int trial = 0; trial < 1000; ++trial) {
            TokenStream history;
            const auto len = uniform_index(rng, order + 1);
            // Half the contexts are real prefixes, half random mixes with unknowns.
            if (trial % 2 == 0) {
                const auto& doc = docs[uniform_index(rng, docs.size())];
                const auto cut = uniform_index(rng, doc.size() + 1);
                history.assign(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(cut));
            } else {
                for (std::size_t k = 0; k < len; ++k) {
                    const auto r = uniform_index(rng, lm.vocabulary().size() + 2);
                    history.push_back(r < lm.vocabulary().size() ? lm.vocabulary()[r]
                                                                : (r == lm.vocabulary().size() ? "<s>" : "unseen"));
                }
            }
            const auto p = lm.next_token_distribution(history);
            ASSERT_NEAR(sum(p), 1.0, 1e-9);
            for (double v : p) ASSERT_GT(v, 0.0);
        }
    }
}

TEST(NgramLm, EndTokenHasPositiveUnigramMass) {
    const auto lm = NgramLanguageModel::fit(one_doc("only words here"), 4);
    EXPECT_GT(lm.unigram()[lm.end_id()], 0.0);
}

TEST(NgramLm, Errors) {
    EXPECT_THROW(NgramLanguageModel::fit(LabeledCorpus({}, {"a", "b"})), DataError);
    const LabeledCorpus mixed({tf_test::doc("1", "x", "a"), tf_test::doc("2", "y", "b")}, {"a", "b"});
    EXPECT_THROW(NgramLanguageModel::fit(mixed), DataError);
    EXPECT_THROW(NgramLanguageModel::fit(one_doc("a b"), 1), DataError);
    EXPECT_THROW(NgramLanguageModel::fit(one_doc("a b"), 2, 0.0), DataError);
    EXPECT_THROW(NgramLanguageModel::fit(one_doc("a b"), 2, 1.0), DataError);
}

TEST(NgramLm, SerializationRoundTrip) {
    tf_test::TempDir dir;
    const auto lm = NgramLanguageModel::fit(one_doc("le chat , le chien ! l'été"), 3, 0.6);
    lm.save(dir / "lm.json");
    const auto back = NgramLanguageModel::load(dir / "lm.json");
    EXPECT_EQ(back.label(), "c");
    EXPECT_EQ(back.order(), 3u);
    EXPECT_EQ(back.discount(), 0.6);
    EXPECT_EQ(back.vocabulary(), lm.vocabulary());
    for (const TokenStream& h : {TokenStream{}, TokenStream{"le"}, TokenStream{"le", "chat"}, TokenStream{"x"}})
        EXPECT_EQ(back.next_token_distribution(h), lm.next_token_distribution(h));
    EXPECT_EQ(back.to_json(), lm.to_json());
}
