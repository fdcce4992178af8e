#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "textforge/metrics.hpp"
#include "oracles.hpp"
#include "textforge/random.hpp"

using namespace textforge;

namespace {

using tf_oracle::Labels;
using tf_oracle::binary_mcc;
using tf_oracle::one_hot_mcc;
using tf_oracle::random_labels;

ConfusionMatrix matrix(const std::vector<std::vector<std::size_t>>& rows) {
    ConfusionMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace

TEST(Evaluate, PerfectBinary) {
    const Labels g = {0, 1, 1, 0, 1};
    const auto r = evaluate(g, g, 2);
    EXPECT_EQ(r.micro_f1, 1.0);
    EXPECT_EQ(r.macro_f1, 1.0);
    EXPECT_EQ(r.mcc, 1.0);
    EXPECT_TRUE(r.zero_division.empty());
}

TEST(Evaluate, TwoByTwoExample) {
    const auto r = evaluate(matrix({{2, 1}, {1, 2}}));
    EXPECT_EQ(r.micro_f1, 2.0 / 3.0);
    EXPECT_EQ(r.macro_f1, 2.0 / 3.0);
    EXPECT_EQ(r.mcc, 1.0 / 3.0);
    // Binary formula: (TP*TN - FP*FN) / sqrt(...) = (4 - 1) / 9.
    EXPECT_DOUBLE_EQ(r.mcc, (2.0 * 2.0 - 1.0 * 1.0) / std::sqrt(3.0 * 3.0 * 3.0 * 3.0));
}

TEST(Evaluate, ConstantPredictorHasZeroMcc) {
    const Labels g = {0, 1, 0, 1, 0, 1};
    const Labels p(6, 1);
    const auto r = evaluate(g, p, 2);
    EXPECT_EQ(r.mcc, 0.0);
    EXPECT_NE(std::find(r.zero_division.begin(), r.zero_division.end(), "mcc"), r.zero_division.end());
    EXPECT_NE(std::find(r.zero_division.begin(), r.zero_division.end(), "precision[0]"), r.zero_division.end());
    EXPECT_EQ(r.per_class[0].f1, 0.0);
    EXPECT_DOUBLE_EQ(r.macro_f1, (0.0 + 2.0 * 3 / (6.0 + 3.0)) / 2.0);
}

TEST(Evaluate, AbsentClassCountsInMacroAverage) {
    const Labels g = {0, 0, 1, 1};
    const auto r = evaluate(g, g, 3);
    EXPECT_DOUBLE_EQ(r.macro_f1, 2.0 / 3.0);
    EXPECT_NE(std::find(r.zero_division.begin(), r.zero_division.end(), "f1[2]"), r.zero_division.end());
}

TEST(Evaluate, Errors) {
    EXPECT_THROW(evaluate(Labels{0, 1}, Labels{0}, 2), DimensionError);
    EXPECT_THROW(evaluate(Labels{0, 2}, Labels{0, 1}, 2), DataError);
    EXPECT_THROW(evaluate(Labels{}, Labels{}, 2), DataError);
}

TEST(Evaluate, RandomInstancesAgainstOracles) {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 4);
        Labels g, p;
        random_labels(rng, n, g, p);
        const auto r = evaluate(g, p, n);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < g.size(); ++i) hits += g[i] == p[i];
        EXPECT_EQ(r.micro_f1, static_cast<double>(hits) / static_cast<double>(g.size()));
        EXPECT_NEAR(r.mcc, one_hot_mcc(g, p, n), 1e-12);
        if (n == 2) {
            EXPECT_NEAR(r.mcc, binary_mcc(g, p), 1e-12);
        }
        EXPECT_GE(r.mcc, -1.0);
        EXPECT_LE(r.mcc, 1.0);
        EXPECT_GE(r.macro_f1, 0.0);
        EXPECT_LE(r.macro_f1, 1.0);

        // Identical class relabeling in gold and pred.
        std::vector<std::size_t> perm(n);
        for (std::size_t k = 0; k < n; ++k) perm[k] = (k + 1) % n;
        Labels gp, pp;
        for (std::size_t i = 0; i < g.size(); ++i) {
            gp.push_back(perm[g[i]]);
            pp.push_back(perm[p[i]]);
        }
        EXPECT_NEAR(evaluate(gp, pp, n).mcc, r.mcc, 1e-12);

        // Duplicating every pair.
        Labels g2 = g, p2 = p;
        g2.insert(g2.end(), g.begin(), g.end());
        p2.insert(p2.end(), p.begin(), p.end());
        const auto r2 = evaluate(g2, p2, n);
        EXPECT_EQ(r2.micro_f1, r.micro_f1);
        EXPECT_EQ(r2.macro_f1, r.macro_f1);
        EXPECT_NEAR(r2.mcc, r.mcc, 1e-12);
    }
}

TEST(Evaluate, BinaryInstancesMatchClassicFormula) {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        Labels g, p;
        random_labels(rng, 2, g, p);
        EXPECT_NEAR(evaluate(g, p, 2).mcc, binary_mcc(g, p), 1e-12);
    }
}

TEST(Evaluate, JsonRoundTripIsExact) {
    const Labels g = {0, 1, 2, 2, 1, 0, 1};
    const Labels p = {0, 2, 2, 1, 1, 0, 0};
    const auto r = evaluate(g, p, 3, {"x", "y", "z"});
    const auto back = EvaluationReport::from_json(json::parse(r.to_json().dump()));
    EXPECT_EQ(back.micro_f1, r.micro_f1);
    EXPECT_EQ(back.macro_f1, r.macro_f1);
    EXPECT_EQ(back.mcc, r.mcc);
    EXPECT_EQ(back.confusion, r.confusion);
    EXPECT_EQ(back.labels, r.labels);
    EXPECT_EQ(back.per_class, r.per_class);
}

TEST(Agreement, IdenticalPredictions) {
    const Labels g = {0, 1, 2, 1}, a = {0, 2, 2, 1};
    const auto r = agreement(g, a, a, 3);
    EXPECT_EQ(r.disagreements(), 0u);
    EXPECT_EQ(r.only_a.total(), 0u);
    EXPECT_EQ(r.only_b.total(), 0u);
    EXPECT_EQ(r.shared_errors(), 1u);
}

TEST(Agreement, PerfectVersusConstantShareNoErrors) {
    const Labels g = {0, 1, 2, 0, 1, 2};
    const Labels c(6, 0);
    EXPECT_EQ(agreement(g, g, c, 3).shared_errors(), 0u);
}

TEST(Agreement, RecountByEnumeration) {
    Rng rng(5);
    Labels g, a, b;
    for (int i = 0; i < 300; ++i) {
        g.push_back(uniform_index(rng, 3));
        a.push_back(uniform_index(rng, 3));
        b.push_back(uniform_index(rng, 3));
    }
    const auto r = agreement(g, a, b, 3);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t q = 0; q < 3; ++q) {
            std::size_t both = 0, oa = 0, ob = 0, in_union = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (g[i] != t) continue;
                const bool ina = a[i] == q, inb = b[i] == q;
                both += ina && inb;
                oa += ina && !inb;
                ob += inb && !ina;
                in_union += ina || inb;
            }
            EXPECT_EQ(r.both(t, q), both);
            EXPECT_EQ(r.only_a(t, q), oa);
            EXPECT_EQ(r.only_b(t, q), ob);
            EXPECT_EQ(r.union_count(t, q), in_union);
        }
    EXPECT_THROW(agreement(g, a, Labels{0}, 3), DimensionError);
}
