#pragma once

// Desk-scale stand-in for a small labeled text dataset: each class is a
// multinomial over a shared word list. A fixed fraction of the mass sits on
// "stop" words common to every class; the rest is a Zipf distribution over
// content words whose ranking is shuffled per class, partially blended with
// a ranking shared by all classes to control difficulty.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "textforge/corpus.hpp"
#include "textforge/random.hpp"

namespace textforge {

struct SyntheticBenchmarkConfig {
    std::size_t n_classes = 3;
    std::size_t vocabulary = 400;
    std::size_t stop_words = 40;
    double stop_mass = 0.30;
    double zipf_exponent = 1.0;
    // Share of the content mass drawn from the common ranking.
    double shared_content = 0.5;
    std::size_t min_length = 8;
    std::size_t max_length = 25;
    std::size_t train_per_class = 50;
    std::size_t test_per_class = 500;
    std::uint64_t seed = 0;
};

struct SyntheticBenchmark {
    LabeledCorpus train;
    LabeledCorpus test;
    std::vector<std::vector<double>> class_distributions;  // over word ids
    std::vector<std::string> words;
};

inline SyntheticBenchmark make_synthetic_benchmark(const SyntheticBenchmarkConfig& cfg) {
    if (cfg.n_classes < 2) throw DataError("benchmark needs at least 2 classes");
    if (cfg.stop_words >= cfg.vocabulary) throw DataError("stop words must leave room for content words");
    if (cfg.min_length < 1 || cfg.max_length < cfg.min_length) throw DataError("invalid document lengths");

    SyntheticBenchmark b;
    for (std::size_t i = 0; i < cfg.vocabulary; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, i < cfg.stop_words ? "s%03zu" : "w%03zu", i);
        b.words.emplace_back(buf);
    }
    const std::size_t n_content = cfg.vocabulary - cfg.stop_words;

    auto zipf = [&](std::size_t n) {
        std::vector<double> w(n);
        double total = 0.0;
        for (std::size_t r = 0; r < n; ++r) total += w[r] = 1.0 / std::pow(double(r + 1), cfg.zipf_exponent);
        for (auto& v : w) v /= total;
        return w;
    };
    const auto stop_zipf = zipf(cfg.stop_words);
    const auto content_zipf = zipf(n_content);

    Rng structure(derive_seed(cfg.seed, "structure"));
    auto permutation = [&] {
        std::vector<std::size_t> p(n_content);
        for (std::size_t i = 0; i < n_content; ++i) p[i] = i;
        for (std::size_t i = n_content - 1; i > 0; --i) std::swap(p[i], p[uniform_index(structure, i + 1)]);
        return p;
    };
    const auto shared_rank = permutation();

    std::vector<std::string> classes;
    for (std::size_t c = 0; c < cfg.n_classes; ++c) classes.push_back("c" + std::to_string(c));

    for (std::size_t c = 0; c < cfg.n_classes; ++c) {
        const auto own_rank = permutation();
        std::vector<double> p(cfg.vocabulary, 0.0);
        for (std::size_t r = 0; r < cfg.stop_words; ++r) p[r] = cfg.stop_mass * stop_zipf[r];
        const double content_mass = 1.0 - cfg.stop_mass;
        for (std::size_t r = 0; r < n_content; ++r) {
            p[cfg.stop_words + own_rank[r]] += content_mass * (1.0 - cfg.shared_content) * content_zipf[r];
            p[cfg.stop_words + shared_rank[r]] += content_mass * cfg.shared_content * content_zipf[r];
        }
        b.class_distributions.push_back(std::move(p));
    }

    auto sample_docs = [&](std::size_t per_class, std::string_view split) {
        std::vector<Document> docs;
        Rng rng(derive_seed(cfg.seed, split));
        for (std::size_t i = 0; i < per_class; ++i) {
            for (std::size_t c = 0; c < cfg.n_classes; ++c) {
                const auto& p = b.class_distributions[c];
                const std::size_t len = cfg.min_length + uniform_index(rng, cfg.max_length - cfg.min_length + 1);
                std::string text;
                for (std::size_t t = 0; t < len; ++t) {
                    double u = unit_uniform(rng), acc = 0.0;
                    std::size_t w = p.size() - 1;
                    for (std::size_t k = 0; k < p.size(); ++k) {
                        acc += p[k];
                        if (u < acc) {
                            w = k;
                            break;
                        }
                    }
                    if (t) text += ' ';
                    text += b.words[w];
                }
                docs.push_back({std::string(split) + "-" + std::to_string(docs.size()), std::move(text),
                                classes[c], Provenance::original, std::nullopt});
            }
        }
        return LabeledCorpus(std::move(docs), classes);
    };
    b.train = sample_docs(cfg.train_per_class, "train");
    b.test = sample_docs(cfg.test_per_class, "test");
    return b;
}

}  // namespace textforge
