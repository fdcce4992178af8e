#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "textforge/corpus.hpp"
#include "textforge/errors.hpp"
#include "textforge/io.hpp"
#include "textforge/random.hpp"
#include "textforge/text_norm.hpp"

namespace textforge {

struct SparseEntry {
    std::uint32_t index;
    double value;

    bool operator==(const SparseEntry&) const = default;
};

/// (index, value) pairs with strictly increasing indices.
struct SparseVector {
    std::vector<SparseEntry> entries;

    bool empty() const noexcept { return entries.empty(); }
    std::size_t size() const noexcept { return entries.size(); }

    double norm() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.value * e.value;
        return std::sqrt(s);
    }

    double dot(std::span<const double> dense) const {
        double s = 0.0;
        for (const auto& e : entries) s += e.value * dense[e.index];
        return s;
    }

    bool operator==(const SparseVector&) const = default;
};

/// Smoothed TF-IDF over unigram tokens with L2-normalized output:
/// w(t) = tf * (ln((1 + N) / (1 + df(t))) + 1).
class TfIdfVectorizer {
public:
    static constexpr int kFormatVersion = 1;

    TfIdfVectorizer() = default;

    /// Features are the distinct tokens with df >= min_df, indexed in
    /// lexicographic order.
    static TfIdfVectorizer fit(std::span<const TokenStream> docs, std::size_t min_df = 1) {
        if (docs.empty()) throw DataError("cannot fit a vectorizer on an empty corpus");
        std::unordered_map<std::string, std::size_t> df;
        std::vector<std::string_view> seen;
        for (const auto& tokens : docs) {
            seen.assign(tokens.begin(), tokens.end());
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            for (auto t : seen) ++df[std::string(t)];
        }
        std::vector<std::pair<std::string, std::size_t>> features;
        for (auto& [token, count] : df)
            if (count >= min_df) features.emplace_back(token, count);
        std::sort(features.begin(), features.end());

        TfIdfVectorizer v;
        v.n_docs_ = docs.size();
        v.min_df_ = min_df;
        for (auto& [token, count] : features) {
            v.index_.emplace(token, static_cast<std::uint32_t>(v.vocabulary_.size()));
            v.vocabulary_.push_back(std::move(token));
            v.doc_freq_.push_back(count);
        }
        v.compute_idf();
        return v;
    }

    static TfIdfVectorizer fit(const LabeledCorpus& corpus, std::size_t min_df = 1) {
        std::vector<TokenStream> docs;
        docs.reserve(corpus.size());
        for (const auto& d : corpus.documents()) docs.push_back(tokenize(d.text));
        return fit(docs, min_df);
    }

    std::size_t dimension() const noexcept { return vocabulary_.size(); }
    std::size_t n_docs() const noexcept { return n_docs_; }
    std::size_t min_df() const noexcept { return min_df_; }
    const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
    const std::vector<std::size_t>& doc_freq() const noexcept { return doc_freq_; }
    double idf(std::size_t feature) const { return idf_.at(feature); }

    std::optional<std::uint32_t> feature_index(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Out-of-vocabulary tokens are ignored; an all-OOV input yields an
    /// empty vector.
    SparseVector transform_tokens(const TokenStream& tokens) const {
        std::unordered_map<std::uint32_t, std::size_t> counts;
        for (const auto& t : tokens)
            if (auto it = index_.find(t); it != index_.end()) ++counts[it->second];
        SparseVector out;
        out.entries.reserve(counts.size());
        for (auto [idx, tf] : counts) out.entries.push_back({idx, static_cast<double>(tf) * idf_[idx]});
        std::sort(out.entries.begin(), out.entries.end(),
                  [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
        const double n = out.norm();
        if (n > 0.0)
            for (auto& e : out.entries) e.value /= n;
        return out;
    }

    SparseVector transform(std::string_view text) const { return transform_tokens(tokenize(text)); }

    std::vector<SparseVector> transform(const LabeledCorpus& corpus) const {
        std::vector<SparseVector> out;
        out.reserve(corpus.size());
        for (const auto& d : corpus.documents()) out.push_back(transform(d.text));
        return out;
    }

    json to_json() const {
        return {{"format", "textforge-tfidf"},
                {"version", kFormatVersion},
                {"n_docs", n_docs_},
                {"min_df", min_df_},
                {"vocabulary", vocabulary_},
                {"doc_freq", doc_freq_}};
    }

    static TfIdfVectorizer from_json(const json& j) {
        try {
            if (j.at("format") != "textforge-tfidf") throw DataError("not a vectorizer file");
            if (j.at("version") != kFormatVersion)
                throw DataError("unsupported vectorizer version " + j.at("version").dump());
            TfIdfVectorizer v;
            v.n_docs_ = j.at("n_docs").get<std::size_t>();
            v.min_df_ = j.at("min_df").get<std::size_t>();
            v.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
            v.doc_freq_ = j.at("doc_freq").get<std::vector<std::size_t>>();
            if (v.vocabulary_.size() != v.doc_freq_.size())
                throw DataError("vocabulary and doc_freq lengths differ");
            for (std::size_t i = 0; i < v.vocabulary_.size(); ++i) {
                if (v.doc_freq_[i] < 1 || v.doc_freq_[i] > v.n_docs_)
                    throw DataError("document frequency out of range for '" + v.vocabulary_[i] + "'");
                if (!v.index_.emplace(v.vocabulary_[i], static_cast<std::uint32_t>(i)).second)
                    throw DataError("duplicate vocabulary entry '" + v.vocabulary_[i] + "'");
            }
            v.compute_idf();
            return v;
        } catch (const json::exception& e) {
            throw DataError(std::string("malformed vectorizer: ") + e.what());
        }
    }

    /// Hex FNV-1a digest of the canonical serialization. Models record it
    /// to detect being paired with a different vectorizer.
    std::string fingerprint() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(to_json().dump())));
        return buf;
    }

    void save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }
    static TfIdfVectorizer load(const std::filesystem::path& path) {
        return from_json(read_json_file(path));
    }

    bool operator==(const TfIdfVectorizer& o) const {
        return n_docs_ == o.n_docs_ && min_df_ == o.min_df_ && vocabulary_ == o.vocabulary_ &&
               doc_freq_ == o.doc_freq_;
    }

private:
    void compute_idf() {
        idf_.resize(doc_freq_.size());
        const double n = static_cast<double>(n_docs_);
        for (std::size_t i = 0; i < doc_freq_.size(); ++i)
            idf_[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(doc_freq_[i]))) + 1.0;
    }

    std::size_t n_docs_ = 0;
    std::size_t min_df_ = 1;
    std::vector<std::string> vocabulary_;
    std::vector<std::size_t> doc_freq_;
    std::vector<double> idf_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace textforge
