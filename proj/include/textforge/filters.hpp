#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textforge/corpus.hpp"
#include "textforge/errors.hpp"
#include "textforge/io.hpp"
#include "textforge/linear_model.hpp"
#include "textforge/random.hpp"
#include "textforge/text_norm.hpp"
#include "textforge/vectorizer.hpp"

namespace textforge {

struct FilterReport {
    std::size_t input = 0;
    std::size_t kept = 0;
    std::size_t removed = 0;
    std::map<std::string, std::string> reasons;  // document id -> reason

    double removal_rate() const {
        return input == 0 ? 0.0 : static_cast<double>(removed) / static_cast<double>(input);
    }

    json to_json() const {
        return {{"input", input},
                {"kept", kept},
                {"removed", removed},
                {"removal_rate", removal_rate()},
                {"reasons", reasons}};
    }

    static FilterReport from_json(const json& j) {
        FilterReport r;
        r.input = j.at("input").get<std::size_t>();
        r.kept = j.at("kept").get<std::size_t>();
        r.removed = j.at("removed").get<std::size_t>();
        r.reasons = j.at("reasons").get<std::map<std::string, std::string>>();
        return r;
    }

    bool operator==(const FilterReport&) const = default;
};

struct FilterResult {
    LabeledCorpus corpus;
    FilterReport report;
};

// ---------------------------------------------------------------------------
// Leakage filter
// ---------------------------------------------------------------------------

/// Every `window`-token run of the original documents, per class. Windows
/// are keyed by hash and confirmed token by token, so lookups are exact.
class ShingleIndex {
public:
    struct Location {
        std::size_t doc;  // index into the originals corpus
        std::size_t offset;
    };

    ShingleIndex(const LabeledCorpus& originals, std::size_t window)
        : window_(window), classes_(originals.classes()), per_class_(classes_.size()) {
        if (window < 2) throw DataError("leakage window must be >= 2");
        ids_.reserve(originals.size());
        tokens_.reserve(originals.size());
        for (std::size_t d = 0; d < originals.size(); ++d) {
            const auto& doc = originals[d];
            ids_.push_back(doc.id);
            tokens_.push_back(tokenize(doc.text));
            const auto c = originals.class_index(doc.label);
            const auto& toks = tokens_.back();
            for (std::size_t off = 0; off + window_ <= toks.size(); ++off) {
                auto& bucket = per_class_[c][hash_window(std::span(toks).subspan(off, window_))];
                if (!contains(bucket, std::span(toks).subspan(off, window_)))
                    bucket.push_back({d, off});
            }
        }
    }

    std::size_t window() const noexcept { return window_; }
    const std::vector<std::string>& classes() const noexcept { return classes_; }

    /// First original of class `c` that contains `window` verbatim.
    std::optional<Location> find(std::size_t c, std::span<const std::string> window) const {
        const auto& table = per_class_.at(c);
        auto it = table.find(hash_window(window));
        if (it == table.end()) return std::nullopt;
        for (const auto& loc : it->second)
            if (matches(loc, window)) return loc;
        return std::nullopt;
    }

    /// Number of distinct windows indexed for class c.
    std::size_t window_count(std::size_t c) const {
        std::size_t n = 0;
        for (const auto& [h, bucket] : per_class_.at(c)) n += bucket.size();
        return n;
    }

    /// Distinct windows of class c, joined with spaces.
    std::vector<std::string> windows(std::size_t c) const {
        std::vector<std::string> out;
        for (const auto& [h, bucket] : per_class_.at(c))
            for (const auto& loc : bucket) {
                const auto& toks = tokens_[loc.doc];
                out.push_back(join_tokens(TokenStream(toks.begin() + static_cast<std::ptrdiff_t>(loc.offset),
                                                      toks.begin() + static_cast<std::ptrdiff_t>(loc.offset + window_))));
            }
        return out;
    }

    const std::string& document_id(std::size_t doc) const { return ids_.at(doc); }

private:
    static std::uint64_t hash_window(std::span<const std::string> window) {
        std::uint64_t h = 0x84222325cbf29ce4ULL;
        for (const auto& t : window) h = splitmix64(h ^ fnv1a64(t));
        return h;
    }

    bool matches(const Location& loc, std::span<const std::string> window) const {
        const auto& toks = tokens_[loc.doc];
        for (std::size_t k = 0; k < window_; ++k)
            if (toks[loc.offset + k] != window[k]) return false;
        return true;
    }

    bool contains(const std::vector<Location>& bucket, std::span<const std::string> window) const {
        for (const auto& loc : bucket)
            if (matches(loc, window)) return true;
        return false;
    }

    std::size_t window_;
    std::vector<std::string> classes_;
    std::vector<std::string> ids_;
    std::vector<TokenStream> tokens_;
    std::vector<std::unordered_map<std::uint64_t, std::vector<Location>>> per_class_;
};

struct LeakageOptions {
    std::size_t window = 5;
    // Match against the originals of every class, not only the document's own.
    bool strict = false;
    bool collapse_duplicates = true;

    bool operator==(const LeakageOptions&) const = default;
};

/// Drops generated documents sharing a window of consecutive tokens with an
/// original of the same class (any class in strict mode), then collapses
/// generated documents whose token streams are identical within a class.
inline FilterResult leakage_filter(const LabeledCorpus& generated, const LabeledCorpus& originals,
                                   const LeakageOptions& options = {}) {
    for (const auto& d : generated.documents()) originals.class_index(d.label);
    const ShingleIndex index(originals, options.window);
    const std::size_t w = options.window;

    FilterReport report;
    report.input = generated.size();
    std::vector<Document> kept;
    std::vector<std::unordered_map<std::string, std::string>> seen(originals.classes().size());

    for (const auto& doc : generated.documents()) {
        const auto c = originals.class_index(doc.label);
        const auto tokens = tokenize(doc.text);
        std::optional<std::string> reason;
        for (std::size_t off = 0; !reason && off + w <= tokens.size(); ++off) {
            const auto window = std::span(tokens).subspan(off, w);
            for (std::size_t k = 0; k < originals.classes().size(); ++k) {
                if (k != c && !options.strict) continue;
                if (auto loc = index.find(k, window)) {
                    reason = "leak: shares \"" +
                             join_tokens(TokenStream(window.begin(), window.end())) +
                             "\" with original " + index.document_id(loc->doc);
                    break;
                }
            }
        }
        if (!reason && options.collapse_duplicates) {
            auto key = join_tokens(tokens);
            auto [it, inserted] = seen[c].emplace(std::move(key), doc.id);
            if (!inserted) reason = "duplicate of " + it->second;
        }
        if (reason) {
            report.reasons.emplace(doc.id, std::move(*reason));
            ++report.removed;
        } else {
            kept.push_back(doc);
        }
    }
    report.kept = kept.size();
    return {LabeledCorpus(std::move(kept), generated.classes()), report};
}

// ---------------------------------------------------------------------------
// Label filter
// ---------------------------------------------------------------------------

inline const std::string& intended_label(const Document& d) {
    return d.gen_meta ? d.gen_meta->intended_label : d.label;
}

/// Keeps a generated document iff the filter model predicts its intended
/// label.
inline FilterResult label_filter(const LabeledCorpus& generated, const LinearModel& filter_model,
                                 const TfIdfVectorizer& vectorizer) {
    filter_model.check_vectorizer(vectorizer);
    const auto& classes = filter_model.classes();
    FilterReport report;
    report.input = generated.size();
    std::vector<Document> kept;
    for (const auto& doc : generated.documents()) {
        const auto& want = intended_label(doc);
        if (std::find(classes.begin(), classes.end(), want) == classes.end())
            throw DataError("document '" + doc.id + "' has intended label '" + want +
                            "' unknown to the filter model");
        const auto& got = classes[filter_model.predict(vectorizer.transform(doc.text))];
        if (got == want) {
            kept.push_back(doc);
        } else {
            report.reasons.emplace(doc.id, "classified '" + got + "', intended '" + want + "'");
            ++report.removed;
        }
    }
    report.kept = kept.size();
    return {LabeledCorpus(std::move(kept), generated.classes()), report};
}

// ---------------------------------------------------------------------------
// Label noise
// ---------------------------------------------------------------------------

/// Documents to relabel so that the expected label accuracy is `accuracy`
/// when each relabel is a uniform draw over all n classes:
///   k = round(N (1 - a) / (1 - 1/n)).
inline std::size_t noise_corruption_count(std::size_t n_docs, std::size_t n_classes, double accuracy) {
    if (n_classes < 2) throw DataError("label noise needs at least 2 classes");
    const double chance = 1.0 / static_cast<double>(n_classes);
    // A hair of slack so that a = 1/n passes despite 1/n being inexact.
    if (!(accuracy >= chance - 1e-12) || accuracy > 1.0)
        throw DataError("target accuracy " + std::to_string(accuracy) + " is outside [1/" +
                        std::to_string(n_classes) + ", 1]");
    const double k = static_cast<double>(n_docs) * (1.0 - accuracy) / (1.0 - chance);
    return std::min<std::size_t>(n_docs, static_cast<std::size_t>(std::llround(k)));
}

/// Relabels k uniformly chosen documents with a uniform class draw (which may
/// repeat the old label). The report keeps every document and lists the
/// relabeled ones under reasons.
inline FilterResult inject_label_noise(const LabeledCorpus& corpus, double target_accuracy,
                                       std::uint64_t seed) {
    const auto& classes = corpus.classes();
    const std::size_t n = corpus.size();
    const std::size_t k = noise_corruption_count(n, classes.size(), target_accuracy);

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + uniform_index(rng, n - i)]);

    std::vector<Document> docs = corpus.documents();
    FilterReport report;
    report.input = n;
    report.kept = n;
    for (std::size_t i = 0; i < k; ++i) {
        auto& d = docs[order[i]];
        const auto& fresh = classes[uniform_index(rng, classes.size())];
        report.reasons.emplace(d.id, "relabeled '" + d.label + "' -> '" + fresh + "'");
        d.label = fresh;
    }
    return {LabeledCorpus(std::move(docs), classes), report};
}

}  // namespace textforge
