#pragma once

// Per-class n-gram language model with interpolated absolute discounting:
//
//   P(w | h) = max(c(h, w) - d, 0) / c(h) + (d * N1+(h) / c(h)) * P(w | h')
//
// where h' drops the oldest token of h and N1+(h) counts distinct
// continuations of h. Contexts never seen fall through to P(w | h'). The
// recursion bottoms out in an add-one unigram over the vocabulary plus </s>.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textforge/corpus.hpp"
#include "textforge/errors.hpp"
#include "textforge/io.hpp"
#include "textforge/text_norm.hpp"

namespace textforge {

inline constexpr std::string_view kStartToken = "<s>";
inline constexpr std::string_view kEndToken = "</s>";

class NgramLanguageModel {
public:
    using TokenId = std::uint32_t;
    static constexpr int kFormatVersion = 1;

    struct ContextCounts {
        std::size_t total = 0;
        std::vector<std::pair<TokenId, std::size_t>> next;  // sorted by id
    };

    NgramLanguageModel() = default;

    static NgramLanguageModel fit(const LabeledCorpus& subcorpus, std::size_t order = 4,
                                  double discount = 0.75) {
        if (subcorpus.empty()) throw DataError("cannot fit a language model on an empty subcorpus");
        const std::string& label = subcorpus[0].label;
        std::vector<TokenStream> docs;
        docs.reserve(subcorpus.size());
        for (const auto& d : subcorpus.documents()) {
            if (d.label != label)
                throw DataError("language model subcorpus mixes classes '" + label + "' and '" +
                                d.label + "'");
            docs.push_back(tokenize(d.text));
        }
        return fit_tokens(label, docs, order, discount);
    }

    static NgramLanguageModel fit_tokens(std::string label, std::span<const TokenStream> docs,
                                         std::size_t order = 4, double discount = 0.75) {
        if (docs.empty()) throw DataError("cannot fit a language model on an empty subcorpus");
        if (order < 2) throw DataError("n-gram order must be >= 2");
        if (!(discount > 0.0 && discount < 1.0)) throw DataError("discount must be in (0, 1)");

        NgramLanguageModel lm;
        lm.label_ = std::move(label);
        lm.order_ = order;
        lm.discount_ = discount;

        std::vector<std::string> vocab;
        for (const auto& doc : docs) vocab.insert(vocab.end(), doc.begin(), doc.end());
        std::sort(vocab.begin(), vocab.end());
        vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
        lm.set_vocabulary(std::move(vocab));

        const auto V = lm.vocabulary_.size();
        lm.unigram_counts_.assign(V + 1, 0);
        std::vector<std::map<std::vector<TokenId>, std::map<TokenId, std::size_t>>> raw(order - 1);
        std::vector<TokenId> padded;
        for (const auto& doc : docs) {
            padded.assign(order - 1, lm.start_id());
            for (const auto& t : doc) padded.push_back(lm.id_of(t));
            padded.push_back(lm.end_id());
            for (std::size_t i = order - 1; i < padded.size(); ++i) {
                const TokenId target = padded[i];
                ++lm.unigram_counts_[target];
                for (std::size_t k = 2; k <= order; ++k) {
                    std::vector<TokenId> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - (k - 1)),
                                             padded.begin() + static_cast<std::ptrdiff_t>(i));
                    ++raw[k - 2][std::move(ctx)][target];
                }
            }
        }
        lm.tables_.resize(order - 1);
        for (std::size_t k = 0; k + 1 < order; ++k) {
            for (auto& [ctx, nexts] : raw[k]) {
                ContextCounts cc;
                for (auto [id, count] : nexts) {
                    cc.total += count;
                    cc.next.emplace_back(id, count);
                }
                lm.tables_[k].emplace(ctx, std::move(cc));
            }
        }
        lm.finalize_unigram();
        return lm;
    }

    const std::string& label() const noexcept { return label_; }
    std::size_t order() const noexcept { return order_; }
    double discount() const noexcept { return discount_; }

    /// Real tokens in lexicographic order; ids 0..V-1.
    const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
    /// Size of every next-token distribution: vocabulary plus </s>.
    std::size_t support_size() const noexcept { return vocabulary_.size() + 1; }

    TokenId end_id() const noexcept { return static_cast<TokenId>(vocabulary_.size()); }
    TokenId start_id() const noexcept { return end_id() + 1; }
    TokenId unknown_id() const noexcept { return end_id() + 2; }

    TokenId id_of(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? unknown_id() : it->second;
    }

    std::string_view token_of(TokenId id) const {
        if (id < vocabulary_.size()) return vocabulary_[id];
        if (id == end_id()) return kEndToken;
        if (id == start_id()) return kStartToken;
        return "<unk>";
    }

    const std::vector<double>& unigram() const noexcept { return unigram_; }

    const ContextCounts* find_context(std::span<const TokenId> context) const {
        if (context.empty() || context.size() >= order_) return nullptr;
        const auto& table = tables_[context.size() - 1];
        auto it = table.find(std::vector<TokenId>(context.begin(), context.end()));
        return it == table.end() ? nullptr : &it->second;
    }

    /// Next-token distribution (indexed by id, </s> last) given the history;
    /// only the last order-1 ids matter and shorter histories are padded
    /// with <s>.
    std::vector<double> distribution(std::span<const TokenId> history) const {
        std::vector<TokenId> ctx(order_ - 1, start_id());
        const std::size_t take = std::min(history.size(), order_ - 1);
        std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
                  ctx.end() - static_cast<std::ptrdiff_t>(take));

        std::vector<double> p = unigram_;
        for (std::size_t len = 1; len < order_; ++len) {
            const auto* cc = find_context(std::span(ctx).last(len));
            if (cc == nullptr) continue;
            const double total = static_cast<double>(cc->total);
            const double backoff = discount_ * static_cast<double>(cc->next.size()) / total;
            for (auto& v : p) v *= backoff;
            for (auto [id, count] : cc->next) p[id] += (static_cast<double>(count) - discount_) / total;
        }
        return p;
    }

    std::vector<double> next_token_distribution(const TokenStream& history) const {
        std::vector<TokenId> ids;
        ids.reserve(history.size());
        for (const auto& t : history) ids.push_back(t == kStartToken ? start_id() : id_of(t));
        return distribution(ids);
    }

    json to_json() const {
        json tables = json::array();
        for (std::size_t k = 0; k < tables_.size(); ++k) {
            json entries = json::array();
            for (const auto& [ctx, cc] : tables_[k]) {
                json next = json::array();
                for (auto [id, count] : cc.next) next.push_back({id, count});
                entries.push_back({{"context", ctx}, {"next", next}});
            }
            tables.push_back(std::move(entries));
        }
        return {{"format", "textforge-ngram-lm"},
                {"version", kFormatVersion},
                {"label", label_},
                {"order", order_},
                {"discount", discount_},
                {"vocabulary", vocabulary_},
                {"unigram_counts", unigram_counts_},
                {"tables", tables}};
    }

    static NgramLanguageModel from_json(const json& j) {
        try {
            if (j.at("format") != "textforge-ngram-lm") throw DataError("not a language model file");
            if (j.at("version") != kFormatVersion) throw DataError("unsupported language model version");
            NgramLanguageModel lm;
            lm.label_ = j.at("label").get<std::string>();
            lm.order_ = j.at("order").get<std::size_t>();
            lm.discount_ = j.at("discount").get<double>();
            if (lm.order_ < 2 || !(lm.discount_ > 0.0 && lm.discount_ < 1.0))
                throw DataError("invalid order or discount");
            lm.set_vocabulary(j.at("vocabulary").get<std::vector<std::string>>());
            lm.unigram_counts_ = j.at("unigram_counts").get<std::vector<std::size_t>>();
            if (lm.unigram_counts_.size() != lm.support_size())
                throw DataError("unigram table has the wrong size");
            const auto& tables = j.at("tables");
            if (tables.size() != lm.order_ - 1) throw DataError("wrong number of count tables");
            lm.tables_.resize(lm.order_ - 1);
            for (std::size_t k = 0; k < tables.size(); ++k) {
                for (const auto& e : tables[k]) {
                    auto ctx = e.at("context").get<std::vector<TokenId>>();
                    if (ctx.size() != k + 1) throw DataError("context of the wrong length");
                    ContextCounts cc;
                    for (const auto& n : e.at("next")) {
                        const auto id = n.at(0).get<TokenId>();
                        const auto count = n.at(1).get<std::size_t>();
                        if (id > lm.end_id() || count == 0) throw DataError("invalid continuation");
                        cc.total += count;
                        cc.next.emplace_back(id, count);
                    }
                    lm.tables_[k].emplace(std::move(ctx), std::move(cc));
                }
            }
            lm.finalize_unigram();
            return lm;
        } catch (const json::exception& e) {
            throw DataError(std::string("malformed language model: ") + e.what());
        }
    }

    void save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }
    static NgramLanguageModel load(const std::filesystem::path& path) {
        return from_json(read_json_file(path));
    }

private:
    void set_vocabulary(std::vector<std::string> vocab) {
        vocabulary_ = std::move(vocab);
        index_.clear();
        for (std::size_t i = 0; i < vocabulary_.size(); ++i)
            index_.emplace(vocabulary_[i], static_cast<TokenId>(i));
    }

    void finalize_unigram() {
        std::size_t total = 0;
        for (auto c : unigram_counts_) total += c;
        const double denom = static_cast<double>(total + unigram_counts_.size());
        unigram_.resize(unigram_counts_.size());
        for (std::size_t i = 0; i < unigram_counts_.size(); ++i)
            unigram_[i] = (static_cast<double>(unigram_counts_[i]) + 1.0) / denom;
    }

    std::string label_;
    std::size_t order_ = 0;
    double discount_ = 0.75;
    std::vector<std::string> vocabulary_;
    std::unordered_map<std::string, TokenId> index_;
    std::vector<std::size_t> unigram_counts_;  // indexed by id, </s> last
    std::vector<double> unigram_;
    // tables_[k] holds contexts of length k + 1.
    std::vector<std::map<std::vector<TokenId>, ContextCounts>> tables_;
};

}  // namespace textforge
