#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "textforge/corpus.hpp"
#include "textforge/errors.hpp"
#include "textforge/ngram_lm.hpp"
#include "textforge/random.hpp"
#include "textforge/sampling.hpp"
#include "textforge/text_norm.hpp"

namespace textforge {

struct GenerationRequest {
    std::string label;
    std::string prompt_word;
    SamplerConfig sampler;
    std::string request_id;
};

struct GenerationResult {
    std::string text;
    std::string backend_id;
    GenerationRequest request;
    bool empty_generation = false;
};

/// Failure talking to, or inside, a generation backend.
class GenerationError : public Error {
public:
    enum class Kind { transport, timeout, status, schema, empty, backend };

    GenerationError(Kind kind, std::string request_id, const std::string& message, int status = 0)
        : Error("generation request " + request_id + ": " + message),
          kind_(kind),
          request_id_(std::move(request_id)),
          status_(status) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& request_id() const noexcept { return request_id_; }
    /// HTTP status for Kind::status, 0 otherwise.
    int status() const noexcept { return status_; }

private:
    Kind kind_;
    std::string request_id_;
    int status_;
};

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string backend_id() const = 0;
    /// Must be safe to call concurrently.
    virtual GenerationResult generate(const GenerationRequest& request) const = 0;
    /// Upper bound on concurrent generate() calls used by generate_corpus.
    virtual std::size_t max_in_flight() const { return 1; }
};

/// Token sampled from the subcorpus with probability proportional to its
/// number of occurrences.
class PromptSampler {
public:
    explicit PromptSampler(const LabeledCorpus& subcorpus) {
        for (const auto& d : subcorpus.documents()) {
            auto t = tokenize(d.text);
            tokens_.insert(tokens_.end(), std::make_move_iterator(t.begin()),
                           std::make_move_iterator(t.end()));
        }
        if (tokens_.empty()) throw DataError("prompt source has no tokens");
    }

    const std::string& draw(Rng& rng) const { return tokens_[uniform_index(rng, tokens_.size())]; }

private:
    std::vector<std::string> tokens_;
};

inline std::string draw_prompt_word(const LabeledCorpus& subcorpus, Rng& rng) {
    return PromptSampler(subcorpus).draw(rng);
}

/// Continues from <s> padding plus the prompt word until </s> or
/// max_tokens tokens (the prompt included).
inline TokenStream generate_tokens(const NgramLanguageModel& lm, const std::string& prompt_word,
                                   const SamplerConfig& config, Rng& rng) {
    using TokenId = NgramLanguageModel::TokenId;
    TokenStream out{prompt_word};
    std::vector<TokenId> history(lm.order() - 1, lm.start_id());
    history.push_back(lm.id_of(prompt_word));
    const auto tie_less = [&](std::size_t a, std::size_t b) {
        return lm.token_of(static_cast<TokenId>(a)) < lm.token_of(static_cast<TokenId>(b));
    };
    while (out.size() < config.max_tokens) {
        const auto dist = lm.distribution(history);
        const auto id = static_cast<TokenId>(sample_index(dist, config, rng, tie_less));
        if (id == lm.end_id()) break;
        out.emplace_back(lm.token_of(id));
        history.push_back(id);
    }
    return out;
}

/// Built-in backend: one n-gram model per class label.
class NgramBackend final : public GenerationBackend {
public:
    explicit NgramBackend(std::map<std::string, NgramLanguageModel> models)
        : models_(std::move(models)) {
        if (models_.empty()) throw DataError("n-gram backend needs at least one model");
        const auto& first = models_.begin()->second;
        id_ = "ngram-o" + std::to_string(first.order()) + "-d" + format_discount(first.discount());
    }

    /// Fits one model per class of `train`.
    static NgramBackend fit(const LabeledCorpus& train, std::size_t order = 4,
                            double discount = 0.75) {
        std::map<std::string, NgramLanguageModel> models;
        for (const auto& c : train.classes()) {
            auto sub = train.subcorpus(c);
            if (sub.empty()) continue;
            models.emplace(c, NgramLanguageModel::fit(sub, order, discount));
        }
        return NgramBackend(std::move(models));
    }

    std::string backend_id() const override { return id_; }

    const NgramLanguageModel& model(const std::string& label) const {
        auto it = models_.find(label);
        if (it == models_.end()) throw DataError("no language model for class '" + label + "'");
        return it->second;
    }

    GenerationResult generate(const GenerationRequest& request) const override {
        request.sampler.validate();
        auto it = models_.find(request.label);
        if (it == models_.end())
            throw GenerationError(GenerationError::Kind::backend, request.request_id,
                                  "no language model for class '" + request.label + "'");
        Rng rng(request.sampler.seed);
        const auto tokens = generate_tokens(it->second, request.prompt_word, request.sampler, rng);
        GenerationResult r;
        r.text = join_tokens(tokens);
        r.backend_id = id_;
        r.request = request;
        r.empty_generation = tokens.empty();
        return r;
    }

private:
    static std::string format_discount(double d) {
        auto s = std::to_string(d);
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        return s;
    }

    std::map<std::string, NgramLanguageModel> models_;
    std::string id_;
};

struct CorpusGenerationOptions {
    // Extra attempts, each with a fresh derived seed, when a backend returns
    // an empty text.
    std::size_t empty_retries = 3;
};

/// Generates `count` documents for `label`. Document i draws its prompt and
/// its sampler seed from (config.seed, label, i) only, so the output is
/// independent of scheduling.
inline LabeledCorpus generate_corpus(const GenerationBackend& backend, const std::string& label,
                                     std::size_t count, const SamplerConfig& config,
                                     const LabeledCorpus& prompt_source,
                                     const CorpusGenerationOptions& options = {}) {
    if (count < 1) throw DataError("generation count must be >= 1");
    config.validate();
    prompt_source.class_index(label);
    const PromptSampler prompts(prompt_source.subcorpus(label));
    const std::uint64_t label_seed = derive_seed(config.seed, label);

    std::vector<std::optional<Document>> docs(count);
    auto make_one = [&](std::size_t i) {
        for (std::size_t attempt = 0; attempt <= options.empty_retries; ++attempt) {
            const std::uint64_t doc_seed = derive_seed(derive_seed(label_seed, i), attempt);
            Rng prompt_rng(derive_seed(doc_seed, "prompt"));
            GenerationRequest req;
            req.label = label;
            req.prompt_word = prompts.draw(prompt_rng);
            req.sampler = config;
            req.sampler.seed = doc_seed;
            req.request_id = label + "/" + std::to_string(i);
            auto result = backend.generate(req);
            if (result.empty_generation || tokenize(result.text).empty()) continue;
            Document d;
            d.id = "gen-" + label + "-" + std::to_string(i);
            d.text = std::move(result.text);
            d.label = label;
            d.provenance = Provenance::generated;
            d.gen_meta = GenerationMeta{result.backend_id, label, req.prompt_word, doc_seed};
            docs[i] = std::move(d);
            return;
        }
        throw GenerationError(GenerationError::Kind::empty, label + "/" + std::to_string(i),
                              "backend produced only empty texts");
    };

    const std::size_t workers = std::clamp<std::size_t>(backend.max_in_flight(), 1, count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) make_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::exception_ptr> errors(count);
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i; !failed && (i = next++) < count;) {
                    try {
                        make_one(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::vector<Document> out;
    out.reserve(count);
    for (auto& d : docs) out.push_back(std::move(*d));
    return LabeledCorpus(std::move(out), prompt_source.classes());
}

}  // namespace textforge
