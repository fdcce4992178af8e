#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "textforge/errors.hpp"
#include "textforge/random.hpp"

namespace textforge {

struct SamplerConfig {
    double temperature = 0.7;
    double top_p = 0.9;
    std::size_t top_k = 40;
    std::size_t max_tokens = 120;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(temperature > 0.0) || !std::isfinite(temperature))
            throw DataError("temperature must be positive");
        if (!(top_p > 0.0 && top_p <= 1.0)) throw DataError("top_p must be in (0, 1]");
        if (top_k < 1) throw DataError("top_k must be >= 1");
        if (max_tokens < 1) throw DataError("max_tokens must be >= 1");
    }

    bool operator==(const SamplerConfig&) const = default;
};

struct Candidate {
    std::size_t index;
    double probability;
};

/// Temperature, then top-k, then top-p, renormalizing after each step.
/// Survivors come back sorted by descending probability; equal
/// probabilities are ordered by `tie_less` on the index (lexicographic token
/// order for the callers in this library).
template <class TieLess>
std::vector<Candidate> truncate_distribution(std::span<const double> probs,
                                             const SamplerConfig& config, TieLess tie_less) {
    std::vector<Candidate> cands;
    cands.reserve(probs.size());
    const double inv_t = 1.0 / config.temperature;
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p >= 0.0) || !std::isfinite(p)) throw DataError("invalid probability in distribution");
        if (p == 0.0) continue;
        const double q = inv_t == 1.0 ? p : std::exp(std::log(p) * inv_t);
        cands.push_back({i, q});
        total += q;
    }
    if (cands.empty() || !(total > 0.0)) throw DataError("cannot sample from an empty distribution");

    const auto by_rank = [&](const Candidate& a, const Candidate& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        return tie_less(a.index, b.index);
    };
    const std::size_t k = std::min(config.top_k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(),
                      by_rank);
    cands.resize(k);

    total = 0.0;
    for (const auto& c : cands) total += c.probability;
    for (auto& c : cands) c.probability /= total;

    // Smallest prefix reaching top_p; the slack absorbs rounding in the
    // cumulative sum so that e.g. a uniform 4-way split with top_p = 0.5
    // keeps exactly two tokens.
    constexpr double kSlack = 1e-12;
    double cumulative = 0.0;
    std::size_t keep = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        cumulative += cands[i].probability;
        if (cumulative >= config.top_p - kSlack) {
            keep = i + 1;
            break;
        }
    }
    cands.resize(keep);
    total = 0.0;
    for (const auto& c : cands) total += c.probability;
    for (auto& c : cands) c.probability /= total;
    return cands;
}

/// Inverse-CDF draw over the survivors of truncate_distribution.
template <class TieLess>
std::size_t sample_index(std::span<const double> probs, const SamplerConfig& config, Rng& rng,
                         TieLess tie_less) {
    const auto cands = truncate_distribution(probs, config, tie_less);
    const double u = unit_uniform(rng);
    double cumulative = 0.0;
    for (const auto& c : cands) {
        cumulative += c.probability;
        if (u < cumulative) return c.index;
    }
    return cands.back().index;
}

struct WeightedToken {
    std::string token;
    double probability;
};

/// Samples one token from an explicit token distribution.
inline std::string sample_next(std::span<const WeightedToken> dist, const SamplerConfig& config,
                               Rng& rng) {
    if (dist.empty()) throw DataError("cannot sample from an empty distribution");
    std::vector<double> probs;
    probs.reserve(dist.size());
    for (const auto& t : dist) probs.push_back(t.probability);
    const auto idx = sample_index(probs, config, rng, [&](std::size_t a, std::size_t b) {
        return dist[a].token < dist[b].token;
    });
    return dist[idx].token;
}

}  // namespace textforge
