#pragma once

// Experiment harness. A scenario generates per-class texts from the
// training corpus T, filters them, assembles the final training set, fits
// the vectorizer and classifier on it and evaluates on a held-out test set.
//
//   baseline      T
//   substitution  G (or G^f)
//   complement    T + G (or T + G^f)
//   sequential    G (or G^f), then warm-started continuation on T

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "textforge/corpus.hpp"
#include "textforge/errors.hpp"
#include "textforge/filters.hpp"
#include "textforge/generation.hpp"
#include "textforge/http_backend.hpp"
#include "textforge/io.hpp"
#include "textforge/linear_model.hpp"
#include "textforge/metrics.hpp"
#include "textforge/parallel.hpp"
#include "textforge/vectorizer.hpp"

namespace textforge {

enum class ScenarioKind { baseline, substitution, complement, sequential };

inline std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::baseline: return "baseline";
        case ScenarioKind::substitution: return "substitution";
        case ScenarioKind::complement: return "complement";
        case ScenarioKind::sequential: return "sequential";
    }
    return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
    if (s == "baseline") return ScenarioKind::baseline;
    if (s == "substitution") return ScenarioKind::substitution;
    if (s == "complement") return ScenarioKind::complement;
    if (s == "sequential") return ScenarioKind::sequential;
    throw DataError("unknown scenario kind '" + std::string(s) + "'");
}

/// Which corpus the final vectorizer is fitted on.
enum class VectorizerFit { final_training_set, original_training_set };

struct GenerationSettings {
    std::size_t count_per_class = 16000;
    SamplerConfig sampler;
    std::size_t lm_order = 4;
    double discount = 0.75;
    std::string endpoint;  // empty: built-in n-gram backend
    HttpClientOptions http;
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::baseline;
    bool filtered = false;
    GenerationSettings generation;
    LeakageOptions leakage;
    double noise_accuracy = 1.0;
    TrainConfig train;         // final classifier
    TrainConfig filter_train;  // label-filter classifier
    VectorizerFit vectorizer_fit = VectorizerFit::final_training_set;
    std::uint64_t seed = 42;

    json to_json() const {
        auto train_json = [](const TrainConfig& t) {
            return json{{"max_iter", t.max_iter}, {"tol", t.tol}, {"C", t.C}, {"class_weights", t.class_weights}};
        };
        const auto& g = generation;
        return {{"kind", to_string(kind)},
                {"filtered", filtered},
                {"seed", seed},
                {"generation",
                 {{"count_per_class", g.count_per_class},
                  {"temperature", g.sampler.temperature},
                  {"top_k", g.sampler.top_k},
                  {"top_p", g.sampler.top_p},
                  {"max_tokens", g.sampler.max_tokens},
                  {"lm_order", g.lm_order},
                  {"discount", g.discount},
                  {"endpoint", g.endpoint},
                  {"timeout_ms", g.http.timeout.count()},
                  {"max_in_flight", g.http.max_in_flight}}},
                {"leakage",
                 {{"window", leakage.window}, {"strict", leakage.strict}, {"collapse_duplicates", leakage.collapse_duplicates}}},
                {"noise_accuracy", noise_accuracy},
                {"train", train_json(train)},
                {"filter_train", train_json(filter_train)},
                {"vectorizer_fit", vectorizer_fit == VectorizerFit::final_training_set ? "final" : "original"}};
    }

    static ScenarioSpec from_json(const json& j) {
        ScenarioSpec s;
        auto read_train = [](const json& t, TrainConfig& out) {
            out.max_iter = t.at("max_iter").get<std::size_t>();
            out.tol = t.at("tol").get<double>();
            out.C = t.at("C").get<double>();
            out.class_weights = t.value("class_weights", std::vector<double>{});
        };
        s.kind = parse_scenario_kind(j.at("kind").get<std::string>());
        s.filtered = j.at("filtered").get<bool>();
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto& g = j.at("generation");
        s.generation.count_per_class = g.at("count_per_class").get<std::size_t>();
        s.generation.sampler.temperature = g.at("temperature").get<double>();
        s.generation.sampler.top_k = g.at("top_k").get<std::size_t>();
        s.generation.sampler.top_p = g.at("top_p").get<double>();
        s.generation.sampler.max_tokens = g.at("max_tokens").get<std::size_t>();
        s.generation.lm_order = g.at("lm_order").get<std::size_t>();
        s.generation.discount = g.at("discount").get<double>();
        s.generation.endpoint = g.at("endpoint").get<std::string>();
        s.generation.http.timeout = std::chrono::milliseconds(g.at("timeout_ms").get<long long>());
        s.generation.http.max_in_flight = g.at("max_in_flight").get<std::size_t>();
        const auto& l = j.at("leakage");
        s.leakage.window = l.at("window").get<std::size_t>();
        s.leakage.strict = l.at("strict").get<bool>();
        s.leakage.collapse_duplicates = l.at("collapse_duplicates").get<bool>();
        s.noise_accuracy = j.at("noise_accuracy").get<double>();
        read_train(j.at("train"), s.train);
        read_train(j.at("filter_train"), s.filter_train);
        s.vectorizer_fit = j.at("vectorizer_fit") == "original" ? VectorizerFit::original_training_set
                                                                : VectorizerFit::final_training_set;
        return s;
    }
};

/// Generated texts after the leakage filter and, for filtered scenarios, the
/// label filter.
struct GeneratedPool {
    LabeledCorpus corpus;
    std::map<std::string, FilterReport> reports;
    std::map<std::string, double> timings;
};

struct ScenarioResult {
    ScenarioSpec spec;
    std::map<std::string, FilterReport> filter_reports;  // "leakage", "label", "noise"
    std::size_t training_size = 0;
    EvaluationReport evaluation;
    std::map<std::string, double> timings;  // seconds per stage; not serialized by default

    json to_json(bool with_reasons = true, bool with_timings = false) const {
        json reports = json::object();
        for (const auto& [name, r] : filter_reports) {
            auto rj = r.to_json();
            if (!with_reasons) rj.erase("reasons");
            reports[name] = std::move(rj);
        }
        json j = {{"scenario", spec.to_json()},
                  {"filter_reports", reports},
                  {"training_size", training_size},
                  {"evaluation", evaluation.to_json()}};
        if (with_timings) j["timings_seconds"] = timings;
        return j;
    }

    static ScenarioResult from_json(const json& j) {
        ScenarioResult r;
        r.spec = ScenarioSpec::from_json(j.at("scenario"));
        for (const auto& [name, rep] : j.at("filter_reports").items()) {
            FilterReport f;
            f.input = rep.at("input").get<std::size_t>();
            f.kept = rep.at("kept").get<std::size_t>();
            f.removed = rep.at("removed").get<std::size_t>();
            if (rep.contains("reasons")) f.reasons = rep.at("reasons").get<std::map<std::string, std::string>>();
            r.filter_reports.emplace(name, std::move(f));
        }
        r.training_size = j.at("training_size").get<std::size_t>();
        r.evaluation = EvaluationReport::from_json(j.at("evaluation"));
        if (auto t = j.find("timings_seconds"); t != j.end()) r.timings = t->get<std::map<std::string, double>>();
        return r;
    }
};

namespace detail {

template <class Fn>
auto run_stage(const char* name, std::map<std::string, double>& timings, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto record = [&] {
        timings[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record();
        } else {
            auto out = fn();
            record();
            return out;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

inline std::unique_ptr<GenerationBackend> make_backend(const LabeledCorpus& train, const GenerationSettings& g) {
    if (!g.endpoint.empty()) return std::make_unique<HttpGenerationBackend>(g.endpoint, g.http);
    return std::make_unique<NgramBackend>(NgramBackend::fit(train, g.lm_order, g.discount));
}

}  // namespace detail

/// Fits the per-class generators on T, generates, and applies the leakage
/// filter and (if spec.filtered) the label filter. Baseline specs and a zero
/// generation count give an empty pool.
inline GeneratedPool prepare_generated_pool(const LabeledCorpus& train, const ScenarioSpec& spec) {
    GeneratedPool pool{LabeledCorpus({}, train.classes()), {}, {}};
    if (spec.kind == ScenarioKind::baseline || spec.generation.count_per_class == 0) return pool;

    auto backend = detail::run_stage("fit-lm", pool.timings,
                                     [&] { return detail::make_backend(train, spec.generation); });
    auto generated = detail::run_stage("generate", pool.timings, [&] {
        SamplerConfig sampler = spec.generation.sampler;
        sampler.seed = derive_seed(spec.seed, "generation");
        LabeledCorpus all({}, train.classes());
        for (const auto& label : train.classes())
            all = concat(all, generate_corpus(*backend, label, spec.generation.count_per_class, sampler, train));
        return all;
    });
    auto leak = detail::run_stage("filter-leak", pool.timings,
                                  [&] { return leakage_filter(generated, train, spec.leakage); });
    pool.reports.emplace("leakage", leak.report);
    pool.corpus = std::move(leak.corpus);

    if (spec.filtered) {
        auto filtered = detail::run_stage("filter-label", pool.timings, [&] {
            const auto vectorizer = TfIdfVectorizer::fit(train);
            const auto model = train_on_corpus(train, vectorizer, spec.filter_train);
            return label_filter(pool.corpus, model, vectorizer);
        });
        pool.reports.emplace("label", filtered.report);
        pool.corpus = std::move(filtered.corpus);
    }
    return pool;
}

/// Final-training half of a scenario on an already prepared pool. Label
/// noise at spec.noise_accuracy is applied to the pool first.
inline ScenarioResult train_and_evaluate(const LabeledCorpus& train, const LabeledCorpus& test,
                                         const GeneratedPool& pool, const ScenarioSpec& spec) {
    if (train.classes() != test.classes()) throw DataError("train and test class lists differ");
    if (test.empty()) throw DataError("empty test set");

    ScenarioResult result;
    result.spec = spec;
    result.filter_reports = pool.reports;
    result.timings = pool.timings;

    LabeledCorpus generated = pool.corpus;
    if (spec.kind != ScenarioKind::baseline && spec.noise_accuracy < 1.0) {
        auto noisy = detail::run_stage("inject-noise", result.timings, [&] {
            return inject_label_noise(generated, spec.noise_accuracy, derive_seed(spec.seed, "noise"));
        });
        result.filter_reports.emplace("noise", noisy.report);
        generated = std::move(noisy.corpus);
    }

    // First-phase and (for sequential) second-phase training corpora.
    auto [phase1, phase2] = detail::run_stage("assemble", result.timings, [&] {
        std::pair<LabeledCorpus, std::optional<LabeledCorpus>> out{LabeledCorpus({}, train.classes()), std::nullopt};
        switch (spec.kind) {
            case ScenarioKind::baseline: out.first = train; break;
            case ScenarioKind::substitution: out.first = generated; break;
            case ScenarioKind::complement: out.first = concat(train, generated); break;
            case ScenarioKind::sequential:
                out.first = generated;
                out.second = train;
                break;
        }
        if (out.first.empty()) throw DataError("empty training set");
        std::unordered_set<std::string> train_ids;
        for (const auto& d : out.first.documents()) train_ids.insert(d.id);
        if (out.second)
            for (const auto& d : out.second->documents()) train_ids.insert(d.id);
        for (const auto& d : test.documents())
            if (train_ids.contains(d.id)) throw DataError("test document '" + d.id + "' leaked into training");
        return out;
    });
    result.training_size = phase1.size() + (phase2 ? phase2->size() : 0);

    const auto vectorizer = detail::run_stage("fit-vectorizer", result.timings, [&] {
        if (spec.vectorizer_fit == VectorizerFit::original_training_set) return TfIdfVectorizer::fit(train);
        return TfIdfVectorizer::fit(phase2 ? concat(phase1, *phase2) : phase1);
    });

    const auto model = detail::run_stage("train", result.timings, [&] {
        auto m = train_on_corpus(phase1, vectorizer, spec.train);
        if (phase2) {
            TrainConfig cont = spec.train;
            cont.max_iter = std::max<std::size_t>(1, spec.train.max_iter / 3);
            cont.warm_start = std::move(m);
            m = train_on_corpus(*phase2, vectorizer, cont);
        }
        return m;
    });

    result.evaluation = detail::run_stage("evaluate", result.timings, [&] {
        const auto X = vectorizer.transform(test);
        return evaluate(test.label_indices(), model.predict(X), test.classes().size(), test.classes());
    });
    return result;
}

inline ScenarioResult run_scenario(const LabeledCorpus& train, const LabeledCorpus& test, const ScenarioSpec& spec) {
    if (train.classes() != test.classes()) throw DataError("train and test class lists differ");
    const auto pool = prepare_generated_pool(train, spec);
    return train_and_evaluate(train, test, pool, spec);
}

struct SweepOptions {
    std::size_t jobs = 1;
    bool include_baseline = true;
};

/// For each seed: one filtered generated pool, then every
/// (accuracy, strategy) cell with label noise simulating a filter of that
/// accuracy. Output order is canonical: seed, then baseline, then accuracy,
/// then strategy, in the order given.
inline std::vector<ScenarioResult> run_filter_quality_sweep(const LabeledCorpus& train, const LabeledCorpus& test,
                                                            const std::vector<double>& accuracies,
                                                            const std::vector<ScenarioKind>& strategies,
                                                            const std::vector<std::uint64_t>& seeds,
                                                            const ScenarioSpec& base, const SweepOptions& options = {}) {
    for (double a : accuracies) noise_corruption_count(1, train.classes().size(), a);
    for (auto s : strategies)
        if (s == ScenarioKind::baseline) throw DataError("sweep strategies must generate data");

    std::vector<GeneratedPool> pools(seeds.size());
    parallel_for(seeds.size(), options.jobs, [&](std::size_t i) {
        ScenarioSpec spec = base;
        spec.seed = seeds[i];
        spec.kind = ScenarioKind::complement;
        spec.filtered = true;
        pools[i] = prepare_generated_pool(train, spec);
    });

    struct Cell {
        std::size_t seed_index;
        ScenarioSpec spec;
    };
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        ScenarioSpec spec = base;
        spec.seed = seeds[i];
        spec.filtered = true;
        if (options.include_baseline) {
            ScenarioSpec b = spec;
            b.kind = ScenarioKind::baseline;
            b.filtered = false;
            b.noise_accuracy = 1.0;
            cells.push_back({i, b});
        }
        for (double a : accuracies)
            for (auto kind : strategies) {
                ScenarioSpec c = spec;
                c.kind = kind;
                c.noise_accuracy = a;
                cells.push_back({i, c});
            }
    }
    std::vector<ScenarioResult> results(cells.size());
    parallel_for(cells.size(), options.jobs, [&](std::size_t k) {
        const auto& cell = cells[k];
        if (cell.spec.kind == ScenarioKind::baseline) {
            GeneratedPool none{LabeledCorpus({}, train.classes()), {}, {}};
            results[k] = train_and_evaluate(train, test, none, cell.spec);
        } else {
            results[k] = train_and_evaluate(train, test, pools[cell.seed_index], cell.spec);
        }
    });
    return results;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline constexpr int kResultsSchemaVersion = 1;

inline json results_to_json(const std::vector<ScenarioResult>& results, const json& run_config = nullptr,
                            bool with_reasons = true) {
    json rows = json::array();
    for (const auto& r : results) rows.push_back(r.to_json(with_reasons));
    json j = {{"schema_version", kResultsSchemaVersion}, {"results", rows}};
    if (!run_config.is_null()) j["run_config"] = run_config;
    return j;
}

inline std::string results_to_csv(const std::vector<ScenarioResult>& results) {
    std::string out = "accuracy,strategy,seed,macro_f1\n";
    auto num = [](double v) {
        json j = v;
        return j.dump();
    };
    for (const auto& r : results) {
        if (r.spec.kind != ScenarioKind::baseline) out += num(r.spec.noise_accuracy);
        out += "," + to_string(r.spec.kind) + "," + std::to_string(r.spec.seed) + "," +
               num(r.evaluation.macro_f1) + "\n";
    }
    return out;
}

/// Writes the results JSON and, when csv_path is non-empty, the plot CSV.
inline void emit_report(const std::vector<ScenarioResult>& results, const std::filesystem::path& json_path,
                        const std::filesystem::path& csv_path = {}, const json& run_config = nullptr,
                        bool with_reasons = true) {
    write_json_file(json_path, results_to_json(results, run_config, with_reasons));
    if (!csv_path.empty()) write_file_atomic(csv_path, results_to_csv(results));
}

inline std::vector<ScenarioResult> load_results(const std::filesystem::path& json_path) {
    const auto j = read_json_file(json_path);
    if (j.value("schema_version", 0) != kResultsSchemaVersion) throw DataError("unsupported results schema");
    std::vector<ScenarioResult> out;
    for (const auto& r : j.at("results")) out.push_back(ScenarioResult::from_json(r));
    return out;
}

}  // namespace textforge
