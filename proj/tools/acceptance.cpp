// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and budgets are fixed here and never adjusted
// to the observed outcome.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "textforge/textforge.hpp"

using namespace textforge;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

struct Line {
    std::string name;
    bool pass;
    double seconds;
    double budget;  // 0: no runtime budget
    std::string detail;
};

std::vector<Line> lines;

void criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
    std::cerr << "running: " << name << std::endl;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = out.ok;
    if (budget_seconds > 0 && secs >= budget_seconds) {
        pass = false;
        out.detail += "; over the runtime budget";
    }
    lines.push_back({name, pass, secs, budget_seconds, out.detail});
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------

Outcome metric_oracle() {
    Rng rng(20240601);
    std::size_t binary = 0, worst_micro = 0;
    double worst_mcc = 0.0, worst_binary = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 4);
        tf_oracle::Labels g, p;
        tf_oracle::random_labels(rng, n, g, p);
        const auto r = evaluate(g, p, n);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < g.size(); ++i) hits += g[i] == p[i];
        if (r.micro_f1 != static_cast<double>(hits) / static_cast<double>(g.size())) ++worst_micro;
        worst_mcc = std::max(worst_mcc, std::abs(r.mcc - tf_oracle::one_hot_mcc(g, p, n)));
        if (n == 2) {
            ++binary;
            worst_binary = std::max(worst_binary, std::abs(r.mcc - tf_oracle::binary_mcc(g, p)));
        }
    }
    ConfusionMatrix m(2);
    m(0, 0) = 2, m(0, 1) = 1, m(1, 0) = 1, m(1, 1) = 2;
    const auto fixed = evaluate(m);
    const bool fixed_ok = fixed.mcc == 1.0 / 3.0 && fixed.macro_f1 == 2.0 / 3.0;
    Outcome o;
    o.ok = worst_micro == 0 && worst_mcc < 1e-12 && worst_binary < 1e-12 && fixed_ok && binary > 0;
    o.detail = "micro!=acc in " + std::to_string(worst_micro) + "/200, max |MCC-oracle| " + fmt(worst_mcc, 17) +
               ", binary instances " + std::to_string(binary) + " max dev " + fmt(worst_binary, 17) +
               ", [[2,1],[1,2]] " + (fixed_ok ? "exact" : "WRONG");
    return o;
}

Outcome gradient_check() {
    double worst_rel = 0.0;
    std::size_t bad_traces = 0, traces = 0;
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto p = tf_oracle::random_problem(5000 + k, 30, 12, 3);
        Rng rng(k);
        std::vector<double> w(p.dim);
        for (auto& v : w) v = 2.0 * unit_uniform(rng) - 1.0;
        const double b = 2.0 * unit_uniform(rng) - 1.0;
        TrainConfig cfg;
        cfg.C = 0.5 + 2.0 * unit_uniform(rng);
        const std::size_t c = k % 3;
        const auto obj = detail::make_binary_problem(p.X, p.y, c, p.dim, cfg);
        std::vector<double> g(p.dim);
        double gb = 0.0;
        obj.value_and_gradient(w, b, g, gb);
        const double h = 1e-5;
        double diff2 = 0.0, norm2 = 0.0;
        for (std::size_t j = 0; j <= p.dim; ++j) {
            auto wp = w, wm = w;
            double bp = b, bm = b;
            if (j < p.dim) wp[j] += h, wm[j] -= h;
            else bp += h, bm -= h;
            const double fd = (tf_oracle::lr_objective(p, c, wp, bp, cfg.C) -
                               tf_oracle::lr_objective(p, c, wm, bm, cfg.C)) / (2.0 * h);
            const double an = j < p.dim ? g[j] : gb;
            diff2 += (fd - an) * (fd - an);
            norm2 += an * an;
        }
        worst_rel = std::max(worst_rel, std::sqrt(diff2 / norm2));

        std::vector<std::string> names = {"k0", "k1", "k2"};
        const auto model = train(p.X, p.y, names, p.dim, cfg);
        for (const auto& info : model.training_info()) {
            ++traces;
            for (std::size_t t = 1; t < info.objective_trace.size(); ++t)
                if (info.objective_trace[t] > info.objective_trace[t - 1]) {
                    ++bad_traces;
                    break;
                }
        }
    }
    return {worst_rel < 1e-5 && bad_traces == 0,
            "max relative gradient error " + fmt(worst_rel, 10) + ", increasing traces " +
                std::to_string(bad_traces) + "/" + std::to_string(traces)};
}

Outcome leakage_exactness() {
    const std::vector<std::string> classes = {"a", "b", "c"};
    std::size_t pairs = 0, removed = 0, unexplained = 0, leaked_kept = 0, checked = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(derive_seed(77, seed));
        auto text = [&](std::size_t len) {
            std::string s;
            for (std::size_t i = 0; i < len; ++i) s += std::string(i ? " " : "") + "t" + std::to_string(uniform_index(rng, 4));
            return s;
        };
        std::vector<Document> orig, gen;
        for (int i = 0; i < 30; ++i)
            orig.push_back({"o" + std::to_string(i), text(3 + uniform_index(rng, 15)), classes[i % 3],
                            Provenance::original, std::nullopt});
        for (int i = 0; i < 200; ++i) {
            const auto& label = classes[uniform_index(rng, 3)];
            gen.push_back({"g" + std::to_string(i), text(2 + uniform_index(rng, 15)), label, Provenance::generated,
                           GenerationMeta{"acceptance", label, "t0", seed}});
        }
        const LabeledCorpus originals(orig, classes), generated(gen, classes);
        const auto r = leakage_filter(generated, originals);
        ++pairs;
        for (const auto& k : r.corpus.documents())
            for (const auto& o : orig) {
                ++checked;
                if (o.label == k.label && tf_oracle::shares_window(tokenize(k.text), tokenize(o.text), 5)) ++leaked_kept;
            }
        std::set<std::string> kept;
        for (const auto& k : r.corpus.documents()) kept.insert(k.id);
        for (const auto& g : gen)
            if (!kept.contains(g.id)) {
                ++removed;
                if (!r.report.reasons.contains(g.id)) ++unexplained;
            }
    }
    return {leaked_kept == 0 && unexplained == 0 && removed > 0,
            std::to_string(pairs) + " pairs, " + std::to_string(checked) + " kept/original comparisons, " +
                std::to_string(leaked_kept) + " leaking kept, " + std::to_string(removed) + " removed, " +
                std::to_string(unexplained) + " without reason"};
}

Outcome sampler_check() {
    const tf_oracle::Dist dist = {{"a", 0.7}, {"b", 0.2}, {"c", 0.1}};
    SamplerConfig cfg;
    cfg.temperature = 1.0;
    cfg.top_k = 2;
    cfg.top_p = 1.0;
    const auto freq = tf_oracle::empirical(dist, cfg, 10000, 99);
    const std::map<std::string, double> truth = {{"a", 0.7 / 0.9}, {"b", 0.2 / 0.9}};
    const double tv = tf_oracle::tv_distance(freq, truth);
    const bool c_drawn = freq.contains("c");
    return {!c_drawn && tv < 0.02, std::string("c drawn: ") + (c_drawn ? "yes" : "no") + ", TV " + fmt(tv)};
}

// ---------------------------------------------------------------------------
// Synthetic-benchmark experiments

SyntheticBenchmarkConfig benchmark(std::size_t classes, std::size_t train_per_class, std::uint64_t seed) {
    SyntheticBenchmarkConfig cfg;
    cfg.n_classes = classes;
    cfg.train_per_class = train_per_class;
    cfg.test_per_class = 500;
    cfg.seed = seed;
    return cfg;
}

ScenarioSpec generating_spec(ScenarioKind kind, bool filtered, std::uint64_t seed) {
    ScenarioSpec s;
    s.kind = kind;
    s.filtered = filtered;
    s.generation.count_per_class = 2000;
    s.seed = seed;
    return s;
}

// Filtered pools seen by the experiments, re-verified by the label-filter
// criterion.
struct PoolCheck {
    std::size_t pools = 0;
    std::size_t documents = 0;
    std::size_t violations = 0;
};
PoolCheck pool_check;

void verify_filtered_pool(const LabeledCorpus& train, const GeneratedPool& pool, const ScenarioSpec& spec) {
    const auto vec = TfIdfVectorizer::fit(train);
    const auto model = train_on_corpus(train, vec, spec.filter_train);
    ++pool_check.pools;
    for (const auto& d : pool.corpus.documents()) {
        ++pool_check.documents;
        const auto& got = model.classes()[model.predict(vec.transform(d.text))];
        if (!d.gen_meta || got != d.gen_meta->intended_label || d.label != got) ++pool_check.violations;
    }
}

Outcome complement_direction() {
    std::ostringstream detail;
    bool ok = true;
    for (std::size_t per_class : {50, 25}) {
        std::vector<double> gains;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto b = make_synthetic_benchmark(benchmark(3, per_class, seed));
            const auto spec = generating_spec(ScenarioKind::complement, true, seed);
            const auto pool = prepare_generated_pool(b.train, spec);
            verify_filtered_pool(b.train, pool, spec);
            const auto comp = train_and_evaluate(b.train, b.test, pool, spec);
            auto base_spec = spec;
            base_spec.kind = ScenarioKind::baseline;
            base_spec.filtered = false;
            const auto base = run_scenario(b.train, b.test, base_spec);
            gains.push_back(comp.evaluation.macro_f1 - base.evaluation.macro_f1);
        }
        const double g = mean(gains);
        const double need = per_class == 50 ? 0.0 : 0.01;
        ok = ok && g >= need;
        detail << per_class << "/class: mean gain " << fmt(100.0 * g, 2) << " points (need >= " << fmt(100.0 * need, 0)
               << "); ";
    }
    return {ok, detail.str()};
}

Outcome filtering_direction() {
    std::vector<double> filtered, unfiltered;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto b = make_synthetic_benchmark(benchmark(3, 50, seed));
        auto spec = generating_spec(ScenarioKind::substitution, true, seed);
        spec.generation.lm_order = 2;
        const auto fpool = prepare_generated_pool(b.train, spec);
        verify_filtered_pool(b.train, fpool, spec);
        filtered.push_back(train_and_evaluate(b.train, b.test, fpool, spec).evaluation.macro_f1);
        spec.filtered = false;
        unfiltered.push_back(run_scenario(b.train, b.test, spec).evaluation.macro_f1);
    }
    const double f = mean(filtered), u = mean(unfiltered);
    return {f >= u, "order-2 substitution macro-F1: filtered " + fmt(f) + ", unfiltered " + fmt(u)};
}

Outcome sweep_shape() {
    const std::vector<double> grid = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::map<std::pair<std::string, double>, std::vector<double>> cells;
    std::vector<double> baseline;
    for (auto seed : seeds) {
        // 4 classes so that 0.3 lies above chance.
        const auto b = make_synthetic_benchmark(benchmark(4, 50, seed));
        const auto base = generating_spec(ScenarioKind::complement, true, seed);
        const auto rows = run_filter_quality_sweep(b.train, b.test, grid,
                                                   {ScenarioKind::substitution, ScenarioKind::complement}, {seed}, base);
        verify_filtered_pool(b.train, prepare_generated_pool(b.train, base), base);
        for (const auto& r : rows) {
            if (r.spec.kind == ScenarioKind::baseline) baseline.push_back(r.evaluation.macro_f1);
            else cells[{to_string(r.spec.kind), r.spec.noise_accuracy}].push_back(r.evaluation.macro_f1);
        }
    }
    const double base = mean(baseline);
    const double sub_hi = mean(cells[{"substitution", 1.0}]), sub_lo = mean(cells[{"substitution", 0.3}]);
    bool ok = sub_hi - sub_lo >= 0.03;
    std::ostringstream d;
    d << "substitution a=1.0 " << fmt(sub_hi) << " vs a=0.3 " << fmt(sub_lo) << " (need +3 points); baseline "
      << fmt(base) << "; complement";
    for (double a : grid) {
        const double c = mean(cells[{"complement", a}]);
        d << " " << fmt(a, 1) << ":" << fmt(c);
        if (a >= 0.6 - 1e-9 && !(c > base)) {
            ok = false;
            d << "(<=base)";
        }
    }
    return {ok, d.str()};
}

Outcome label_filter_exactness() {
    return {pool_check.pools > 0 && pool_check.violations == 0,
            std::to_string(pool_check.pools) + " filtered pools, " + std::to_string(pool_check.documents) +
                " documents, " + std::to_string(pool_check.violations) + " with prediction != intended label"};
}

// ---------------------------------------------------------------------------

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("textforge-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string cli = std::string("'") + TEXTFORGE_CLI_PATH + "' -q ";
    auto p = [&](const std::string& f) { return (dir / f).string(); };
    const std::string train = p("train.jsonl"), test = p("test.jsonl");
    struct Invocation {
        std::string args;
        std::vector<std::string> outputs;
    };
    const std::vector<Invocation> runs = {
        {"synth --train-out " + train + " --test-out " + test + " --train-per-class 30 --test-per-class 100", {"train.jsonl", "test.jsonl"}},
        {"generate --train " + train + " --class c0 --count 50 --output " + p("g0.jsonl"), {"g0.jsonl"}},
        {"generate --train " + train + " --count 200 --output " + p("g.jsonl"), {"g.jsonl"}},
        {"filter-leak --generated " + p("g.jsonl") + " --originals " + train + " --output " + p("gl.jsonl") + " --report " + p("leak.json"), {"gl.jsonl", "leak.json"}},
        {"filter-label --generated " + p("gl.jsonl") + " --train " + train + " --output " + p("gf.jsonl") + " --report " + p("label.json"), {"gf.jsonl", "label.json"}},
        {"inject-noise --input " + p("gf.jsonl") + " --classes-from " + train + " --accuracy 0.7 --output " + p("gn.jsonl") + " --report " + p("noise.json"), {"gn.jsonl", "noise.json"}},
        {"train --train " + train + " --train " + p("gf.jsonl") + " --model-out " + p("m.json") + " --vectorizer-out " + p("v.json"), {"m.json", "v.json"}},
        {"evaluate --test " + test + " --model " + p("m.json") + " --vectorizer " + p("v.json") + " --output " + p("e.json"), {"e.json"}},
        {"scenario --train " + train + " --test " + test + " --kind complement --filtered --seed 7 --count 200 --output " + p("s.json") + " --csv " + p("s.csv"), {"s.json", "s.csv"}},
        {"scenario --train " + train + " --test " + test + " --kind sequential --count 200 --output " + p("q.json"), {"q.json"}},
        {"sweep --train " + train + " --test " + test + " --accuracies 0.5 1.0 --seeds 3 4 --count 100 --jobs 2 --output " + p("w.json") + " --csv " + p("w.csv"), {"w.json", "w.csv"}},
    };
    std::size_t compared = 0, differing = 0, failed = 0;
    std::string first_bad;
    for (const auto& inv : runs) {
        std::map<std::string, std::string> first;
        for (int rep = 0; rep < 2; ++rep) {
            if (shell(cli + inv.args + " 2> '" + p("err.txt") + "'") != 0) {
                ++failed;
                if (first_bad.empty()) first_bad = inv.args.substr(0, inv.args.find(' ')) + " exited nonzero";
                break;
            }
            for (const auto& out : inv.outputs) {
                const auto bytes = read_file(dir / out);
                if (rep == 0) first[out] = bytes;
                else {
                    ++compared;
                    if (bytes != first[out]) {
                        ++differing;
                        if (first_bad.empty()) first_bad = out + " differs";
                    }
                }
            }
        }
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    return {failed == 0 && differing == 0 && compared > 0,
            std::to_string(runs.size()) + " invocations, " + std::to_string(compared) + " outputs compared, " +
                std::to_string(differing) + " differing, " + std::to_string(failed) + " failed" +
                (first_bad.empty() ? "" : " (" + first_bad + ")")};
}

}  // namespace

int main() {
    criterion("metric oracle suite", 5, metric_oracle);
    criterion("gradient check and monotone objective traces", 10, gradient_check);
    criterion("leakage-filter exactness", 30, leakage_exactness);
    criterion("sampler distribution check", 5, sampler_check);
    criterion("complement direction", 180, complement_direction);
    criterion("filtering direction", 180, filtering_direction);
    criterion("filter-quality sweep shape", 300, sweep_shape);
    // Runs last: it audits every filtered pool the experiments above produced.
    criterion("label-filter exactness", 0, label_filter_exactness);
    criterion("CLI determinism", 0, cli_determinism);

    std::size_t failures = 0;
    for (const auto& l : lines) {
        failures += !l.pass;
        std::cout << (l.pass ? "PASS" : "FAIL") << "  " << l.name << "  [" << fmt(l.seconds, 2) << " s"
                  << (l.budget > 0 ? " / " + fmt(l.budget, 0) + " s" : "") << "]  " << l.detail << '\n';
    }
    std::cout << (lines.size() - failures) << "/" << lines.size() << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
