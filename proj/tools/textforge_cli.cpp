// textforge command-line tool. Parameters resolve as
// flags > --config file > TEXTFORGE_SEED (seed only) > built-in defaults,
// and every JSON output embeds the resolved configuration.

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "textforge/textforge.hpp"

namespace tf = textforge;
using tf::json;

namespace {

int verbosity = 1;

void info(const std::string& msg) {
    if (verbosity >= 1) std::cerr << "textforge: " << msg << '\n';
}

json default_config() {
    json j = tf::ScenarioSpec{}.to_json();
    j["jobs"] = 1;
    j["verbosity"] = 1;
    j["split"] = {{"test_fraction", 0.2}};
    const tf::SyntheticBenchmarkConfig b;
    j["benchmark"] = {{"classes", b.n_classes},
                      {"vocabulary", b.vocabulary},
                      {"stop_words", b.stop_words},
                      {"stop_mass", b.stop_mass},
                      {"zipf_exponent", b.zipf_exponent},
                      {"shared_content", b.shared_content},
                      {"min_length", b.min_length},
                      {"max_length", b.max_length},
                      {"train_per_class", b.train_per_class},
                      {"test_per_class", b.test_per_class}};
    j["sweep"] = {{"accuracies", {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
                  {"strategies", {"substitution", "complement"}},
                  {"seeds", nullptr}};
    return j;
}

// Rejects keys the defaults do not know, so typos fail loudly.
void check_keys(const json& defaults, const json& given, const std::string& where) {
    if (!given.is_object()) throw tf::DataError(where + " must be a JSON object");
    for (const auto& [key, value] : given.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        auto it = defaults.find(key);
        if (it == defaults.end()) throw tf::DataError("unknown config key '" + path + "'");
        if (it->is_object()) check_keys(*it, value, path);
    }
}

// Flag values that land in the configuration only when given.
class Overrides {
public:
    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
        auto value = std::make_shared<T>();
        auto* opt = app->add_option(flag, *value, help);
        if constexpr (!CLI::detail::is_mutable_container<T>::value)
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        entries_.push_back({opt, json::json_pointer(pointer), [value] { return json(*value); }});
        return opt;
    }

    CLI::Option* add_switch(CLI::App* app, const std::string& flag, const std::string& pointer,
                            const std::string& help) {
        auto value = std::make_shared<bool>(false);
        auto* opt = app->add_flag(flag, *value, help);
        entries_.push_back({opt, json::json_pointer(pointer), [value] { return json(*value); }});
        return opt;
    }

    void apply(json& cfg) const {
        for (const auto& e : entries_)
            if (e.option->count() > 0) cfg[e.pointer] = e.value();
    }

private:
    struct Entry {
        CLI::Option* option;
        json::json_pointer pointer;
        std::function<json()> value;
    };
    std::vector<Entry> entries_;
};

// File paths of one subcommand, echoed under "paths".
class Paths {
public:
    CLI::Option* add(CLI::App* app, const std::string& name, const std::string& help, bool required = false) {
        auto* opt = app->add_option("--" + name, values_[name], help);
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        if (required) opt->required();
        return opt;
    }
    CLI::Option* add_list(CLI::App* app, const std::string& name, const std::string& help, bool required = false) {
        auto* opt = app->add_option("--" + name, lists_[name], help);
        if (required) opt->required();
        return opt;
    }

    const std::string& operator[](const std::string& name) const { return values_.at(name); }
    const std::vector<std::string>& list(const std::string& name) const { return lists_.at(name); }
    bool given(const std::string& name) const {
        auto it = values_.find(name);
        return it != values_.end() && !it->second.empty();
    }

    json to_json() const {
        json j = json::object();
        for (const auto& [k, v] : values_)
            if (!v.empty()) j[k] = v;
        for (const auto& [k, v] : lists_)
            if (!v.empty()) j[k] = v;
        return j;
    }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, std::vector<std::string>> lists_;
};

struct Command {
    CLI::App* app;
    Paths paths;
    std::function<void(const Command&, const json&)> run;
};

tf::LabeledCorpus load(const std::string& path, std::optional<std::vector<std::string>> classes = std::nullopt) {
    auto c = tf::load_corpus(path, std::nullopt, std::move(classes));
    info("loaded " + std::to_string(c.size()) + " documents from " + path);
    return c;
}

tf::ScenarioSpec spec_from(const json& cfg) {
    auto s = tf::ScenarioSpec::from_json(cfg);
    s.train.threads = cfg.at("jobs").get<std::size_t>();
    s.filter_train.threads = s.train.threads;
    return s;
}

json with_config(const json& run_config, const char* key, json value) {
    return {{"run_config", run_config}, {key, std::move(value)}};
}

void add_generation_flags(CLI::App* app, Overrides& ov) {
    ov.add<std::size_t>(app, "--count", "/generation/count_per_class", "Generated documents per class");
    ov.add<double>(app, "--temperature", "/generation/temperature", "Sampling temperature");
    ov.add<std::size_t>(app, "--top-k", "/generation/top_k", "Top-k truncation");
    ov.add<double>(app, "--top-p", "/generation/top_p", "Nucleus mass");
    ov.add<std::size_t>(app, "--max-tokens", "/generation/max_tokens", "Token limit per document");
    ov.add<std::size_t>(app, "--order", "/generation/lm_order", "N-gram order");
    ov.add<double>(app, "--discount", "/generation/discount", "Absolute discount");
    ov.add<std::string>(app, "--endpoint", "/generation/endpoint", "External generation server URL");
}

void add_train_flags(CLI::App* app, Overrides& ov) {
    ov.add<std::size_t>(app, "--max-iter", "/train/max_iter", "Optimizer iteration cap");
    ov.add<double>(app, "--tol", "/train/tol", "Relative objective decrease to stop at");
    ov.add<double>(app, "-C", "/train/C", "Inverse regularization strength");
}

tf::SamplerConfig sampler_from(const tf::ScenarioSpec& spec) {
    auto s = spec.generation.sampler;
    s.seed = tf::derive_seed(spec.seed, "generation");
    return s;
}

std::unique_ptr<tf::GenerationBackend> load_backend_file(const std::string& path) {
    const auto j = tf::read_json_file(path);
    if (j.value("format", "") != "textforge-ngram-backend") throw tf::DataError(path + " is not an n-gram backend file");
    std::map<std::string, tf::NgramLanguageModel> models;
    for (const auto& [label, m] : j.at("models").items()) models.emplace(label, tf::NgramLanguageModel::from_json(m));
    return std::make_unique<tf::NgramBackend>(std::move(models));
}

// --- subcommand bodies -----------------------------------------------------

void run_ingest(const Command& c, const json& cfg) {
    const auto corpus = load(c.paths["input"]);
    tf::save_corpus(corpus, c.paths["output"]);
    const auto stats = with_config(cfg, "stats", tf::class_stats(corpus).to_json());
    if (c.paths.given("stats")) tf::write_json_file(c.paths["stats"], stats);
    else std::cout << stats.dump(2) << '\n';
}

void run_split(const Command& c, const json& cfg) {
    const auto corpus = load(c.paths["input"]);
    const auto parts = tf::stratified_split(corpus, cfg.at("split").at("test_fraction").get<double>(),
                                            tf::derive_seed(cfg.at("seed").get<std::uint64_t>(), "split"));
    tf::save_corpus(parts.train, c.paths["train-out"]);
    tf::save_corpus(parts.test, c.paths["test-out"]);
    info("split into " + std::to_string(parts.train.size()) + " train / " + std::to_string(parts.test.size()) +
         " test documents");
}

void run_synth(const Command& c, const json& cfg) {
    const auto& b = cfg.at("benchmark");
    tf::SyntheticBenchmarkConfig s;
    s.n_classes = b.at("classes").get<std::size_t>();
    s.vocabulary = b.at("vocabulary").get<std::size_t>();
    s.stop_words = b.at("stop_words").get<std::size_t>();
    s.stop_mass = b.at("stop_mass").get<double>();
    s.zipf_exponent = b.at("zipf_exponent").get<double>();
    s.shared_content = b.at("shared_content").get<double>();
    s.min_length = b.at("min_length").get<std::size_t>();
    s.max_length = b.at("max_length").get<std::size_t>();
    s.train_per_class = b.at("train_per_class").get<std::size_t>();
    s.test_per_class = b.at("test_per_class").get<std::size_t>();
    s.seed = cfg.at("seed").get<std::uint64_t>();
    const auto bench = tf::make_synthetic_benchmark(s);
    tf::save_corpus(bench.train, c.paths["train-out"]);
    tf::save_corpus(bench.test, c.paths["test-out"]);
}

void run_fit_lm(const Command& c, const json& cfg) {
    const auto spec = spec_from(cfg);
    const auto train = load(c.paths["train"]);
    json models = json::object();
    for (const auto& label : train.classes()) {
        const auto sub = train.subcorpus(label);
        if (sub.empty()) continue;
        models[label] = tf::NgramLanguageModel::fit(sub, spec.generation.lm_order, spec.generation.discount).to_json();
    }
    tf::write_json_file(c.paths["output"], {{"format", "textforge-ngram-backend"}, {"models", models}});
}

void run_generate(const Command& c, const json& cfg, const std::vector<std::string>& labels) {
    const auto spec = spec_from(cfg);
    const auto train = load(c.paths["train"]);
    std::unique_ptr<tf::GenerationBackend> backend;
    if (!spec.generation.endpoint.empty()) backend = std::make_unique<tf::HttpGenerationBackend>(spec.generation.endpoint, spec.generation.http);
    else if (c.paths.given("lm")) backend = load_backend_file(c.paths["lm"]);
    else backend = tf::detail::make_backend(train, spec.generation);

    tf::LabeledCorpus out({}, train.classes());
    for (const auto& label : labels.empty() ? train.classes() : labels) {
        out = tf::concat(out, tf::generate_corpus(*backend, label, spec.generation.count_per_class, sampler_from(spec), train));
        info("generated " + std::to_string(spec.generation.count_per_class) + " documents for '" + label + "'");
    }
    tf::save_corpus(out, c.paths["output"]);
}

void write_filter_outputs(const Command& c, const json& cfg, const tf::FilterResult& r) {
    tf::save_corpus(r.corpus, c.paths["output"]);
    if (c.paths.given("report")) tf::write_json_file(c.paths["report"], with_config(cfg, "report", r.report.to_json()));
    info("kept " + std::to_string(r.report.kept) + " of " + std::to_string(r.report.input) + " documents");
}

void run_filter_leak(const Command& c, const json& cfg) {
    const auto spec = spec_from(cfg);
    const auto originals = load(c.paths["originals"]);
    const auto generated = load(c.paths["generated"], originals.classes());
    write_filter_outputs(c, cfg, tf::leakage_filter(generated, originals, spec.leakage));
}

void run_filter_label(const Command& c, const json& cfg) {
    const auto spec = spec_from(cfg);
    const auto train = load(c.paths["train"]);
    const auto generated = load(c.paths["generated"], train.classes());
    if (c.paths.given("model") != c.paths.given("vectorizer"))
        throw tf::DataError("--model and --vectorizer must be given together");
    if (c.paths.given("model")) {
        const auto vec = tf::TfIdfVectorizer::load(c.paths["vectorizer"]);
        const auto model = tf::LinearModel::load(c.paths["model"], vec);
        write_filter_outputs(c, cfg, tf::label_filter(generated, model, vec));
        return;
    }
    const auto vec = tf::TfIdfVectorizer::fit(train);
    const auto model = tf::train_on_corpus(train, vec, spec.filter_train);
    write_filter_outputs(c, cfg, tf::label_filter(generated, model, vec));
}

void run_inject_noise(const Command& c, const json& cfg) {
    const auto spec = spec_from(cfg);
    std::optional<std::vector<std::string>> classes;
    if (c.paths.given("classes-from")) classes = load(c.paths["classes-from"]).classes();
    const auto corpus = load(c.paths["input"], classes);
    write_filter_outputs(c, cfg, tf::inject_label_noise(corpus, spec.noise_accuracy, tf::derive_seed(spec.seed, "noise")));
}

void run_train(const Command& c, const json& cfg) {
    const auto spec = spec_from(cfg);
    const auto& files = c.paths.list("train");
    auto corpus = load(files.front());
    for (std::size_t i = 1; i < files.size(); ++i) corpus = tf::concat(corpus, load(files[i], corpus.classes()));
    const auto vec = tf::TfIdfVectorizer::fit(corpus);
    const auto model = tf::train_on_corpus(corpus, vec, spec.train);
    vec.save(c.paths["vectorizer-out"]);
    model.save(c.paths["model-out"]);
    info("trained on " + std::to_string(corpus.size()) + " documents, " + std::to_string(vec.dimension()) + " features");
}

std::vector<std::size_t> predictions(const std::string& model_path, const std::string& vec_path,
                                     const tf::LabeledCorpus& test) {
    const auto vec = tf::TfIdfVectorizer::load(vec_path);
    const auto model = tf::LinearModel::load(model_path, vec);
    if (model.classes() != test.classes()) throw tf::DataError("model classes differ from the test corpus classes");
    return model.predict(vec.transform(test));
}

tf::LabeledCorpus load_test_for(const std::string& model_path, const std::string& test_path) {
    const auto classes = tf::read_json_file(model_path).at("classes").get<std::vector<std::string>>();
    return load(test_path, classes);
}

void run_evaluate(const Command& c, const json& cfg) {
    const auto test = load_test_for(c.paths["model"], c.paths["test"]);
    const auto pred = predictions(c.paths["model"], c.paths["vectorizer"], test);
    const auto report = tf::evaluate(test.label_indices(), pred, test.classes().size(), test.classes());
    tf::write_json_file(c.paths["output"], with_config(cfg, "evaluation", report.to_json()));
    info("macro-F1 " + std::to_string(report.macro_f1) + ", micro-F1 " + std::to_string(report.micro_f1));
}

void run_agree(const Command& c, const json& cfg) {
    const auto test = load_test_for(c.paths["model-a"], c.paths["test"]);
    const auto a = predictions(c.paths["model-a"], c.paths["vectorizer-a"], test);
    const auto b = predictions(c.paths["model-b"], c.paths["vectorizer-b"], test);
    const auto r = tf::agreement(test.label_indices(), a, b, test.classes().size());
    tf::write_json_file(c.paths["output"], with_config(cfg, "agreement", r.to_json(test.classes())));
}

void run_scenario_cmd(const Command& c, const json& cfg) {
    const auto spec = spec_from(cfg);
    const auto train = load(c.paths["train"]);
    const auto test = load(c.paths["test"], train.classes());
    const auto result = tf::run_scenario(train, test, spec);
    tf::emit_report({result}, c.paths["output"], c.paths.given("csv") ? c.paths["csv"] : "", cfg);
    info(tf::to_string(spec.kind) + (spec.filtered ? " (filtered)" : "") + ": macro-F1 " +
         std::to_string(result.evaluation.macro_f1));
}

void run_sweep(const Command& c, json& cfg, bool with_reasons) {
    auto& sw = cfg.at("sweep");
    if (sw.at("seeds").is_null()) {
        const auto base = cfg.at("seed").get<std::uint64_t>();
        sw["seeds"] = json::array();
        for (std::uint64_t i = 0; i < 5; ++i) sw["seeds"].push_back(base + i);
    }
    auto spec = spec_from(cfg);
    std::vector<tf::ScenarioKind> kinds;
    for (const auto& s : sw.at("strategies")) kinds.push_back(tf::parse_scenario_kind(s.get<std::string>()));
    const auto train = load(c.paths["train"]);
    const auto test = load(c.paths["test"], train.classes());
    tf::SweepOptions opt;
    opt.jobs = cfg.at("jobs").get<std::size_t>();
    // Cells already run in parallel; keep each training single-threaded.
    if (opt.jobs > 1) spec.train.threads = spec.filter_train.threads = 1;
    const auto rows = tf::run_filter_quality_sweep(train, test, sw.at("accuracies").get<std::vector<double>>(), kinds,
                                                   sw.at("seeds").get<std::vector<std::uint64_t>>(), spec, opt);
    tf::emit_report(rows, c.paths["output"], c.paths.given("csv") ? c.paths["csv"] : "", cfg, with_reasons);
    info("wrote " + std::to_string(rows.size()) + " sweep rows");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"textforge: generated-data augmentation experiments for text classification"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides ov;
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    ov.add<std::uint64_t>(&app, "--seed", "/seed", "Global seed (default 42, or $TEXTFORGE_SEED)");
    ov.add<std::size_t>(&app, "--jobs", "/jobs", "Parallel workers");
    auto* verbose = app.add_flag("-v,--verbose", "More log output");
    auto* quiet = app.add_flag("-q,--quiet", "No log output");

    std::vector<std::unique_ptr<Command>> commands;
    auto command = [&](const std::string& name, const std::string& help) -> Command& {
        commands.push_back(std::make_unique<Command>());
        commands.back()->app = app.add_subcommand(name, help);
        return *commands.back();
    };

    {
        auto& c = command("ingest", "Validate a JSONL/CSV corpus, store it as JSONL and print class statistics");
        c.paths.add(c.app, "input", "Input corpus", true);
        c.paths.add(c.app, "output", "Output JSONL corpus", true);
        c.paths.add(c.app, "stats", "Write statistics here instead of stdout");
        c.run = run_ingest;
    }
    {
        auto& c = command("split", "Stratified train/test split");
        c.paths.add(c.app, "input", "Input corpus", true);
        c.paths.add(c.app, "train-out", "Train side", true);
        c.paths.add(c.app, "test-out", "Test side", true);
        ov.add<double>(c.app, "--test-fraction", "/split/test_fraction", "Share of each class sent to the test side");
        c.run = run_split;
    }
    {
        auto& c = command("synth", "Write the synthetic benchmark corpora");
        c.paths.add(c.app, "train-out", "Train corpus", true);
        c.paths.add(c.app, "test-out", "Test corpus", true);
        ov.add<std::size_t>(c.app, "--classes", "/benchmark/classes", "Number of classes");
        ov.add<std::size_t>(c.app, "--train-per-class", "/benchmark/train_per_class", "Train documents per class");
        ov.add<std::size_t>(c.app, "--test-per-class", "/benchmark/test_per_class", "Test documents per class");
        c.run = run_synth;
    }
    {
        auto& c = command("fit-lm", "Fit one n-gram language model per class");
        c.paths.add(c.app, "train", "Original corpus", true);
        c.paths.add(c.app, "output", "Backend file", true);
        ov.add<std::size_t>(c.app, "--order", "/generation/lm_order", "N-gram order");
        ov.add<double>(c.app, "--discount", "/generation/discount", "Absolute discount");
        c.run = run_fit_lm;
    }
    auto labels = std::make_shared<std::vector<std::string>>();
    {
        auto& c = command("generate", "Generate documents per class");
        c.paths.add(c.app, "train", "Original corpus (prompt source and class list)", true);
        c.paths.add(c.app, "lm", "Backend file from fit-lm (default: fit on --train)");
        c.paths.add(c.app, "output", "Generated corpus", true);
        c.app->add_option("--class", *labels, "Class to generate (repeatable, default all)");
        add_generation_flags(c.app, ov);
        c.run = [labels](const Command& cmd, const json& cfg) { run_generate(cmd, cfg, *labels); };
    }
    {
        auto& c = command("filter-leak", "Drop generated documents sharing a token window with an original");
        c.paths.add(c.app, "generated", "Generated corpus", true);
        c.paths.add(c.app, "originals", "Original corpus", true);
        c.paths.add(c.app, "output", "Kept documents", true);
        c.paths.add(c.app, "report", "Filter report JSON");
        ov.add<std::size_t>(c.app, "--window", "/leakage/window", "Window length in tokens");
        ov.add_switch(c.app, "--strict", "/leakage/strict", "Match originals of every class");
        ov.add<bool>(c.app, "--collapse-duplicates", "/leakage/collapse_duplicates", "Collapse identical documents");
        c.run = run_filter_leak;
    }
    {
        auto& c = command("filter-label", "Keep generated documents a classifier assigns to their intended class");
        c.paths.add(c.app, "generated", "Generated corpus", true);
        c.paths.add(c.app, "train", "Original corpus for the filter model", true);
        c.paths.add(c.app, "model", "Pretrained filter model (with --vectorizer)");
        c.paths.add(c.app, "vectorizer", "Vectorizer of the pretrained model");
        c.paths.add(c.app, "output", "Kept documents", true);
        c.paths.add(c.app, "report", "Filter report JSON");
        c.run = run_filter_label;
    }
    {
        auto& c = command("inject-noise", "Relabel documents to simulate a filter of given accuracy");
        c.paths.add(c.app, "input", "Corpus", true);
        c.paths.add(c.app, "classes-from", "Corpus whose class list to use");
        c.paths.add(c.app, "output", "Noisy corpus", true);
        c.paths.add(c.app, "report", "Report JSON");
        ov.add<double>(c.app, "--accuracy", "/noise_accuracy", "Target label accuracy")->required();
        c.run = run_inject_noise;
    }
    {
        auto& c = command("train", "Fit TF-IDF and a one-vs-rest logistic regression");
        c.paths.add_list(c.app, "train", "Training corpus (repeatable, concatenated)", true);
        c.paths.add(c.app, "model-out", "Model file", true);
        c.paths.add(c.app, "vectorizer-out", "Vectorizer file", true);
        add_train_flags(c.app, ov);
        c.run = run_train;
    }
    {
        auto& c = command("evaluate", "Score a model on a test corpus");
        c.paths.add(c.app, "test", "Test corpus", true);
        c.paths.add(c.app, "model", "Model file", true);
        c.paths.add(c.app, "vectorizer", "Vectorizer file", true);
        c.paths.add(c.app, "output", "Evaluation JSON", true);
        c.run = run_evaluate;
    }
    {
        auto& c = command("agree", "Compare the predictions of two models");
        c.paths.add(c.app, "test", "Test corpus", true);
        c.paths.add(c.app, "model-a", "First model", true);
        c.paths.add(c.app, "vectorizer-a", "First vectorizer", true);
        c.paths.add(c.app, "model-b", "Second model", true);
        c.paths.add(c.app, "vectorizer-b", "Second vectorizer", true);
        c.paths.add(c.app, "output", "Agreement JSON", true);
        c.run = run_agree;
    }
    {
        auto& c = command("scenario", "Run one training scenario end to end");
        c.paths.add(c.app, "train", "Original training corpus", true);
        c.paths.add(c.app, "test", "Test corpus", true);
        c.paths.add(c.app, "output", "Results JSON", true);
        c.paths.add(c.app, "csv", "Plot CSV");
        ov.add<std::string>(c.app, "--kind", "/kind", "baseline, substitution, complement or sequential");
        ov.add_switch(c.app, "--filtered", "/filtered", "Apply the label filter");
        ov.add<double>(c.app, "--noise-accuracy", "/noise_accuracy", "Simulated filter accuracy");
        ov.add<std::string>(c.app, "--vectorizer-fit", "/vectorizer_fit", "final or original");
        add_generation_flags(c.app, ov);
        add_train_flags(c.app, ov);
        c.run = run_scenario_cmd;
    }
    auto no_reasons = std::make_shared<bool>(false);
    {
        auto& c = command("sweep", "Filter-quality sweep over simulated filter accuracies");
        c.paths.add(c.app, "train", "Original training corpus", true);
        c.paths.add(c.app, "test", "Test corpus", true);
        c.paths.add(c.app, "output", "Results JSON", true);
        c.paths.add(c.app, "csv", "Plot CSV");
        ov.add<std::vector<double>>(c.app, "--accuracies", "/sweep/accuracies", "Accuracy grid");
        ov.add<std::vector<std::string>>(c.app, "--strategies", "/sweep/strategies", "substitution and/or complement");
        ov.add<std::vector<std::uint64_t>>(c.app, "--seeds", "/sweep/seeds", "Seeds (default: --seed .. --seed+4)");
        c.app->add_flag("--no-reasons", *no_reasons, "Omit per-document filter reasons from the JSON");
        add_generation_flags(c.app, ov);
        add_train_flags(c.app, ov);
        c.run = [no_reasons](const Command& cmd, const json& cfg) {
            json copy = cfg;
            run_sweep(cmd, copy, !*no_reasons);
        };
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const Command* chosen = nullptr;
    for (const auto& c : commands)
        if (c->app->parsed()) chosen = c.get();
    const std::string name = chosen->app->get_name();

    json cfg;
    try {
        cfg = default_config();
        if (const char* env = std::getenv("TEXTFORGE_SEED"); env && *env) {
            std::size_t used = 0;
            const std::string s(env);
            const auto v = std::stoull(s, &used);
            if (used != s.size()) throw tf::DataError("TEXTFORGE_SEED is not an unsigned integer: " + s);
            cfg["seed"] = v;
        }
        if (!config_path.empty()) {
            const auto file = tf::read_json_file(config_path);
            check_keys(cfg, file, "");
            cfg.merge_patch(file);
        }
        ov.apply(cfg);
        cfg["verbosity"] = quiet->count() ? 0 : (verbose->count() ? 2 : cfg.at("verbosity").get<int>());
        verbosity = cfg.at("verbosity").get<int>();
        spec_from(cfg);  // type-checks the scenario part
    } catch (const std::exception& e) {
        std::cerr << "textforge: error: config: " << e.what() << '\n';
        return 2;
    }
    cfg["command"] = name;
    cfg["paths"] = chosen->paths.to_json();

    try {
        try {
            chosen->run(*chosen, cfg);
        } catch (const tf::StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw tf::StageError(name, e.what());
        }
    } catch (const tf::StageError& e) {
        std::cerr << "textforge: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
