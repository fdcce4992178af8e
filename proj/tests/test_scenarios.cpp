#include <gtest/gtest.h>

#include <unordered_set>

#include "test_util.hpp"
#include "textforge/scenarios.hpp"
#include "textforge/synthetic.hpp"

using namespace textforge;
using tf_test::corpus_of;

namespace {

SyntheticBenchmark small_benchmark(std::uint64_t seed = 3) {
    SyntheticBenchmarkConfig cfg;
    cfg.train_per_class = 20;
    cfg.test_per_class = 60;
    cfg.seed = seed;
    return make_synthetic_benchmark(cfg);
}

ScenarioSpec small_spec(ScenarioKind kind, bool filtered) {
    ScenarioSpec s;
    s.kind = kind;
    s.filtered = filtered;
    s.generation.count_per_class = 120;
    s.generation.lm_order = 3;
    s.generation.sampler.max_tokens = 30;
    s.train.max_iter = 300;
    s.filter_train.max_iter = 300;
    return s;
}

}  // namespace

TEST(Scenario, BaselineOnSeparableProblemIsPerfect) {
    const auto train = corpus_of({{"apple banana cherry", "fruit"},
                                  {"banana apple", "fruit"},
                                  {"cherry apple", "fruit"},
                                  {"car truck bus", "vehicle"},
                                  {"bus car", "vehicle"},
                                  {"truck bus", "vehicle"}});
    std::vector<Document> t;
    t.push_back(tf_test::doc("x0", "apple cherry", "fruit"));
    t.push_back(tf_test::doc("x1", "truck car", "vehicle"));
    t.push_back(tf_test::doc("x2", "banana", "fruit"));
    t.push_back(tf_test::doc("x3", "bus", "vehicle"));
    const LabeledCorpus test(std::move(t), train.classes());
    const auto r = run_scenario(train, test, ScenarioSpec{});
    EXPECT_EQ(r.evaluation.micro_f1, 1.0);
    EXPECT_EQ(r.training_size, train.size());
    EXPECT_TRUE(r.filter_reports.empty());
}

TEST(Scenario, SubstitutionWithoutGenerationFailsAtAssembly) {
    const auto b = small_benchmark();
    auto spec = small_spec(ScenarioKind::substitution, false);
    spec.generation.count_per_class = 0;
    try {
        run_scenario(b.train, b.test, spec);
        FAIL() << "expected a stage error";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "assemble");
        EXPECT_NE(std::string(e.what()).find("empty training set"), std::string::npos);
    }
}

TEST(Scenario, ClassMismatchIsRejected) {
    const auto b = small_benchmark();
    const auto other = corpus_of({{"a", "x"}, {"b", "y"}});
    EXPECT_THROW(run_scenario(b.train, other, ScenarioSpec{}), DataError);
}

TEST(Scenario, TestIdsInTrainingAreDetected) {
    const auto b = small_benchmark();
    EXPECT_THROW(run_scenario(b.train, b.train, ScenarioSpec{}), StageError);
}

TEST(Scenario, DeterministicForSameSeed) {
    const auto b = small_benchmark();
    const auto spec = small_spec(ScenarioKind::complement, true);
    const auto r1 = run_scenario(b.train, b.test, spec);
    const auto r2 = run_scenario(b.train, b.test, spec);
    EXPECT_EQ(r1.to_json().dump(), r2.to_json().dump());
    auto other = spec;
    other.seed = 43;
    const auto r3 = run_scenario(b.train, b.test, other);
    EXPECT_NE(r1.filter_reports.at("leakage").to_json().dump(), r3.filter_reports.at("leakage").to_json().dump());
}

TEST(Scenario, PipelineReportsAndSizes) {
    const auto b = small_benchmark();
    const auto sub = run_scenario(b.train, b.test, small_spec(ScenarioKind::substitution, true));
    const auto& leak = sub.filter_reports.at("leakage");
    const auto& label = sub.filter_reports.at("label");
    EXPECT_EQ(leak.input, 3 * 120u);
    EXPECT_EQ(label.input, leak.kept);
    EXPECT_EQ(sub.training_size, label.kept);

    const auto comp = run_scenario(b.train, b.test, small_spec(ScenarioKind::complement, true));
    EXPECT_EQ(comp.training_size, b.train.size() + label.kept);
    const auto seq = run_scenario(b.train, b.test, small_spec(ScenarioKind::sequential, true));
    EXPECT_EQ(seq.training_size, b.train.size() + label.kept);

    const auto unf = run_scenario(b.train, b.test, small_spec(ScenarioKind::substitution, false));
    EXPECT_EQ(unf.filter_reports.count("label"), 0u);
    EXPECT_EQ(unf.training_size, unf.filter_reports.at("leakage").kept);

    for (const auto& name : {"fit-lm", "generate", "filter-leak", "filter-label", "fit-vectorizer", "train", "evaluate"})
        EXPECT_TRUE(sub.timings.contains(name)) << name;
}

TEST(Scenario, FilteredPoolMatchesFilterModel) {
    const auto b = small_benchmark();
    const auto spec = small_spec(ScenarioKind::complement, true);
    const auto pool = prepare_generated_pool(b.train, spec);
    ASSERT_FALSE(pool.corpus.empty());
    const auto vec = TfIdfVectorizer::fit(b.train);
    const auto model = train_on_corpus(b.train, vec, spec.filter_train);
    const auto pred = model.predict(vec.transform(pool.corpus));
    for (std::size_t i = 0; i < pool.corpus.size(); ++i) {
        const auto& d = pool.corpus.documents()[i];
        EXPECT_EQ(b.train.classes()[pred[i]], d.gen_meta->intended_label);
        EXPECT_EQ(d.label, d.gen_meta->intended_label);
    }
}

TEST(Scenario, GeneratedIdsNeverCollideWithTest) {
    const auto b = small_benchmark();
    const auto pool = prepare_generated_pool(b.train, small_spec(ScenarioKind::complement, false));
    std::unordered_set<std::string> ids;
    for (const auto& d : b.test.documents()) ids.insert(d.id);
    for (const auto& d : pool.corpus.documents()) EXPECT_FALSE(ids.contains(d.id));
    for (const auto& d : b.train.documents()) EXPECT_FALSE(ids.contains(d.id));
}

TEST(Scenario, VectorizerFitFlagChangesFeatureSpace) {
    const auto b = small_benchmark();
    auto spec = small_spec(ScenarioKind::substitution, true);
    const auto final_fit = run_scenario(b.train, b.test, spec);
    spec.vectorizer_fit = VectorizerFit::original_training_set;
    const auto original_fit = run_scenario(b.train, b.test, spec);
    EXPECT_EQ(final_fit.training_size, original_fit.training_size);
    EXPECT_GT(original_fit.evaluation.macro_f1, 0.0);
}

TEST(Scenario, NoiseReportRecordsRelabels) {
    const auto b = small_benchmark();
    auto spec = small_spec(ScenarioKind::substitution, true);
    spec.noise_accuracy = 0.6;
    const auto r = run_scenario(b.train, b.test, spec);
    const auto& noise = r.filter_reports.at("noise");
    EXPECT_EQ(noise.input, r.filter_reports.at("label").kept);
    EXPECT_EQ(noise.kept, noise.input);
    EXPECT_EQ(noise.reasons.size(), noise_corruption_count(noise.input, 3, 0.6));
}

TEST(Sweep, FullAccuracyReproducesRunScenario) {
    const auto b = small_benchmark();
    const auto base = small_spec(ScenarioKind::complement, true);
    const auto rows = run_filter_quality_sweep(b.train, b.test, {1.0}, {ScenarioKind::substitution, ScenarioKind::complement},
                                               {42, 7}, base);
    ASSERT_EQ(rows.size(), 2u * 3u);
    for (const auto& row : rows) {
        auto spec = row.spec;
        EXPECT_EQ(row.spec.seed == 42 || row.spec.seed == 7, true);
        if (spec.kind == ScenarioKind::baseline) spec.filtered = false;
        const auto direct = run_scenario(b.train, b.test, spec);
        EXPECT_EQ(direct.evaluation.macro_f1, row.evaluation.macro_f1) << to_string(spec.kind);
        EXPECT_EQ(direct.evaluation.confusion, row.evaluation.confusion);
    }
}

TEST(Sweep, CanonicalOrderAndJobIndependence) {
    const auto b = small_benchmark();
    const auto base = small_spec(ScenarioKind::complement, true);
    const std::vector<double> grid = {0.5, 0.8};
    const std::vector<ScenarioKind> kinds = {ScenarioKind::substitution, ScenarioKind::complement};
    const auto serial = run_filter_quality_sweep(b.train, b.test, grid, kinds, {1, 2}, base, {1, true});
    const auto parallel = run_filter_quality_sweep(b.train, b.test, grid, kinds, {1, 2}, base, {3, true});
    ASSERT_EQ(serial.size(), 2u * 5u);
    EXPECT_EQ(results_to_json(serial).dump(), results_to_json(parallel).dump());
    EXPECT_EQ(serial[0].spec.kind, ScenarioKind::baseline);
    EXPECT_EQ(serial[1].spec.noise_accuracy, 0.5);
    EXPECT_EQ(serial[1].spec.kind, ScenarioKind::substitution);
    EXPECT_EQ(serial[2].spec.kind, ScenarioKind::complement);
    EXPECT_EQ(serial[3].spec.noise_accuracy, 0.8);
    EXPECT_EQ(serial[5].spec.seed, 2u);
}

TEST(Sweep, RejectsAccuracyAtOrBelowChanceAndBaselineStrategy) {
    const auto b = small_benchmark();
    const auto base = small_spec(ScenarioKind::complement, true);
    EXPECT_THROW(run_filter_quality_sweep(b.train, b.test, {0.3}, {ScenarioKind::substitution}, {1}, base), DataError);
    EXPECT_THROW(run_filter_quality_sweep(b.train, b.test, {0.9}, {ScenarioKind::baseline}, {1}, base), DataError);
}

TEST(Report, CsvRowsAndHeader) {
    tf_test::TempDir dir;
    const auto b = small_benchmark();
    const auto base = small_spec(ScenarioKind::complement, true);
    auto rows = run_filter_quality_sweep(b.train, b.test, {0.7}, {ScenarioKind::substitution}, {5}, base);
    ASSERT_EQ(rows.size(), 2u);
    emit_report(rows, dir / "r.json", dir / "r.csv");
    const auto csv = read_file(dir / "r.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "accuracy,strategy,seed,macro_f1");
    EXPECT_NE(csv.find("\n,baseline,5,"), std::string::npos);
    EXPECT_NE(csv.find("\n0.7,substitution,5,"), std::string::npos);

    emit_report({}, dir / "e.json", dir / "e.csv");
    EXPECT_EQ(read_file(dir / "e.csv"), "accuracy,strategy,seed,macro_f1\n");
    EXPECT_TRUE(load_results(dir / "e.json").empty());
}

TEST(Report, JsonReloadIsBitExact) {
    tf_test::TempDir dir;
    const auto b = small_benchmark();
    std::vector<ScenarioResult> rows = {run_scenario(b.train, b.test, small_spec(ScenarioKind::complement, true)),
                                        run_scenario(b.train, b.test, ScenarioSpec{})};
    emit_report(rows, dir / "r.json", {}, json{{"note", "x"}});
    const auto back = load_results(dir / "r.json");
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].evaluation.micro_f1, rows[i].evaluation.micro_f1);
        EXPECT_EQ(back[i].evaluation.macro_f1, rows[i].evaluation.macro_f1);
        EXPECT_EQ(back[i].evaluation.mcc, rows[i].evaluation.mcc);
        EXPECT_EQ(back[i].evaluation.per_class, rows[i].evaluation.per_class);
        EXPECT_EQ(back[i].evaluation.confusion, rows[i].evaluation.confusion);
        EXPECT_EQ(back[i].to_json().dump(), rows[i].to_json().dump());
    }
    EXPECT_EQ(read_json_file(dir / "r.json").at("run_config").at("note"), "x");
    EXPECT_FALSE(std::filesystem::exists(dir / "r.csv"));
}

TEST(Report, SchemaVersionIsChecked) {
    tf_test::TempDir dir;
    write_json_file(dir / "bad.json", json{{"schema_version", 99}, {"results", json::array()}});
    EXPECT_THROW(load_results(dir / "bad.json"), DataError);
}

TEST(ScenarioSpecJson, JsonRoundTrip) {
    ScenarioSpec s = small_spec(ScenarioKind::sequential, true);
    s.seed = 18446744073709551615ull;
    s.noise_accuracy = 0.75;
    s.generation.endpoint = "http://127.0.0.1:9";
    s.generation.sampler.top_p = 0.8;
    s.leakage.strict = true;
    s.train.class_weights = {1.0, 2.0, 0.5};
    s.vectorizer_fit = VectorizerFit::original_training_set;
    const auto back = ScenarioSpec::from_json(json::parse(s.to_json().dump()));
    EXPECT_EQ(back.to_json(), s.to_json());
    EXPECT_EQ(back.seed, s.seed);
    EXPECT_THROW(parse_scenario_kind("mixture"), DataError);
    for (auto k : {ScenarioKind::baseline, ScenarioKind::substitution, ScenarioKind::complement, ScenarioKind::sequential})
        EXPECT_EQ(parse_scenario_kind(to_string(k)), k);
}

TEST(ScenarioSpecJson, DefaultsMatchDocumentedValues) {
    const ScenarioSpec s;
    EXPECT_EQ(s.generation.count_per_class, 16000u);
    EXPECT_EQ(s.generation.sampler.temperature, 0.7);
    EXPECT_EQ(s.generation.sampler.top_p, 0.9);
    EXPECT_EQ(s.generation.sampler.top_k, 40u);
    EXPECT_EQ(s.leakage.window, 5u);
    EXPECT_EQ(s.train.max_iter, 2500u);
    EXPECT_EQ(s.seed, 42u);
}
