#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tfs/eval.hpp"

using namespace tfs;

TEST_CASE("perfect predictions score one on both metrics") {
    const std::vector<int> truth = {0, 1, 2, 0, 1};
    const ConfusionMatrix cm = confusion_matrix(truth, truth, 3);
    CHECK(accuracy(cm) == 1.0);
    CHECK(macro_f1(cm) == 1.0);
    CHECK(weighted_f1(cm) == 1.0);
    CHECK(cm.total() == 5);
}

TEST_CASE("a constant majority-class predictor scores the majority share") {
    // Truth proportions 26/14/8/12/40 out of 100; predicting the last class
    // everywhere is right exactly 40% of the time.
    std::vector<int> truth;
    const int counts[5] = {26, 14, 8, 12, 40};
    for (int k = 0; k < 5; ++k)
        for (int i = 0; i < counts[k]; ++i) truth.push_back(k);
    const std::vector<int> predictions(truth.size(), 4);
    const ConfusionMatrix cm = confusion_matrix(predictions, truth, 5);
    CHECK(accuracy(cm) == doctest::Approx(0.40).epsilon(1e-12));
}

TEST_CASE("macro f1 follows the documented two-class example") {
    // Two classes, everything predicted as class 0, truth half and half:
    // accuracy 1/2, macro F1 = (2/3 + 0) / 2 = 1/3.
    std::vector<int> truth, predictions;
    for (int i = 0; i < 10; ++i) {
        truth.push_back(i < 5 ? 0 : 1);
        predictions.push_back(0);
    }
    const ConfusionMatrix cm = confusion_matrix(predictions, truth, 2);
    CHECK(accuracy(cm) == doctest::Approx(0.5));
    CHECK(macro_f1(cm) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("classes absent from truth and predictions drop out of the macro mean") {
    // Class 2 never appears anywhere; the mean runs over two classes only.
    const std::vector<int> truth = {0, 0, 1, 1};
    const std::vector<int> predictions = {0, 0, 1, 0};
    const ConfusionMatrix cm = confusion_matrix(predictions, truth, 3);
    const double f1_class0 = 2.0 * 2 / (2.0 * 2 + 1 + 0);
    const double f1_class1 = 2.0 * 1 / (2.0 * 1 + 0 + 1);
    CHECK(macro_f1(cm) == doctest::Approx((f1_class0 + f1_class1) / 2.0).epsilon(1e-12));
}

TEST_CASE("sentinel predictions are excluded and counted") {
    const std::vector<int> truth = {0, 1, 1};
    const std::vector<int> predictions = {0, kUnlabeledCell, 1};
    const ConfusionMatrix cm = confusion_matrix(predictions, truth, 2);
    CHECK(cm.n_excluded == 1);
    CHECK(cm.total() == 2);
    CHECK(accuracy(cm) == 1.0);
}

TEST_CASE("metric inputs are validated") {
    CHECK_THROWS_AS(confusion_matrix({0}, {0, 1}, 2), DataError);
    CHECK_THROWS_AS(confusion_matrix({}, {}, 2), DataError);
    CHECK_THROWS_AS(confusion_matrix({0}, {5}, 2), DataError);
    CHECK_THROWS_AS(confusion_matrix({5}, {0}, 2), DataError);
}

TEST_CASE("confusion matrix entries sum to the number of scored samples") {
    const std::vector<int> truth = {0, 1, 2, 2, 1, 0, 2};
    const std::vector<int> predictions = {0, 2, 2, 1, 1, 0, kUnlabeledCell};
    const ConfusionMatrix cm = confusion_matrix(predictions, truth, 3);
    CHECK(cm.total() + cm.n_excluded == static_cast<int>(truth.size()));
}

TEST_CASE("method parsing covers the full grammar") {
    const MethodSpec ss = parse_method("simpleshot:cl2n");
    CHECK(ss.family == MethodSpec::Family::kSimpleShot);
    CHECK(ss.variant == SimpleShotVariant::kCL2N);
    CHECK(ss.name == "simpleshot:cl2n");

    const MethodSpec full = parse_method("glasso:1250");
    CHECK(full.family == MethodSpec::Family::kTransductive);
    CHECK(full.precision_mode == PrecisionMode::kGlasso);
    CHECK(full.lambda == 1250.0);

    const MethodSpec ablation = parse_method("identity:0");
    CHECK(ablation.precision_mode == PrecisionMode::kIdentity);
    CHECK(ablation.lambda == 0.0);

    const MethodSpec defaulted = parse_method("glasso", 99.0);
    CHECK(defaulted.lambda == 99.0);

    CHECK_THROWS_AS(parse_method("unknown"), DataError);
    CHECK_THROWS_AS(parse_method("glasso:minus"), DataError);
    CHECK(parse_method_list("glasso:0,identity:0,simpleshot:un").size() == 3);
    CHECK_THROWS_AS(parse_method_list(""), DataError);
}

TEST_CASE("benchmark rows match direct metric calls on a deterministic task") {
    BenchmarkConfig cfg;
    cfg.source = TaskSource::kTask;
    cfg.task_params.n_classes = 3;
    cfg.task_params.dim = 6;
    cfg.task_params.shots_per_class = 4;
    cfg.task_params.queries_per_class = 5;
    cfg.task_params.separation = 2.0;
    cfg.repetitions = 1;
    cfg.seed = 5;

    const auto methods = parse_method_list("simpleshot:un");
    const auto results = benchmark_run(methods, cfg);
    REQUIRE(results.size() == 1);
    CHECK(results[0].n_tasks == 1);
    CHECK(results[0].stderr_accuracy == 0.0);

    // Rebuild the task stream by hand and compare.
    Rng root(5);
    TaskGenParams params = cfg.task_params;
    params.seed = root.next_u64();
    const GeneratedTask data = gen_task(params);
    const auto predictions = simpleshot(data.task, data.features, SimpleShotVariant::kUN);
    const ConfusionMatrix cm =
        confusion_matrix(predictions, data.query_truth, data.task.n_classes);
    CHECK(results[0].mean_accuracy == doctest::Approx(accuracy(cm)).epsilon(1e-15));
    CHECK(results[0].mean_macro_f1 == doctest::Approx(macro_f1(cm)).epsilon(1e-15));
}

TEST_CASE("duplicate methods give identical rows and order does not matter") {
    BenchmarkConfig cfg;
    cfg.source = TaskSource::kTask;
    cfg.task_params.n_classes = 3;
    cfg.task_params.dim = 4;
    cfg.task_params.shots_per_class = 3;
    cfg.task_params.queries_per_class = 4;
    cfg.task_params.separation = 1.5;
    cfg.repetitions = 4;
    cfg.seed = 11;
    cfg.solver.max_iters = 50;

    const auto twice = benchmark_run(parse_method_list("identity:0,identity:0"), cfg);
    CHECK(twice[0].mean_accuracy == twice[1].mean_accuracy);
    CHECK(twice[0].mean_macro_f1 == twice[1].mean_macro_f1);

    const auto ab = benchmark_run(parse_method_list("identity:0,simpleshot:un"), cfg);
    const auto ba = benchmark_run(parse_method_list("simpleshot:un,identity:0"), cfg);
    CHECK(ab[0].mean_accuracy == ba[1].mean_accuracy);
    CHECK(ab[1].mean_accuracy == ba[0].mean_accuracy);

    const auto again = benchmark_run(parse_method_list("identity:0,simpleshot:un"), cfg);
    CHECK(ab[0].mean_accuracy == again[0].mean_accuracy);
    CHECK(ab[1].mean_accuracy == again[1].mean_accuracy);
}

TEST_CASE("thread count does not change benchmark results") {
    BenchmarkConfig cfg;
    cfg.source = TaskSource::kSlide;
    cfg.slide_params.n_rows = 8;
    cfg.slide_params.n_cols = 8;
    cfg.slide_params.block = 4;
    cfg.slide_params.dim = 6;
    cfg.slide_params.shots_per_class = 4;
    cfg.slide_params.separation = 2.0;
    cfg.window = WindowSpec{4, 2};
    cfg.repetitions = 3;
    cfg.seed = 21;
    cfg.solver.max_iters = 40;

    const auto methods = parse_method_list("glasso:25,simpleshot:un");
    cfg.threads = 1;
    const auto serial = benchmark_run(methods, cfg);
    cfg.threads = 8;
    const auto parallel = benchmark_run(methods, cfg);
    for (size_t m = 0; m < methods.size(); ++m) {
        CHECK(serial[m].mean_accuracy == parallel[m].mean_accuracy);
        CHECK(serial[m].mean_macro_f1 == parallel[m].mean_macro_f1);
        CHECK(serial[m].stderr_accuracy == parallel[m].stderr_accuracy);
    }
}

TEST_CASE("results files carry the documented header") {
    std::vector<MethodResult> results(1);
    results[0].method = "glasso:1250";
    results[0].mean_accuracy = 0.75;
    results[0].n_tasks = 10;
    const std::string path =
        (std::filesystem::temp_directory_path() / "tfs_test_results.csv").string();
    write_results_csv(results, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "method,mean_accuracy,stderr_accuracy,mean_macro_f1,stderr_macro_f1,n_tasks");
    std::string row;
    std::getline(in, row);
    CHECK(row.find("glasso:1250") != std::string::npos);
    std::remove(path.c_str());
}
