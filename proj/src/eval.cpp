#include "tfs/eval.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tfs/parallel.hpp"

namespace tfs {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct F1Accumulator {
    double macro_sum = 0.0;
    int macro_count = 0;
    double weighted_sum = 0.0;
    int weighted_total = 0;
};

F1Accumulator per_class_f1(const ConfusionMatrix& cm) {
    const int k_classes = static_cast<int>(cm.counts.rows());
    F1Accumulator acc;
    for (int k = 0; k < k_classes; ++k) {
        const int tp = cm.counts(k, k);
        const int truth_count = cm.counts.row(k).sum();
        const int pred_count = cm.counts.col(k).sum();
        if (truth_count == 0 && pred_count == 0) continue; // class absent everywhere
        const int fp = pred_count - tp;
        const int fn = truth_count - tp;
        const double f1 = (2 * tp + fp + fn) > 0
                              ? 2.0 * tp / static_cast<double>(2 * tp + fp + fn)
                              : 0.0;
        acc.macro_sum += f1;
        acc.macro_count += 1;
        acc.weighted_sum += f1 * truth_count;
        acc.weighted_total += truth_count;
    }
    return acc;
}

struct Score {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    bool failed = false;
};

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double sq = 0.0;
        for (double x : xs) sq += (x - out.mean) * (x - out.mean);
        const double var = sq / static_cast<double>(xs.size() - 1);
        out.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
    }
    return out;
}

Score score_task_method(const MethodSpec& method, const GeneratedTask& data,
                        const GlassoConfig& glasso, const SolverConfig& solver_base) {
    std::vector<int> predictions;
    if (method.family == MethodSpec::Family::kSimpleShot) {
        predictions = simpleshot(data.task, data.features, method.variant);
    } else {
        std::vector<ClassModel> models;
        if (method.precision_mode == PrecisionMode::kGlasso)
            models = fit_class_models(data.task, data.features, glasso);
        SolverConfig cfg = solver_base;
        cfg.lambda = method.lambda;
        cfg.precision_mode = method.precision_mode;
        predictions = solve(data.task, data.features, models, cfg).query_predictions;
    }
    const ConfusionMatrix cm = confusion_matrix(predictions, data.query_truth,
                                                data.task.n_classes);
    Score score;
    score.accuracy = accuracy(cm);
    score.macro_f1 = macro_f1(cm);
    return score;
}

Score score_slide_method(const MethodSpec& method, const GeneratedSlide& slide,
                         const WindowSpec& window, const GlassoConfig& glasso,
                         const SolverConfig& solver_base) {
    const ClassMap map = run_slide_method(method, slide, window, glasso, solver_base);
    std::vector<int> predictions;
    std::vector<int> truth;
    for (const auto& cell : slide.grid.cells) {
        if (!cell.true_class) continue;
        predictions.push_back(map.at(cell.row, cell.col).argmax);
        truth.push_back(*cell.true_class);
    }
    const ConfusionMatrix cm = confusion_matrix(predictions, truth, slide.grid.n_classes);
    Score score;
    score.accuracy = accuracy(cm);
    score.macro_f1 = macro_f1(cm);
    return score;
}

} // namespace

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& truth, int n_classes) {
    if (predictions.size() != truth.size())
        throw DataError("confusion matrix: prediction and truth lengths differ");
    if (predictions.empty()) throw DataError("confusion matrix: empty input");
    if (n_classes < 1) throw DataError("confusion matrix: n_classes must be >= 1");

    ConfusionMatrix cm;
    cm.counts = Eigen::MatrixXi::Zero(n_classes, n_classes);
    for (size_t i = 0; i < predictions.size(); ++i) {
        const int t = truth[i];
        const int p = predictions[i];
        if (t < 0 || t >= n_classes)
            throw DataError("confusion matrix: truth label " + std::to_string(t) +
                            " out of range");
        if (p == kUnlabeledCell) {
            ++cm.n_excluded;
            continue;
        }
        if (p < 0 || p >= n_classes)
            throw DataError("confusion matrix: prediction " + std::to_string(p) +
                            " out of range");
        cm.counts(t, p) += 1;
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const int total = cm.total();
    if (total == 0) return 0.0;
    return static_cast<double>(cm.counts.trace()) / static_cast<double>(total);
}

double macro_f1(const ConfusionMatrix& cm) {
    const F1Accumulator acc = per_class_f1(cm);
    return acc.macro_count > 0 ? acc.macro_sum / acc.macro_count : 0.0;
}

double weighted_f1(const ConfusionMatrix& cm) {
    const F1Accumulator acc = per_class_f1(cm);
    return acc.weighted_total > 0 ? acc.weighted_sum / acc.weighted_total : 0.0;
}

MethodSpec parse_method(const std::string& token, double default_lambda) {
    const auto colon = token.find(':');
    const std::string head = colon == std::string::npos ? token : token.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : token.substr(colon + 1);

    MethodSpec spec;
    if (head == "simpleshot") {
        spec.family = MethodSpec::Family::kSimpleShot;
        spec.variant = parse_simpleshot_variant(arg.empty() ? "un" : arg);
        spec.name = "simpleshot:" + simpleshot_variant_name(spec.variant);
        return spec;
    }
    if (head == "glasso" || head == "identity") {
        spec.family = MethodSpec::Family::kTransductive;
        spec.precision_mode =
            head == "glasso" ? PrecisionMode::kGlasso : PrecisionMode::kIdentity;
        spec.lambda = default_lambda;
        if (!arg.empty()) {
            try {
                size_t used = 0;
                spec.lambda = std::stod(arg, &used);
                if (used != arg.size() || spec.lambda < 0.0) throw std::invalid_argument(arg);
            } catch (const std::exception&) {
                throw DataError("method '" + token + "': bad lambda value");
            }
        }
        std::ostringstream name;
        name << head << ':' << spec.lambda;
        spec.name = name.str();
        return spec;
    }
    throw DataError("unknown method '" + token +
                    "' (expected simpleshot:<variant>, glasso[:lambda] or identity[:lambda])");
}

std::vector<MethodSpec> parse_method_list(const std::string& tokens, double default_lambda) {
    std::vector<MethodSpec> methods;
    std::stringstream ss(tokens);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) methods.push_back(parse_method(token, default_lambda));
    }
    if (methods.empty()) throw DataError("empty method list");
    return methods;
}

ClassMap run_slide_method(const MethodSpec& method, const SlideGrid& grid,
                          const FeatureMatrix& features,
                          const std::vector<int>& support_indices, const Matrix& support_labels,
                          const WindowSpec& window, const GlassoConfig& glasso,
                          const SolverConfig& solver_base, int threads) {
    if (method.family == MethodSpec::Family::kSimpleShot) {
        // Inductive path: classify every cell in one task and report the
        // predictions as one-hot posteriors with coverage 1.
        FewShotTask task;
        task.support_indices = support_indices;
        task.support_labels = support_labels;
        task.n_classes = grid.n_classes;
        for (const auto& cell : grid.cells) task.query_indices.push_back(cell.feature_index);
        const std::vector<int> predictions = simpleshot(task, features, method.variant);

        ClassMap map;
        map.n_rows = grid.n_rows;
        map.n_cols = grid.n_cols;
        map.n_classes = grid.n_classes;
        map.cells.assign(static_cast<size_t>(map.n_rows) * static_cast<size_t>(map.n_cols),
                         MapCell{});
        for (size_t i = 0; i < grid.cells.size(); ++i) {
            const auto& cell = grid.cells[i];
            MapCell& out = map.cells[static_cast<size_t>(cell.row) *
                                         static_cast<size_t>(map.n_cols) +
                                     static_cast<size_t>(cell.col)];
            out.posterior = Vector::Zero(map.n_classes);
            out.posterior[predictions[i]] = 1.0;
            out.argmax = predictions[i];
            out.coverage = 1;
        }
        return map;
    }

    std::vector<ClassModel> models;
    if (method.precision_mode == PrecisionMode::kGlasso) {
        FewShotTask support_task;
        support_task.support_indices = support_indices;
        support_task.support_labels = support_labels;
        support_task.n_classes = grid.n_classes;
        models = fit_class_models(support_task, features, glasso, threads);
    }

    SolverConfig cfg = solver_base;
    cfg.lambda = method.lambda;
    cfg.precision_mode = method.precision_mode;

    const WindowPlan plan = build_windows(grid, window, support_indices, support_labels);
    std::vector<Matrix> posteriors(plan.windows.size());
    parallel_for(static_cast<int>(plan.windows.size()), threads, [&](int w) {
        const SolveResult result =
            solve(plan.windows[static_cast<size_t>(w)].task, features, models, cfg);
        posteriors[static_cast<size_t>(w)] = result.assignments.query_rows();
    });
    return aggregate(plan.windows, posteriors, grid);
}

ClassMap run_slide_method(const MethodSpec& method, const GeneratedSlide& slide,
                          const WindowSpec& window, const GlassoConfig& glasso,
                          const SolverConfig& solver_base, int threads) {
    return run_slide_method(method, slide.grid, slide.features, slide.support_indices,
                            slide.support_labels, window, glasso, solver_base, threads);
}

std::vector<MethodResult> benchmark_run(const std::vector<MethodSpec>& methods,
                                        const BenchmarkConfig& cfg) {
    if (methods.empty()) throw DataError("benchmark needs at least one method");
    if (cfg.repetitions < 1) throw DataError("benchmark needs at least one repetition");

    // Per-repetition seeds drawn up front so that the task stream does not
    // depend on the method list or evaluation order.
    std::vector<std::uint64_t> rep_seeds(static_cast<size_t>(cfg.repetitions));
    {
        Rng root(cfg.seed);
        for (auto& s : rep_seeds) s = root.next_u64();
    }

    std::vector<std::vector<Score>> scores(
        methods.size(), std::vector<Score>(static_cast<size_t>(cfg.repetitions)));

    parallel_for(cfg.repetitions, cfg.threads, [&](int rep) {
        if (cfg.source == TaskSource::kTask) {
            TaskGenParams params = cfg.task_params;
            params.seed = rep_seeds[static_cast<size_t>(rep)];
            const GeneratedTask data = gen_task(params);
            for (size_t m = 0; m < methods.size(); ++m) {
                try {
                    scores[m][static_cast<size_t>(rep)] =
                        score_task_method(methods[m], data, cfg.glasso, cfg.solver);
                } catch (const std::exception&) {
                    scores[m][static_cast<size_t>(rep)].failed = true;
                }
            }
        } else {
            SlideGenParams params = cfg.slide_params;
            params.seed = rep_seeds[static_cast<size_t>(rep)];
            const GeneratedSlide slide = gen_slide(params);
            for (size_t m = 0; m < methods.size(); ++m) {
                try {
                    scores[m][static_cast<size_t>(rep)] =
                        score_slide_method(methods[m], slide, cfg.window, cfg.glasso, cfg.solver);
                } catch (const std::exception&) {
                    scores[m][static_cast<size_t>(rep)].failed = true;
                }
            }
        }
    });

    std::vector<MethodResult> results;
    results.reserve(methods.size());
    for (size_t m = 0; m < methods.size(); ++m) {
        MethodResult r;
        r.method = methods[m].name;
        std::vector<double> accs, f1s;
        for (const Score& s : scores[m]) {
            if (s.failed) {
                ++r.n_failures;
                continue;
            }
            accs.push_back(s.accuracy);
            f1s.push_back(s.macro_f1);
        }
        const MeanStderr acc = mean_stderr(accs);
        const MeanStderr f1 = mean_stderr(f1s);
        r.mean_accuracy = acc.mean;
        r.stderr_accuracy = acc.stderr_;
        r.mean_macro_f1 = f1.mean;
        r.stderr_macro_f1 = f1.stderr_;
        r.n_tasks = static_cast<int>(accs.size());
        results.push_back(std::move(r));
    }
    return results;
}

void write_results_csv(const std::vector<MethodResult>& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write results file '" + path + "'");
    out << "method,mean_accuracy,stderr_accuracy,mean_macro_f1,stderr_macro_f1,n_tasks\n";
    for (const auto& r : results) {
        out << r.method << ',' << format_double(r.mean_accuracy) << ','
            << format_double(r.stderr_accuracy) << ',' << format_double(r.mean_macro_f1) << ','
            << format_double(r.stderr_macro_f1) << ',' << r.n_tasks << '\n';
    }
    if (!out) throw DataError("write failure on '" + path + "'");
}

} // namespace tfs
