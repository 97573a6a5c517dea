// tfs — transductive few-shot classification toolkit, batch front end.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tfs/eval.hpp"
#include "tfs/io.hpp"
#include "tfs/parallel.hpp"
#include "tfs/stain.hpp"

namespace fs = std::filesystem;
using namespace tfs;

namespace {

void attach_config(CLI::App* cmd) {
    cmd->set_config("--config", "", "Config file mirroring the flags (key=value lines)");
    cmd->allow_config_extras(CLI::config_extras_mode::error);
}

// Query files: either a bare "index" column or an "index,class" table whose
// class column is ignored. Order is preserved.
std::vector<int> read_query_indices(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open query file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("query file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool with_class = line == "index,class";
    if (!with_class && line != "index")
        throw DataError("query file '" + path + "': expected header \"index\" or \"index,class\"");

    std::vector<int> indices;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            const auto comma = line.find(',');
            const std::string head = with_class ? line.substr(0, comma) : line;
            if (with_class && comma == std::string::npos) throw std::invalid_argument(line);
            size_t used = 0;
            const int idx = std::stoi(head, &used);
            if (used != head.size() || idx < 0) throw std::invalid_argument(line);
            indices.push_back(idx);
        } catch (const std::exception&) {
            throw DataError("query file '" + path + "': malformed row at line " +
                            std::to_string(line_no));
        }
    }
    if (indices.empty()) throw DataError("query file '" + path + "' lists no queries");
    return indices;
}

struct SupportBlock {
    std::vector<int> indices;
    Matrix labels;
    int n_classes = 0;
};

SupportBlock support_from_labels(const std::map<int, int>& labels, std::optional<int> n_classes) {
    if (labels.empty()) throw DataError("support label file lists no samples");
    int max_class = 0;
    for (const auto& [idx, cls] : labels) max_class = std::max(max_class, cls);
    SupportBlock block;
    block.n_classes = n_classes.value_or(max_class + 1);
    block.labels = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), block.n_classes);
    int row = 0;
    for (const auto& [idx, cls] : labels) {
        if (cls >= block.n_classes)
            throw DataError("support class " + std::to_string(cls) + " out of range");
        block.indices.push_back(idx);
        block.labels(row, cls) = 1.0;
        ++row;
    }
    return block;
}

FewShotTask make_task(const SupportBlock& support, const std::vector<int>& queries) {
    FewShotTask task;
    task.support_indices = support.indices;
    task.support_labels = support.labels;
    task.query_indices = queries;
    task.n_classes = support.n_classes;
    return task;
}

std::string join_path(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

// ---------------------------------------------------------------------------
// synth-task / synth-slide

struct SynthTaskOpts {
    std::string out_dir;
    TaskGenParams params;
    std::string cov = "identity";
};

void run_synth_task(const SynthTaskOpts& opts) {
    SynthTaskOpts resolved = opts;
    resolved.params.covariance = parse_covariance_spec(opts.cov);
    const GeneratedTask data = gen_task(resolved.params);
    fs::create_directories(opts.out_dir);
    write_features(data.features, join_path(opts.out_dir, "features.fsf"));

    std::map<int, int> support;
    for (int i = 0; i < data.task.n_support(); ++i)
        support[data.task.support_indices[static_cast<size_t>(i)]] = data.task.support_class(i);
    write_labels(support, join_path(opts.out_dir, "support.csv"));

    std::ofstream queries(join_path(opts.out_dir, "queries.csv"));
    queries << "index\n";
    for (int idx : data.task.query_indices) queries << idx << '\n';

    std::map<int, int> truth;
    for (size_t i = 0; i < data.query_truth.size(); ++i)
        truth[data.task.query_indices[i]] = data.query_truth[i];
    write_labels(truth, join_path(opts.out_dir, "truth.csv"));
}

struct SynthSlideOpts {
    std::string out_dir;
    SlideGenParams params;
    std::string cov = "spd";
    std::vector<double> priors;
};

void run_synth_slide(const SynthSlideOpts& opts) {
    SynthSlideOpts resolved = opts;
    resolved.params.covariance = parse_covariance_spec(opts.cov);
    if (!opts.priors.empty()) resolved.params.priors = opts.priors;
    const GeneratedSlide slide = gen_slide(resolved.params);
    fs::create_directories(opts.out_dir);
    write_features(slide.features, join_path(opts.out_dir, "features.fsf"));
    write_manifest(slide.grid, join_path(opts.out_dir, "manifest.csv"));

    std::map<int, int> support;
    for (size_t i = 0; i < slide.support_indices.size(); ++i) {
        int cls = 0;
        slide.support_labels.row(static_cast<Eigen::Index>(i)).maxCoeff(&cls);
        support[slide.support_indices[i]] = cls;
    }
    write_labels(support, join_path(opts.out_dir, "support.csv"));
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
    std::string features_path;
    std::string labels_path;
    std::string out_path = "model.json";
    std::optional<int> n_classes{};
    std::optional<double> rho{};
    double lambda = 1250.0;
    int max_sweeps = 200;
    double kkt_tol = 1e-4;
    double jitter = 1e-8;
    int threads = 1;
};

void run_fit(const FitOpts& opts) {
    const FeatureMatrix features = read_features(opts.features_path);
    const auto labels = read_labels(opts.labels_path, opts.n_classes);
    const SupportBlock support = support_from_labels(labels, opts.n_classes);
    const FewShotTask task = make_task(support, {});

    GlassoConfig cfg;
    cfg.rho = opts.rho;
    cfg.max_sweeps = opts.max_sweeps;
    cfg.kkt_tol = opts.kkt_tol;
    cfg.jitter = opts.jitter;

    ModelFile model;
    model.dim = features.dim();
    model.n_classes = support.n_classes;
    model.lambda = opts.lambda;
    model.rho = opts.rho;
    model.models = fit_class_models(task, features, cfg, opts.threads);
    write_model(model, opts.out_path);
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyOpts {
    std::string model_path;
    std::string features_path;
    std::string support_path;
    std::string queries_path;
    std::string out_path = "posteriors.csv";
    std::optional<double> lambda{};
    std::string precision = "glasso";
    int max_iters = 100;
    double rel_tol = 1e-6;
};

PrecisionMode parse_precision(const std::string& name) {
    if (name == "glasso") return PrecisionMode::kGlasso;
    if (name == "identity") return PrecisionMode::kIdentity;
    throw DataError("unknown precision mode '" + name + "' (expected glasso or identity)");
}

void run_classify(const ClassifyOpts& opts) {
    const ModelFile model = read_model(opts.model_path);
    const FeatureMatrix features = read_features(opts.features_path);
    if (features.dim() != model.dim)
        throw DataError("feature dimension does not match the model");
    const auto labels = read_labels(opts.support_path, model.n_classes);
    const SupportBlock support = support_from_labels(labels, model.n_classes);
    const std::vector<int> queries = read_query_indices(opts.queries_path);
    const FewShotTask task = make_task(support, queries);

    SolverConfig cfg;
    cfg.lambda = opts.lambda.value_or(model.lambda);
    cfg.max_iters = opts.max_iters;
    cfg.rel_tol = opts.rel_tol;
    cfg.precision_mode = parse_precision(opts.precision);

    const SolveResult result = solve(task, features, model.models, cfg);
    write_posteriors(task.query_indices, result.assignments.query_rows(), opts.out_path);
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
    std::string manifest_path;
    std::string features_path;
    std::string model_path;
    std::string support_path;
    std::string out_map = "class_map.csv";
    std::string out_image;
    int span = 5;
    int stride = 2;
    std::optional<double> lambda{};
    std::string precision = "glasso";
    int max_iters = 100;
    double rel_tol = 1e-6;
    int threads = 1;
};

void run_sweep(const SweepOpts& opts) {
    const SlideGrid grid = read_manifest(opts.manifest_path);
    const FeatureMatrix features = read_features(opts.features_path);
    const ModelFile model = read_model(opts.model_path);
    if (model.n_classes != grid.n_classes)
        throw DataError("model and manifest disagree on the class count");
    if (features.dim() != model.dim)
        throw DataError("feature dimension does not match the model");
    const auto labels = read_labels(opts.support_path, grid.n_classes);
    const SupportBlock support = support_from_labels(labels, grid.n_classes);

    SolverConfig cfg;
    cfg.lambda = opts.lambda.value_or(model.lambda);
    cfg.max_iters = opts.max_iters;
    cfg.rel_tol = opts.rel_tol;
    cfg.precision_mode = parse_precision(opts.precision);

    const WindowPlan plan =
        build_windows(grid, WindowSpec{opts.span, opts.stride}, support.indices, support.labels);
    for (const auto& warning : plan.warnings) std::cerr << "warning: " << warning << '\n';

    std::vector<Matrix> posteriors(plan.windows.size());
    parallel_for(static_cast<int>(plan.windows.size()), opts.threads, [&](int w) {
        const SolveResult result =
            solve(plan.windows[static_cast<size_t>(w)].task, features, model.models, cfg);
        posteriors[static_cast<size_t>(w)] = result.assignments.query_rows();
    });
    const ClassMap map = aggregate(plan.windows, posteriors, grid);
    write_class_map_csv(map, opts.out_map);
    if (!opts.out_image.empty()) write_class_map_ppm(map, opts.out_image);
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
    std::string methods = "glasso:1250,glasso:0,identity:0,simpleshot:un";
    std::string source = "task";
    std::string out_path = "results.csv";
    int repetitions = 10;
    std::uint64_t seed = 0;
    int threads = 1;
    double lambda = 1250.0;
    // task-source generator
    int classes = 5;
    int dim = 32;
    int shots = 10;
    int queries = 5;
    double separation = 4.0;
    std::string cov = "spd";
    // slide-source generator
    int rows = 20;
    int cols = 20;
    int block = 5;
    std::vector<double> priors;
    int span = 5;
    int stride = 2;
    // shared solver/glasso knobs
    std::optional<double> rho{};
    int max_iters = 100;
    double rel_tol = 1e-6;
};

void run_bench(const BenchOpts& opts) {
    BenchmarkConfig cfg;
    if (opts.source == "task")
        cfg.source = TaskSource::kTask;
    else if (opts.source == "slide")
        cfg.source = TaskSource::kSlide;
    else
        throw DataError("unknown source '" + opts.source + "' (expected task or slide)");

    cfg.task_params.n_classes = opts.classes;
    cfg.task_params.dim = opts.dim;
    cfg.task_params.shots_per_class = opts.shots;
    cfg.task_params.queries_per_class = opts.queries;
    cfg.task_params.separation = opts.separation;
    cfg.task_params.covariance = parse_covariance_spec(opts.cov);

    cfg.slide_params.n_rows = opts.rows;
    cfg.slide_params.n_cols = opts.cols;
    cfg.slide_params.block = opts.block;
    if (!opts.priors.empty()) cfg.slide_params.priors = opts.priors;
    cfg.slide_params.dim = opts.dim;
    cfg.slide_params.shots_per_class = opts.shots;
    cfg.slide_params.separation = opts.separation;
    cfg.slide_params.covariance = parse_covariance_spec(opts.cov);

    cfg.window = WindowSpec{opts.span, opts.stride};
    cfg.glasso.rho = opts.rho;
    cfg.solver.max_iters = opts.max_iters;
    cfg.solver.rel_tol = opts.rel_tol;
    cfg.repetitions = opts.repetitions;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;

    const auto methods = parse_method_list(opts.methods, opts.lambda);
    const auto results = benchmark_run(methods, cfg);
    write_results_csv(results, opts.out_path);
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    std::string pred_path;
    std::string truth_path;
    std::string out_path;
};

std::string first_line(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

void run_eval(const EvalOpts& opts) {
    // Truth: either a label CSV keyed by feature index, or a manifest whose
    // cells carry classes (keyed by position and by feature index).
    std::map<int, int> truth_by_index;
    std::map<std::pair<int, int>, int> truth_by_cell;
    std::optional<int> n_classes{};
    const std::string truth_header = first_line(opts.truth_path);
    if (truth_header.rfind("grid,", 0) == 0) {
        const SlideGrid grid = read_manifest(opts.truth_path);
        n_classes = grid.n_classes;
        for (const auto& cell : grid.cells) {
            if (!cell.true_class) continue;
            truth_by_index[cell.feature_index] = *cell.true_class;
            truth_by_cell[{cell.row, cell.col}] = *cell.true_class;
        }
    } else {
        truth_by_index = read_labels(opts.truth_path);
    }
    if (truth_by_index.empty()) throw DataError("truth file carries no labeled samples");

    std::vector<int> predictions, truth;
    int skipped_unmatched = 0;
    const std::string pred_header = first_line(opts.pred_path);
    if (pred_header.rfind("query_index", 0) == 0) {
        const PosteriorTable table = read_posteriors(opts.pred_path);
        for (size_t i = 0; i < table.query_indices.size(); ++i) {
            const auto it = truth_by_index.find(table.query_indices[i]);
            if (it == truth_by_index.end()) {
                ++skipped_unmatched;
                continue;
            }
            predictions.push_back(table.argmax[i]);
            truth.push_back(it->second);
        }
    } else if (pred_header.rfind("row,col,argmax", 0) == 0) {
        if (truth_by_cell.empty())
            throw DataError("class-map predictions need a manifest truth file");
        const ClassMap map = read_class_map_csv(opts.pred_path);
        for (const auto& [cell, cls] : truth_by_cell) {
            if (cell.first >= map.n_rows || cell.second >= map.n_cols) {
                ++skipped_unmatched;
                continue;
            }
            predictions.push_back(map.at(cell.first, cell.second).argmax);
            truth.push_back(cls);
        }
    } else if (pred_header == "index,class") {
        for (const auto& [idx, cls] : read_labels(opts.pred_path)) {
            const auto it = truth_by_index.find(idx);
            if (it == truth_by_index.end()) {
                ++skipped_unmatched;
                continue;
            }
            predictions.push_back(cls);
            truth.push_back(it->second);
        }
    } else {
        throw DataError("unrecognized prediction file header: " + pred_header);
    }

    if (predictions.empty())
        throw DataError("no prediction rows matched the truth file");
    int k = n_classes.value_or(0);
    if (k == 0) {
        for (int t : truth) k = std::max(k, t + 1);
        for (int p : predictions) k = std::max(k, p + 1);
    }
    const ConfusionMatrix cm = confusion_matrix(predictions, truth, k);

    std::ostringstream report;
    report << "accuracy," << accuracy(cm) << '\n'
           << "macro_f1," << macro_f1(cm) << '\n'
           << "weighted_f1," << weighted_f1(cm) << '\n'
           << "scored," << cm.total() << '\n'
           << "unlabeled_predictions," << cm.n_excluded << '\n'
           << "unmatched_rows," << skipped_unmatched << '\n';
    std::cout << report.str();
    if (!opts.out_path.empty()) {
        std::ofstream out(opts.out_path);
        if (!out) throw DataError("cannot write metrics file '" + opts.out_path + "'");
        out << "metric,value\n" << report.str();
    }
}

// ---------------------------------------------------------------------------
// stain-normalize

struct StainOpts {
    std::string input_path;
    std::string output_path;
    std::string target_stats_path;
    std::string target_image_path;
    std::string dump_stats_path;
};

void run_stain(const StainOpts& opts) {
    const Image input = read_ppm(opts.input_path);
    if (!opts.dump_stats_path.empty()) write_stats(compute_stats(input), opts.dump_stats_path);

    if (opts.output_path.empty()) {
        if (opts.dump_stats_path.empty())
            throw DataError("stain-normalize needs --output or --dump-stats");
        return;
    }
    ChannelStats target;
    if (!opts.target_stats_path.empty() && !opts.target_image_path.empty())
        throw DataError("give either --target-stats or --target-image, not both");
    if (!opts.target_stats_path.empty())
        target = read_stats(opts.target_stats_path);
    else if (!opts.target_image_path.empty())
        target = compute_stats(read_ppm(opts.target_image_path));
    else
        throw DataError("normalization needs --target-stats or --target-image");
    write_ppm(normalize(input, target), opts.output_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transductive few-shot classification toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;

    // synth-task
    SynthTaskOpts synth_task_opts;
    auto* synth_task_cmd =
        app.add_subcommand("synth-task", "Generate a Gaussian few-shot task");
    synth_task_cmd->add_option("--out-dir", synth_task_opts.out_dir, "Output directory")
        ->required();
    synth_task_cmd->add_option("--classes", synth_task_opts.params.n_classes, "Class count");
    synth_task_cmd->add_option("--dim", synth_task_opts.params.dim, "Feature dimension");
    synth_task_cmd->add_option("--shots", synth_task_opts.params.shots_per_class,
                               "Support shots per class");
    synth_task_cmd->add_option("--queries", synth_task_opts.params.queries_per_class,
                               "Query samples per class");
    synth_task_cmd->add_option("--separation", synth_task_opts.params.separation,
                               "Distance of class means from the origin");
    synth_task_cmd->add_option("--cov", synth_task_opts.cov,
                               "Class covariance family: identity|diagonal|spd");
    synth_task_cmd->add_option("--seed", seed, "Random seed");
    attach_config(synth_task_cmd);
    synth_task_cmd->callback([&]() {
        synth_task_opts.params.seed = seed;
        run_synth_task(synth_task_opts);
    });

    // synth-slide
    SynthSlideOpts synth_slide_opts;
    auto* synth_slide_cmd =
        app.add_subcommand("synth-slide", "Generate a coherent synthetic slide");
    synth_slide_cmd->add_option("--out-dir", synth_slide_opts.out_dir, "Output directory")
        ->required();
    synth_slide_cmd->add_option("--rows", synth_slide_opts.params.n_rows, "Grid rows");
    synth_slide_cmd->add_option("--cols", synth_slide_opts.params.n_cols, "Grid columns");
    synth_slide_cmd->add_option("--block", synth_slide_opts.params.block,
                                "Side of the same-class rectangles");
    synth_slide_cmd->add_option("--priors", synth_slide_opts.priors,
                                "Class priors (must sum to 1)");
    synth_slide_cmd->add_option("--dim", synth_slide_opts.params.dim, "Feature dimension");
    synth_slide_cmd->add_option("--shots", synth_slide_opts.params.shots_per_class,
                                "Support shots per class");
    synth_slide_cmd->add_option("--separation", synth_slide_opts.params.separation,
                                "Distance of class means from the origin");
    synth_slide_cmd->add_option("--cov", synth_slide_opts.cov,
                                "Class covariance family: identity|diagonal|spd");
    synth_slide_cmd->add_option("--seed", seed, "Random seed");
    attach_config(synth_slide_cmd);
    synth_slide_cmd->callback([&]() {
        synth_slide_opts.params.seed = seed;
        run_synth_slide(synth_slide_opts);
    });

    // fit
    FitOpts fit_opts;
    auto* fit_cmd = app.add_subcommand("fit", "Fit per-class Gaussian models");
    fit_cmd->add_option("--features", fit_opts.features_path, "Feature file (.fsf)")->required();
    fit_cmd->add_option("--labels", fit_opts.labels_path, "Support label CSV")->required();
    fit_cmd->add_option("--out", fit_opts.out_path, "Model file to write");
    fit_cmd->add_option("--classes", fit_opts.n_classes, "Class count (default: from labels)");
    fit_cmd->add_option("--rho", fit_opts.rho,
                        "Graphical lasso penalty (default: 0.1 * mean covariance diagonal)");
    fit_cmd->add_option("--lambda", fit_opts.lambda, "Partition penalty stored in the model");
    fit_cmd->add_option("--max-sweeps", fit_opts.max_sweeps, "Graphical lasso sweep cap");
    fit_cmd->add_option("--kkt-tol", fit_opts.kkt_tol, "Graphical lasso convergence tolerance");
    fit_cmd->add_option("--jitter", fit_opts.jitter, "Diagonal jitter on Cholesky failure");
    fit_cmd->add_option("--threads", fit_opts.threads, "Concurrent per-class fits");
    fit_cmd->add_option("--seed", seed, "Accepted for uniformity; fitting is deterministic");
    attach_config(fit_cmd);
    fit_cmd->callback([&]() { run_fit(fit_opts); });

    // classify
    ClassifyOpts classify_opts;
    auto* classify_cmd =
        app.add_subcommand("classify", "Jointly label one query batch");
    classify_cmd->add_option("--model", classify_opts.model_path, "Model file")->required();
    classify_cmd->add_option("--features", classify_opts.features_path, "Feature file")
        ->required();
    classify_cmd->add_option("--support", classify_opts.support_path, "Support label CSV")
        ->required();
    classify_cmd->add_option("--queries", classify_opts.queries_path, "Query index CSV")
        ->required();
    classify_cmd->add_option("--out", classify_opts.out_path, "Posterior CSV to write");
    classify_cmd->add_option("--lambda", classify_opts.lambda,
                             "Partition penalty (default: value stored in the model)");
    classify_cmd->add_option("--precision", classify_opts.precision,
                             "Precision source: glasso|identity");
    classify_cmd->add_option("--max-iters", classify_opts.max_iters, "Iteration cap");
    classify_cmd->add_option("--rel-tol", classify_opts.rel_tol,
                             "Relative objective-change stop threshold");
    classify_cmd->add_option("--seed", seed, "Accepted for uniformity; solving is deterministic");
    attach_config(classify_cmd);
    classify_cmd->callback([&]() { run_classify(classify_opts); });

    // sweep
    SweepOpts sweep_opts;
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Slide a window over a tiled grid and fuse the predictions");
    sweep_cmd->add_option("--manifest", sweep_opts.manifest_path, "Slide manifest CSV")
        ->required();
    sweep_cmd->add_option("--features", sweep_opts.features_path, "Feature file")->required();
    sweep_cmd->add_option("--model", sweep_opts.model_path, "Model file")->required();
    sweep_cmd->add_option("--support", sweep_opts.support_path, "Support label CSV")->required();
    sweep_cmd->add_option("--span", sweep_opts.span, "Window side, in cells");
    sweep_cmd->add_option("--stride", sweep_opts.stride, "Window stride, in cells");
    sweep_cmd->add_option("--out-map", sweep_opts.out_map, "Class map CSV to write");
    sweep_cmd->add_option("--out-image", sweep_opts.out_image, "Class map PPM to write");
    sweep_cmd->add_option("--lambda", sweep_opts.lambda,
                          "Partition penalty (default: value stored in the model)");
    sweep_cmd->add_option("--precision", sweep_opts.precision,
                          "Precision source: glasso|identity");
    sweep_cmd->add_option("--max-iters", sweep_opts.max_iters, "Iteration cap per window");
    sweep_cmd->add_option("--rel-tol", sweep_opts.rel_tol,
                          "Relative objective-change stop threshold");
    sweep_cmd->add_option("--threads", sweep_opts.threads, "Concurrent windows");
    sweep_cmd->add_option("--seed", seed, "Accepted for uniformity; sweeping is deterministic");
    attach_config(sweep_cmd);
    sweep_cmd->callback([&]() { run_sweep(sweep_opts); });

    // bench
    BenchOpts bench_opts;
    auto* bench_cmd =
        app.add_subcommand("bench", "Compare methods on generated tasks or slides");
    bench_cmd->add_option("--methods", bench_opts.methods,
                          "Comma list: simpleshot:<un|l2n|cl2n>, glasso[:lambda], "
                          "identity[:lambda]");
    bench_cmd->add_option("--source", bench_opts.source, "Task stream: task|slide");
    bench_cmd->add_option("--reps", bench_opts.repetitions, "Repetitions");
    bench_cmd->add_option("--seed", bench_opts.seed, "Random seed");
    bench_cmd->add_option("--threads", bench_opts.threads, "Concurrent repetitions");
    bench_cmd->add_option("--out", bench_opts.out_path, "Results CSV to write");
    bench_cmd->add_option("--lambda", bench_opts.lambda,
                          "Default partition penalty for methods without one");
    bench_cmd->add_option("--classes", bench_opts.classes, "Class count (task source)");
    bench_cmd->add_option("--dim", bench_opts.dim, "Feature dimension");
    bench_cmd->add_option("--shots", bench_opts.shots, "Support shots per class");
    bench_cmd->add_option("--queries", bench_opts.queries, "Queries per class (task source)");
    bench_cmd->add_option("--separation", bench_opts.separation, "Class mean separation");
    bench_cmd->add_option("--cov", bench_opts.cov,
                          "Class covariance family: identity|diagonal|spd");
    bench_cmd->add_option("--rows", bench_opts.rows, "Grid rows (slide source)");
    bench_cmd->add_option("--cols", bench_opts.cols, "Grid columns (slide source)");
    bench_cmd->add_option("--block", bench_opts.block, "Region block side (slide source)");
    bench_cmd->add_option("--priors", bench_opts.priors, "Class priors (slide source)");
    bench_cmd->add_option("--span", bench_opts.span, "Window side (slide source)");
    bench_cmd->add_option("--stride", bench_opts.stride, "Window stride (slide source)");
    bench_cmd->add_option("--rho", bench_opts.rho, "Graphical lasso penalty");
    bench_cmd->add_option("--max-iters", bench_opts.max_iters, "Solver iteration cap");
    bench_cmd->add_option("--rel-tol", bench_opts.rel_tol, "Solver stop threshold");
    attach_config(bench_cmd);
    bench_cmd->callback([&]() { run_bench(bench_opts); });

    // eval
    EvalOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
    eval_cmd->add_option("--pred", eval_opts.pred_path,
                         "Posterior CSV, class-map CSV, or index,class CSV")
        ->required();
    eval_cmd->add_option("--truth", eval_opts.truth_path, "Label CSV or manifest with classes")
        ->required();
    eval_cmd->add_option("--out", eval_opts.out_path, "Metrics CSV to write");
    eval_cmd->add_option("--seed", seed, "Accepted for uniformity; scoring is deterministic");
    attach_config(eval_cmd);
    eval_cmd->callback([&]() { run_eval(eval_opts); });

    // stain-normalize
    StainOpts stain_opts;
    auto* stain_cmd =
        app.add_subcommand("stain-normalize", "Reinhard color normalization of a PPM image");
    stain_cmd->add_option("--input", stain_opts.input_path, "Input PPM (P6)")->required();
    stain_cmd->add_option("--output", stain_opts.output_path, "Output PPM");
    stain_cmd->add_option("--target-stats", stain_opts.target_stats_path,
                          "Target statistics JSON");
    stain_cmd->add_option("--target-image", stain_opts.target_image_path,
                          "Reference image to match");
    stain_cmd->add_option("--dump-stats", stain_opts.dump_stats_path,
                          "Write the input image's statistics to this JSON file");
    stain_cmd->add_option("--seed", seed, "Accepted for uniformity; the transform is deterministic");
    attach_config(stain_cmd);
    stain_cmd->callback([&]() { run_stain(stain_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
