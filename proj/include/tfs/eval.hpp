#ifndef TFS_EVAL_HPP
#define TFS_EVAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tfs/baselines.hpp"
#include "tfs/precision.hpp"
#include "tfs/solver.hpp"
#include "tfs/synth.hpp"
#include "tfs/windowing.hpp"

namespace tfs {

struct ConfusionMatrix {
    Eigen::MatrixXi counts; // rows = truth, cols = predicted
    int n_excluded = 0;     // unlabeled-sentinel predictions, kept out of the counts

    int total() const { return counts.sum(); }
};

// Counts over aligned prediction/truth lists. Predictions equal to
// kUnlabeledCell are excluded and tallied separately; anything else out of
// range is an error.
ConfusionMatrix confusion_matrix(const std::vector<int>& predictions,
                                 const std::vector<int>& truth, int n_classes);

double accuracy(const ConfusionMatrix& cm);

// Unweighted mean of per-class F1. A class absent from both truth and
// predictions is excluded from the mean; a class present in truth but never
// predicted contributes zero.
double macro_f1(const ConfusionMatrix& cm);

// Support-weighted mean of per-class F1 (secondary metric).
double weighted_f1(const ConfusionMatrix& cm);

struct MethodSpec {
    enum class Family { kSimpleShot, kTransductive };
    Family family = Family::kTransductive;
    SimpleShotVariant variant = SimpleShotVariant::kUN; // simpleshot only
    PrecisionMode precision_mode = PrecisionMode::kGlasso;
    double lambda = 1250.0;
    std::string name;
};

// Method grammar: "simpleshot:un|l2n|cl2n", "glasso[:lambda]",
// "identity[:lambda]". Omitted lambdas default to default_lambda.
MethodSpec parse_method(const std::string& token, double default_lambda = 1250.0);
std::vector<MethodSpec> parse_method_list(const std::string& tokens,
                                          double default_lambda = 1250.0);

enum class TaskSource { kTask, kSlide };

struct BenchmarkConfig {
    TaskSource source = TaskSource::kTask;
    TaskGenParams task_params;   // source == kTask (its seed is overridden per rep)
    SlideGenParams slide_params; // source == kSlide (likewise)
    WindowSpec window;           // slide sweep geometry
    GlassoConfig glasso;
    SolverConfig solver; // lambda and precision_mode are taken from the method
    int repetitions = 10;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct MethodResult {
    std::string method;
    double mean_accuracy = 0.0;
    double stderr_accuracy = 0.0;
    double mean_macro_f1 = 0.0;
    double stderr_macro_f1 = 0.0;
    int n_tasks = 0;    // repetitions scored
    int n_failures = 0; // repetitions skipped for this method
};

// Runs every method on an identical stream of generated tasks or slides.
// Deterministic per seed and invariant to method order and thread count.
std::vector<MethodResult> benchmark_run(const std::vector<MethodSpec>& methods,
                                        const BenchmarkConfig& cfg);

// "method,mean_accuracy,stderr_accuracy,mean_macro_f1,stderr_macro_f1,n_tasks"
void write_results_csv(const std::vector<MethodResult>& results, const std::string& path);

// Slide pipeline used by the benchmark and the sweep command: fit models on
// the support block if needed, solve every window, fuse the posteriors.
ClassMap run_slide_method(const MethodSpec& method, const SlideGrid& grid,
                          const FeatureMatrix& features,
                          const std::vector<int>& support_indices, const Matrix& support_labels,
                          const WindowSpec& window, const GlassoConfig& glasso,
                          const SolverConfig& solver_base, int threads = 1);

ClassMap run_slide_method(const MethodSpec& method, const GeneratedSlide& slide,
                          const WindowSpec& window, const GlassoConfig& glasso,
                          const SolverConfig& solver_base, int threads = 1);

} // namespace tfs

#endif
