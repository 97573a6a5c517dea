#ifndef TFS_SOLVER_HPP
#define TFS_SOLVER_HPP

#include <functional>
#include <vector>

#include "tfs/objective.hpp"
#include "tfs/types.hpp"

namespace tfs {

enum class PrecisionMode { kGlasso, kIdentity };

struct SolverConfig {
    double lambda = 1250.0;
    int max_iters = 100;
    // Stop when the relative total-objective change falls below rel_tol and
    // the last assignment update moved no query entry by more than rel_tol.
    double rel_tol = 1e-6;
    PrecisionMode precision_mode = PrecisionMode::kGlasso;
    // Floor applied to proportions (then renormalized) inside logits, so a
    // temporarily wiped-out class stays recoverable.
    double pi_floor = 1e-12;
};

// Mahalanobis metric of one class as used by the updates: lower Cholesky
// factor of the precision and the cached log determinant.
struct ClassMetric {
    Matrix chol_l;
    double log_det = 0.0;
};

// Metrics from fitted models, or identity metrics when the mode asks for
// them (the ablation path needs no models at all).
std::vector<ClassMetric> solver_metrics(const std::vector<ClassModel>& models,
                                        PrecisionMode mode, int dim, int n_classes);

struct SolveState {
    AssignmentMatrix assignments;
    Matrix centroids; // K x d
    Proportions proportions;
};

struct SolveResult {
    AssignmentMatrix assignments;
    Matrix centroids;
    Proportions proportions;
    std::vector<ObjectiveBreakdown> objective_trace; // initial state first
    int iterations = 0;
    bool converged = false;
    std::vector<int> query_predictions; // argmax per query row, lowest id on ties
};

// Per-class means of the support samples.
Matrix class_support_means(const FewShotTask& task, const FeatureMatrix& features);

// Softmax assignment step: logits are -0.5 * Mahalanobis + 0.5 * log_det
// plus (lambda / |Q|) * ln(pi) when lambda > 0. Returns the query rows.
Matrix assignment_update(const FeatureMatrix& features, const FewShotTask& task,
                         const Matrix& centroids, const std::vector<ClassMetric>& metrics,
                         const Proportions& pi, double lambda, double pi_floor = 1e-12);

// Weighted mean of all task samples under the assignment weights.
Matrix centroid_update(const FeatureMatrix& features, const FewShotTask& task,
                       const AssignmentMatrix& U);

// Mean query assignment per class.
Proportions proportion_update(const AssignmentMatrix& U);

// Support means, a pi-free softmax over the Gaussian logits, and the
// resulting proportions.
SolveState initialize(const FewShotTask& task, const FeatureMatrix& features,
                      const std::vector<ClassMetric>& metrics);

using SolveObserver =
    std::function<void(int iteration, const SolveState& state)>;

// Alternating minimization until the objective stalls or max_iters is hit;
// non-convergence is reported through the flag, not an error.
SolveResult solve(const FewShotTask& task, const FeatureMatrix& features,
                  const std::vector<ClassModel>& models, const SolverConfig& cfg,
                  const SolveObserver& observer = {});

} // namespace tfs

#endif
