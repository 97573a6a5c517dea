#include "tfs/solver.hpp"

#include <cassert>
#include <cmath>

namespace tfs {

namespace {

Matrix gather_rows(const FeatureMatrix& features, const std::vector<int>& indices) {
    Matrix out(static_cast<Eigen::Index>(indices.size()), features.dim());
    for (size_t i = 0; i < indices.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = features.row(indices[i]);
    return out;
}

std::vector<ClassModel> models_at(const Matrix& centroids,
                                  const std::vector<ClassMetric>& metrics) {
    std::vector<ClassModel> models;
    models.reserve(metrics.size());
    for (size_t k = 0; k < metrics.size(); ++k) {
        const Matrix& l = metrics[k].chol_l;
        models.emplace_back(centroids.row(static_cast<Eigen::Index>(k)).transpose(),
                            Matrix(l * l.transpose()));
    }
    return models;
}

} // namespace

std::vector<ClassMetric> solver_metrics(const std::vector<ClassModel>& models,
                                        PrecisionMode mode, int dim, int n_classes) {
    std::vector<ClassMetric> metrics(static_cast<size_t>(n_classes));
    if (mode == PrecisionMode::kIdentity) {
        for (auto& m : metrics) {
            m.chol_l = Matrix::Identity(dim, dim);
            m.log_det = 0.0;
        }
        return metrics;
    }
    if (static_cast<int>(models.size()) != n_classes)
        throw DataError("model count does not match n_classes");
    for (int k = 0; k < n_classes; ++k) {
        if (models[static_cast<size_t>(k)].centroid().size() != dim)
            throw DataError("model dimension does not match features");
        metrics[static_cast<size_t>(k)].chol_l = models[static_cast<size_t>(k)].cholesky_l();
        metrics[static_cast<size_t>(k)].log_det = models[static_cast<size_t>(k)].log_det();
    }
    return metrics;
}

Matrix class_support_means(const FewShotTask& task, const FeatureMatrix& features) {
    Matrix means = Matrix::Zero(task.n_classes, features.dim());
    Vector counts = Vector::Zero(task.n_classes);
    for (int i = 0; i < task.n_support(); ++i) {
        const int k = task.support_class(i);
        means.row(k) += features.row(task.support_indices[static_cast<size_t>(i)]);
        counts[k] += 1.0;
    }
    for (int k = 0; k < task.n_classes; ++k) {
        assert(counts[k] > 0.0);
        means.row(k) /= counts[k];
    }
    return means;
}

Matrix assignment_update(const FeatureMatrix& features, const FewShotTask& task,
                         const Matrix& centroids, const std::vector<ClassMetric>& metrics,
                         const Proportions& pi, double lambda, double pi_floor) {
    const int n_query = task.n_query();
    const int k_classes = task.n_classes;
    const Matrix queries = gather_rows(features, task.query_indices);

    Vector log_pi = Vector::Zero(k_classes);
    if (lambda > 0.0) {
        Vector floored = pi.pi().cwiseMax(pi_floor);
        floored /= floored.sum();
        log_pi = floored.array().log();
    }
    const double prior_weight = n_query > 0 ? lambda / static_cast<double>(n_query) : 0.0;

    Matrix logits(n_query, k_classes);
    for (int k = 0; k < k_classes; ++k) {
        const Matrix centered =
            queries.rowwise() - centroids.row(k);
        const Vector mahal = (centered * metrics[static_cast<size_t>(k)].chol_l).rowwise().squaredNorm();
        logits.col(k) = (-0.5 * mahal).array() + 0.5 * metrics[static_cast<size_t>(k)].log_det +
                        (lambda > 0.0 ? prior_weight * log_pi[k] : 0.0);
    }
    for (int n = 0; n < n_query; ++n) {
        for (int k = 0; k < k_classes; ++k) {
            if (!std::isfinite(logits(n, k)))
                throw NumericError("non-finite logit at query " + std::to_string(n) +
                                   ", class " + std::to_string(k));
        }
    }

    Matrix rows(n_query, k_classes);
    for (int n = 0; n < n_query; ++n) {
        const double peak = logits.row(n).maxCoeff();
        Eigen::RowVectorXd expd = (logits.row(n).array() - peak).exp();
        rows.row(n) = expd / expd.sum();
    }
    return rows;
}

Matrix centroid_update(const FeatureMatrix& features, const FewShotTask& task,
                       const AssignmentMatrix& U) {
    const int k_classes = task.n_classes;
    Matrix weighted = Matrix::Zero(k_classes, features.dim());
    Vector total = Vector::Zero(k_classes);
    for (int i = 0; i < U.n_rows(); ++i) {
        const int row = i < task.n_support()
                            ? task.support_indices[static_cast<size_t>(i)]
                            : task.query_indices[static_cast<size_t>(i - task.n_support())];
        for (int k = 0; k < k_classes; ++k) {
            const double u = U.rows()(i, k);
            if (u == 0.0) continue;
            weighted.row(k) += u * features.row(row);
            total[k] += u;
        }
    }
    Matrix centroids(k_classes, features.dim());
    for (int k = 0; k < k_classes; ++k) {
        assert(total[k] > 0.0);
        centroids.row(k) = weighted.row(k) / total[k];
    }
    return centroids;
}

Proportions proportion_update(const AssignmentMatrix& U) {
    Vector pi = U.query_rows().colwise().mean().transpose();
    return Proportions(std::move(pi));
}

SolveState initialize(const FewShotTask& task, const FeatureMatrix& features,
                      const std::vector<ClassMetric>& metrics) {
    SolveState state;
    state.centroids = class_support_means(task, features);
    const Proportions uniform(Vector::Constant(task.n_classes, 1.0 / task.n_classes));
    const Matrix query_rows =
        assignment_update(features, task, state.centroids, metrics, uniform, 0.0);
    state.assignments = AssignmentMatrix(task.support_labels, query_rows);
    state.proportions = proportion_update(state.assignments);
    return state;
}

SolveResult solve(const FewShotTask& task, const FeatureMatrix& features,
                  const std::vector<ClassModel>& models, const SolverConfig& cfg,
                  const SolveObserver& observer) {
    require_valid_task(task, features);
    if (cfg.lambda < 0.0) throw DataError("lambda must be nonnegative");
    if (cfg.max_iters < 1) throw DataError("max_iters must be >= 1");
    if (cfg.rel_tol <= 0.0) throw DataError("rel_tol must be positive");

    const std::vector<ClassMetric> metrics =
        solver_metrics(models, cfg.precision_mode, features.dim(), task.n_classes);

    SolveState state = initialize(task, features, metrics);
    if (observer) observer(0, state);

    SolveResult result;
    result.objective_trace.push_back(total_objective(
        state.assignments, models_at(state.centroids, metrics), features, task, cfg.lambda));

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const Matrix previous_rows = state.assignments.query_rows();
        const Matrix query_rows = assignment_update(features, task, state.centroids, metrics,
                                                    state.proportions, cfg.lambda, cfg.pi_floor);
        state.assignments.set_query_rows(query_rows);
        state.centroids = centroid_update(features, task, state.assignments);
        state.proportions = proportion_update(state.assignments);
        if (observer) observer(iter, state);

        result.objective_trace.push_back(total_objective(
            state.assignments, models_at(state.centroids, metrics), features, task, cfg.lambda));
        result.iterations = iter;

        const double prev_total = result.objective_trace[static_cast<size_t>(iter - 1)].total;
        const double new_total = result.objective_trace[static_cast<size_t>(iter)].total;
        const double rel_change =
            std::abs(new_total - prev_total) / std::max(1.0, std::abs(prev_total));
        const double row_move = (query_rows - previous_rows).cwiseAbs().maxCoeff();
        if (rel_change < cfg.rel_tol && row_move < cfg.rel_tol) {
            result.converged = true;
            break;
        }
    }

    result.assignments = state.assignments;
    result.centroids = state.centroids;
    result.proportions = state.proportions;
    const auto hard = result.assignments.hard_assignments();
    result.query_predictions.assign(hard.begin() + task.n_support(), hard.end());
    return result;
}

} // namespace tfs
