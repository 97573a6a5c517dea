#include "tfs/objective.hpp"

#include <cmath>

namespace tfs {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

} // namespace

double data_fidelity(const AssignmentMatrix& U, const std::vector<ClassModel>& models,
                     const FeatureMatrix& features, const FewShotTask& task) {
    if (static_cast<int>(models.size()) != task.n_classes)
        throw DataError("model count does not match n_classes");
    if (U.n_rows() != task.n_total() || U.n_classes() != task.n_classes)
        throw DataError("assignment matrix shape does not match task");
    for (const auto& m : models) {
        if (m.centroid().size() != features.dim())
            throw DataError("model dimension does not match features");
    }

    double fidelity = 0.0;
    for (int k = 0; k < task.n_classes; ++k) {
        const ClassModel& model = models[static_cast<size_t>(k)];
        double weighted_mahal = 0.0;
        double weight_sum = 0.0;
        for (int i = 0; i < U.n_rows(); ++i) {
            const double u = U.rows()(i, k);
            if (u == 0.0) continue;
            const int row = i < task.n_support()
                                ? task.support_indices[static_cast<size_t>(i)]
                                : task.query_indices[static_cast<size_t>(i - task.n_support())];
            weighted_mahal += u * model.mahalanobis_sq(features.row(row).transpose());
            weight_sum += u;
        }
        fidelity += 0.5 * weighted_mahal - 0.5 * weight_sum * model.log_det();
    }
    return fidelity;
}

double entropic_barrier(const AssignmentMatrix& U) {
    double g = 0.0;
    const auto query = U.query_rows();
    for (int i = 0; i < query.rows(); ++i)
        for (int k = 0; k < query.cols(); ++k) g += xlogx(query(i, k));
    return g;
}

PartitionEntropy partition_entropy(const AssignmentMatrix& U) {
    if (U.n_query() < 1) throw DataError("partition entropy needs at least one query row");
    Vector pi = U.query_rows().colwise().mean().transpose();
    double h = 0.0;
    for (int k = 0; k < pi.size(); ++k) h -= xlogx(pi[k]);
    PartitionEntropy out;
    out.h = h;
    out.pi = Proportions(std::move(pi));
    return out;
}

ObjectiveBreakdown total_objective(const AssignmentMatrix& U,
                                   const std::vector<ClassModel>& models,
                                   const FeatureMatrix& features, const FewShotTask& task,
                                   double lambda) {
    ObjectiveBreakdown out;
    out.f_value = data_fidelity(U, models, features, task);
    out.g_value = entropic_barrier(U);
    out.h_value = partition_entropy(U).h;
    out.lambda = lambda;
    out.total = out.f_value + out.g_value + lambda * out.h_value;
    return out;
}

} // namespace tfs
