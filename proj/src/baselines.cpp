#include "tfs/baselines.hpp"

namespace tfs {

namespace {

void l2_normalize_rows(Matrix& rows) {
    for (int i = 0; i < rows.rows(); ++i) {
        const double norm = rows.row(i).norm();
        if (norm > 0.0) rows.row(i) /= norm;
    }
}

} // namespace

SimpleShotVariant parse_simpleshot_variant(const std::string& name) {
    if (name == "un") return SimpleShotVariant::kUN;
    if (name == "l2n") return SimpleShotVariant::kL2N;
    if (name == "cl2n") return SimpleShotVariant::kCL2N;
    throw DataError("unknown simpleshot variant '" + name + "' (expected un, l2n or cl2n)");
}

std::string simpleshot_variant_name(SimpleShotVariant variant) {
    switch (variant) {
        case SimpleShotVariant::kUN: return "un";
        case SimpleShotVariant::kL2N: return "l2n";
        case SimpleShotVariant::kCL2N: return "cl2n";
    }
    return "?";
}

std::vector<int> simpleshot(const FewShotTask& task, const FeatureMatrix& features,
                            SimpleShotVariant variant) {
    require_valid_task(task, features);

    Matrix support(task.n_support(), features.dim());
    for (int i = 0; i < task.n_support(); ++i)
        support.row(i) = features.row(task.support_indices[static_cast<size_t>(i)]);
    Matrix queries(task.n_query(), features.dim());
    for (int i = 0; i < task.n_query(); ++i)
        queries.row(i) = features.row(task.query_indices[static_cast<size_t>(i)]);

    if (variant == SimpleShotVariant::kCL2N) {
        const Eigen::RowVectorXd mean = support.colwise().mean();
        support.rowwise() -= mean;
        queries.rowwise() -= mean;
    }
    if (variant != SimpleShotVariant::kUN) {
        l2_normalize_rows(support);
        l2_normalize_rows(queries);
    }

    Matrix centroids = Matrix::Zero(task.n_classes, features.dim());
    Vector counts = Vector::Zero(task.n_classes);
    for (int i = 0; i < task.n_support(); ++i) {
        const int k = task.support_class(i);
        centroids.row(k) += support.row(i);
        counts[k] += 1.0;
    }
    for (int k = 0; k < task.n_classes; ++k) centroids.row(k) /= counts[k];

    std::vector<int> predictions(static_cast<size_t>(task.n_query()));
    for (int i = 0; i < task.n_query(); ++i) {
        int best = 0;
        double best_dist = (queries.row(i) - centroids.row(0)).squaredNorm();
        for (int k = 1; k < task.n_classes; ++k) {
            const double dist = (queries.row(i) - centroids.row(k)).squaredNorm();
            if (dist < best_dist) {
                best = k;
                best_dist = dist;
            }
        }
        predictions[static_cast<size_t>(i)] = best;
    }
    return predictions;
}

} // namespace tfs
