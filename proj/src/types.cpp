#include "tfs/types.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace tfs {

namespace {

constexpr double kSimplexTol = 1e-9;

bool row_on_simplex(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    if ((row.array() < 0.0).any()) return false;
    return std::abs(row.sum() - 1.0) <= kSimplexTol;
}

} // namespace

FeatureMatrix::FeatureMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1)
        throw DataError("feature matrix must have at least one sample and one dimension");
    if (!values_.allFinite())
        throw DataError("feature matrix contains a non-finite value");
}

int FewShotTask::support_class(int i) const {
    int cls = 0;
    support_labels.row(i).maxCoeff(&cls);
    return cls;
}

namespace {

void check_support_block(const FewShotTask& task, const FeatureMatrix& features,
                         ValidationReport& report) {
    auto add = [&report](const std::string& msg) { report.violations.push_back(msg); };

    if (task.n_classes < 1) add("n_classes must be >= 1");

    const int n = features.n_samples();
    std::set<int> support_set;
    for (int idx : task.support_indices) {
        if (idx < 0 || idx >= n) add("support index " + std::to_string(idx) + " out of range");
        if (!support_set.insert(idx).second)
            add("duplicate support index " + std::to_string(idx));
    }

    if (task.support_labels.rows() != task.n_support() ||
        task.support_labels.cols() != task.n_classes) {
        add("support label matrix has wrong shape");
        return;
    }

    std::vector<int> shots(static_cast<size_t>(std::max(task.n_classes, 0)), 0);
    for (int i = 0; i < task.n_support(); ++i) {
        int ones = 0;
        int cls = -1;
        bool clean = true;
        for (int k = 0; k < task.n_classes; ++k) {
            const double v = task.support_labels(i, k);
            if (v == 1.0) {
                ++ones;
                cls = k;
            } else if (v != 0.0) {
                clean = false;
            }
        }
        if (!clean || ones != 1) {
            add("support row " + std::to_string(i) + " label is not one-hot");
        } else {
            ++shots[static_cast<size_t>(cls)];
        }
    }
    for (int k = 0; k < task.n_classes; ++k) {
        if (shots[static_cast<size_t>(k)] == 0)
            add("class " + std::to_string(k) + " has no shots");
    }
}

void check_query_block(const FewShotTask& task, const FeatureMatrix& features,
                       ValidationReport& report) {
    auto add = [&report](const std::string& msg) { report.violations.push_back(msg); };

    if (task.query_indices.empty()) add("query set is empty");

    const int n = features.n_samples();
    const std::set<int> support_set(task.support_indices.begin(), task.support_indices.end());
    std::set<int> query_set;
    for (int idx : task.query_indices) {
        if (idx < 0 || idx >= n) add("query index " + std::to_string(idx) + " out of range");
        if (!query_set.insert(idx).second)
            add("duplicate query index " + std::to_string(idx));
        if (support_set.count(idx)) add("overlap at index " + std::to_string(idx));
    }
}

void throw_if_invalid(const ValidationReport& report) {
    if (report.ok()) return;
    std::ostringstream msg;
    msg << "invalid task:";
    for (const auto& v : report.violations) msg << " [" << v << "]";
    throw DataError(msg.str());
}

} // namespace

ValidationReport validate_task(const FewShotTask& task, const FeatureMatrix& features) {
    ValidationReport report;
    check_support_block(task, features, report);
    check_query_block(task, features, report);
    return report;
}

ValidationReport validate_support_block(const FewShotTask& task, const FeatureMatrix& features) {
    ValidationReport report;
    check_support_block(task, features, report);
    return report;
}

void require_valid_task(const FewShotTask& task, const FeatureMatrix& features) {
    throw_if_invalid(validate_task(task, features));
}

void require_valid_support(const FewShotTask& task, const FeatureMatrix& features) {
    throw_if_invalid(validate_support_block(task, features));
}

AssignmentMatrix::AssignmentMatrix(const Matrix& support_labels, const Matrix& query_rows)
    : n_support_(static_cast<int>(support_labels.rows())) {
    if (support_labels.cols() != query_rows.cols() && support_labels.rows() > 0 &&
        query_rows.rows() > 0)
        throw DataError("assignment matrix blocks disagree on class count");
    const int k = static_cast<int>(std::max(support_labels.cols(), query_rows.cols()));
    rows_.resize(support_labels.rows() + query_rows.rows(), k);
    rows_.topRows(support_labels.rows()) = support_labels;
    rows_.bottomRows(query_rows.rows()) = query_rows;
    for (int i = 0; i < rows_.rows(); ++i) {
        if (!row_on_simplex(rows_.row(i)))
            throw DataError("assignment row " + std::to_string(i) + " is not on the simplex");
    }
}

void AssignmentMatrix::set_query_rows(const Matrix& query_rows) {
    if (query_rows.rows() != n_query() || query_rows.cols() != rows_.cols())
        throw DataError("query block has wrong shape");
    for (int i = 0; i < query_rows.rows(); ++i) {
        if (!row_on_simplex(query_rows.row(i)))
            throw DataError("query row " + std::to_string(i) + " is not on the simplex");
    }
    rows_.bottomRows(query_rows.rows()) = query_rows;
}

std::vector<int> AssignmentMatrix::hard_assignments() const {
    std::vector<int> out(static_cast<size_t>(n_rows()));
    for (int i = 0; i < n_rows(); ++i) out[static_cast<size_t>(i)] = argmax_lowest(rows_.row(i));
    return out;
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    int best = 0;
    for (int k = 1; k < row.size(); ++k) {
        if (row[k] > row[best]) best = k;
    }
    return best;
}

ClassModel::ClassModel(Vector centroid, Matrix precision)
    : centroid_(std::move(centroid)), precision_(std::move(precision)) {
    if (precision_.rows() != precision_.cols() || precision_.rows() != centroid_.size())
        throw DataError("precision matrix shape does not match centroid dimension");
    const double scale = std::max(1.0, precision_.cwiseAbs().maxCoeff());
    if ((precision_ - precision_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw NumericError("precision matrix is not symmetric");
    Eigen::LLT<Matrix> llt(precision_);
    if (llt.info() != Eigen::Success)
        throw NumericError("precision matrix is not positive-definite");
    chol_l_ = llt.matrixL();
    log_det_ = 2.0 * chol_l_.diagonal().array().log().sum();
}

ClassModel ClassModel::identity(Vector centroid) {
    const auto d = centroid.size();
    return ClassModel(std::move(centroid), Matrix::Identity(d, d));
}

double ClassModel::mahalanobis_sq(const Eigen::Ref<const Vector>& x) const {
    const Vector diff = x - centroid_;
    return (chol_l_.transpose() * diff).squaredNorm();
}

Proportions::Proportions(Vector pi) : pi_(std::move(pi)) {
    if (pi_.size() < 1) throw DataError("proportions vector is empty");
    if ((pi_.array() < 0.0).any() || std::abs(pi_.sum() - 1.0) > kSimplexTol)
        throw DataError("proportions are not on the simplex");
}

} // namespace tfs
