#ifndef TFS_TYPES_HPP
#define TFS_TYPES_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "tfs/errors.hpp"

namespace tfs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// N x d table of sample embeddings, one row per sample. All entries are
// finite; construction rejects anything else.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(Matrix values);

    int n_samples() const { return static_cast<int>(values_.rows()); }
    int dim() const { return static_cast<int>(values_.cols()); }
    const Matrix& values() const { return values_; }
    Eigen::RowVectorXd row(int i) const { return values_.row(i); }

private:
    Matrix values_;
};

// A transductive few-shot task over a FeatureMatrix: a labeled support set
// and an unlabeled query set, both given as row indices. The feature matrix
// itself is passed alongside the task wherever it is needed.
struct FewShotTask {
    std::vector<int> support_indices;
    Matrix support_labels; // |S| x K, one-hot rows
    std::vector<int> query_indices;
    int n_classes = 0;

    int n_support() const { return static_cast<int>(support_indices.size()); }
    int n_query() const { return static_cast<int>(query_indices.size()); }
    int n_total() const { return n_support() + n_query(); }

    // Class id of support sample i (position of the 1 in its label row).
    int support_class(int i) const;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Checks every FewShotTask invariant against the given feature matrix and
// reports all violations; never throws.
ValidationReport validate_task(const FewShotTask& task, const FeatureMatrix& features);

// Support-side invariants only (labels one-hot, every class covered, indices
// in range); lets model fitting run on tasks with no query block yet.
ValidationReport validate_support_block(const FewShotTask& task, const FeatureMatrix& features);

// Throwing variant for call sites that require a valid task.
void require_valid_task(const FewShotTask& task, const FeatureMatrix& features);
void require_valid_support(const FewShotTask& task, const FeatureMatrix& features);

// Soft assignments for one task, stored in task order: rows [0, |S|) are the
// support rows (clamped to the one-hot labels), rows [|S|, |S|+|Q|) are the
// query rows. Every row lies on the unit simplex.
class AssignmentMatrix {
public:
    AssignmentMatrix() = default;
    // Builds the matrix from clamped support labels and explicit query rows.
    AssignmentMatrix(const Matrix& support_labels, const Matrix& query_rows);

    int n_rows() const { return static_cast<int>(rows_.rows()); }
    int n_classes() const { return static_cast<int>(rows_.cols()); }
    int n_support() const { return n_support_; }
    int n_query() const { return n_rows() - n_support_; }

    const Matrix& rows() const { return rows_; }
    Eigen::Block<const Matrix> support_rows() const {
        return rows_.topRows(n_support_);
    }
    Eigen::Block<const Matrix> query_rows() const {
        return rows_.bottomRows(n_query());
    }

    void set_query_rows(const Matrix& query_rows);

    // Per-row argmax over classes; ties go to the lowest class id.
    std::vector<int> hard_assignments() const;

private:
    Matrix rows_;
    int n_support_ = 0;
};

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row);

// Gaussian class model: centroid plus a symmetric positive-definite
// precision matrix with its cached log-determinant and Cholesky factor.
class ClassModel {
public:
    ClassModel() = default;
    ClassModel(Vector centroid, Matrix precision);

    static ClassModel identity(Vector centroid);

    const Vector& centroid() const { return centroid_; }
    const Matrix& precision() const { return precision_; }
    double log_det() const { return log_det_; }
    // Lower-triangular Cholesky factor L with precision = L L^T.
    const Matrix& cholesky_l() const { return chol_l_; }

    // Squared Mahalanobis distance (x - centroid)^T precision (x - centroid).
    double mahalanobis_sq(const Eigen::Ref<const Vector>& x) const;

private:
    Vector centroid_;
    Matrix precision_;
    Matrix chol_l_;
    double log_det_ = 0.0;
};

// Class proportions on the unit simplex.
class Proportions {
public:
    Proportions() = default;
    explicit Proportions(Vector pi);

    int n_classes() const { return static_cast<int>(pi_.size()); }
    const Vector& pi() const { return pi_; }
    double operator[](int k) const { return pi_[k]; }

private:
    Vector pi_;
};

} // namespace tfs

#endif
