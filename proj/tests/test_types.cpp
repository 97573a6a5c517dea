#include <doctest.h>

#include <cmath>

#include "tfs/types.hpp"

using namespace tfs;

namespace {

FewShotTask two_class_task() {
    FewShotTask task;
    task.n_classes = 2;
    task.support_indices = {0, 1};
    task.support_labels = Matrix::Zero(2, 2);
    task.support_labels(0, 0) = 1.0;
    task.support_labels(1, 1) = 1.0;
    task.query_indices = {2, 3};
    return task;
}

FeatureMatrix four_rows() {
    Matrix values(4, 2);
    values << 0, 0, 1, 1, 2, 2, 3, 3;
    return FeatureMatrix(values);
}

} // namespace

TEST_CASE("feature matrix rejects bad input") {
    CHECK_THROWS_AS(FeatureMatrix(Matrix(0, 3)), DataError);
    Matrix nan_values = Matrix::Zero(2, 2);
    nan_values(1, 0) = std::nan("");
    CHECK_THROWS_AS(FeatureMatrix{nan_values}, DataError);
    nan_values(1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(FeatureMatrix{nan_values}, DataError);
    CHECK(four_rows().n_samples() == 4);
    CHECK(four_rows().dim() == 2);
}

TEST_CASE("validate_task accepts a clean task") {
    CHECK(validate_task(two_class_task(), four_rows()).ok());
}

TEST_CASE("validate_task reports support/query overlap") {
    FewShotTask task;
    task.n_classes = 1;
    task.support_indices = {0};
    task.support_labels = Matrix::Ones(1, 1);
    task.query_indices = {0};
    const auto report = validate_task(task, four_rows());
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& v : report.violations) found |= v == "overlap at index 0";
    CHECK(found);
}

TEST_CASE("validate_task reports a class without shots") {
    FewShotTask task;
    task.n_classes = 5;
    task.support_indices = {0, 1};
    task.support_labels = Matrix::Zero(2, 5);
    task.support_labels(0, 0) = 1.0;
    task.support_labels(1, 1) = 1.0;
    task.query_indices = {2};
    const auto report = validate_task(task, four_rows());
    bool found = false;
    for (const auto& v : report.violations) found |= v == "class 2 has no shots";
    CHECK(found);
}

TEST_CASE("validate_task flags exactly the broken invariant") {
    const FeatureMatrix features = four_rows();

    SUBCASE("out of range index") {
        auto task = two_class_task();
        task.query_indices = {2, 17};
        CHECK_FALSE(validate_task(task, features).ok());
    }
    SUBCASE("empty query set") {
        auto task = two_class_task();
        task.query_indices.clear();
        CHECK_FALSE(validate_task(task, features).ok());
    }
    SUBCASE("duplicate support index") {
        auto task = two_class_task();
        task.support_indices = {0, 0};
        CHECK_FALSE(validate_task(task, features).ok());
    }
    SUBCASE("label row not one-hot") {
        auto task = two_class_task();
        task.support_labels(0, 0) = 0.5;
        task.support_labels(0, 1) = 0.5;
        CHECK_FALSE(validate_task(task, features).ok());
    }
    SUBCASE("two ones in a label row") {
        auto task = two_class_task();
        task.support_labels(0, 1) = 1.0;
        CHECK_FALSE(validate_task(task, features).ok());
    }
    SUBCASE("require_valid_task throws with details") {
        auto task = two_class_task();
        task.query_indices = {0, 2};
        CHECK_THROWS_AS(require_valid_task(task, features), DataError);
    }
}

TEST_CASE("assignment matrix clamps support rows and checks the simplex") {
    Matrix labels = Matrix::Zero(2, 2);
    labels(0, 0) = 1.0;
    labels(1, 1) = 1.0;
    Matrix queries(1, 2);
    queries << 0.25, 0.75;
    AssignmentMatrix u(labels, queries);
    CHECK(u.n_support() == 2);
    CHECK(u.n_query() == 1);
    CHECK(u.support_rows()(0, 0) == 1.0);
    CHECK(u.support_rows()(1, 1) == 1.0);

    Matrix bad(1, 2);
    bad << 0.3, 0.3;
    CHECK_THROWS_AS(AssignmentMatrix(labels, bad), DataError);
    bad << -0.1, 1.1;
    CHECK_THROWS_AS(AssignmentMatrix(labels, bad), DataError);
    CHECK_THROWS_AS(u.set_query_rows(bad), DataError);
}

TEST_CASE("hard assignments break ties toward the lowest class id") {
    Matrix labels(1, 2);
    labels << 1.0, 0.0;
    Matrix queries(2, 2);
    queries << 0.5, 0.5, 0.2, 0.8;
    AssignmentMatrix u(labels, queries);
    const auto hard = u.hard_assignments();
    CHECK(hard[1] == 0); // tie
    CHECK(hard[2] == 1);
}

TEST_CASE("class model validates symmetry and definiteness") {
    Matrix asym(2, 2);
    asym << 1.0, 0.5, 0.2, 1.0;
    CHECK_THROWS_AS(ClassModel(Vector::Zero(2), asym), NumericError);

    Matrix indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(ClassModel(Vector::Zero(2), indefinite), NumericError);

    Matrix wrong_size = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(ClassModel(Vector::Zero(2), wrong_size), DataError);
}

TEST_CASE("class model caches the Cholesky log determinant") {
    const ClassModel identity_model = ClassModel::identity(Vector::Zero(3));
    CHECK(identity_model.log_det() == doctest::Approx(0.0).epsilon(1e-12));

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 2.0;
    diag(1, 1) = 3.0;
    ClassModel model(Vector::Zero(2), diag);
    CHECK(model.log_det() == doctest::Approx(std::log(6.0)).epsilon(1e-12));

    Vector x(2);
    x << 1.0, 1.0;
    CHECK(model.mahalanobis_sq(x) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("proportions must lie on the simplex") {
    Vector good(2);
    good << 0.4, 0.6;
    CHECK(Proportions(good).n_classes() == 2);
    Vector negative(2);
    negative << -0.1, 1.1;
    CHECK_THROWS_AS(Proportions{negative}, DataError);
    Vector off(2);
    off << 0.4, 0.7;
    CHECK_THROWS_AS(Proportions{off}, DataError);
}
