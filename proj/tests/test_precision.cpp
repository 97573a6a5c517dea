#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tfs/precision.hpp"
#include "tfs/rng.hpp"

using namespace tfs;

namespace {

Matrix random_psd(int d, Rng& rng, int rank) {
    Matrix g(d, rank);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < rank; ++c) g(r, c) = rng.gaussian();
    Matrix s = g * g.transpose() / static_cast<double>(rank);
    return ((s + s.transpose()) / 2.0).eval();
}

} // namespace

TEST_CASE("empirical covariance is the MLE around the sample mean") {
    Matrix samples(2, 2);
    samples << 0, 0, 2, 0;
    Matrix expected(2, 2);
    expected << 1, 0, 0, 0;
    CHECK((empirical_covariance(samples) - expected).cwiseAbs().maxCoeff() < 1e-12);

    Matrix single(1, 3);
    single << 4, 5, 6;
    CHECK(empirical_covariance(single).cwiseAbs().maxCoeff() == 0.0);

    Matrix pair(2, 2);
    pair << 1, 1, -1, -1;
    Matrix outer(2, 2);
    outer << 1, 1, 1, 1;
    CHECK((empirical_covariance(pair) - outer).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log_det_pd matches closed forms and rejects indefinite input") {
    CHECK(log_det_pd(Matrix::Identity(4, 4)) == doctest::Approx(0.0).epsilon(1e-14));
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 2.0;
    diag(1, 1) = 3.0;
    CHECK(log_det_pd(diag) == doctest::Approx(std::log(6.0)).epsilon(1e-12));

    Matrix indefinite(2, 2);
    indefinite << 1, 2, 2, 1; // eigenvalues 3 and -1
    CHECK_THROWS_AS(log_det_pd(indefinite), NumericError);

    Matrix asym(2, 2);
    asym << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(log_det_pd(asym), DataError);
}

TEST_CASE("graphical lasso keeps the identity fixed point at rho = 0") {
    GlassoConfig cfg;
    cfg.rho = 0.0;
    const GlassoResult result = graphical_lasso(Matrix::Identity(2, 2), cfg);
    CHECK((result.precision - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((result.cov_estimate - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("graphical lasso on a diagonal matrix shifts the diagonal by rho") {
    // KKT conditions verified directly: off-diagonals satisfy |0 - 0| <= rho,
    // and the diagonal of the covariance estimate is S_ii + rho.
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 2.0;
    s(1, 1) = 4.0;
    GlassoConfig cfg;
    cfg.rho = 0.5;
    const GlassoResult result = graphical_lasso(s, cfg);
    CHECK(result.precision(0, 0) == doctest::Approx(1.0 / 2.5).epsilon(1e-10));
    CHECK(result.precision(1, 1) == doctest::Approx(1.0 / 4.5).epsilon(1e-10));
    CHECK(result.precision(0, 1) == 0.0);
    CHECK(result.cov_estimate(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(result.cov_estimate(1, 1) == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(glasso_kkt_residual(s, result.cov_estimate, result.precision, 0.5) <= cfg.kkt_tol);
}

TEST_CASE("a penalty above the off-diagonal magnitude forces a diagonal precision") {
    Matrix s(2, 2);
    s << 1.0, 0.9, 0.9, 1.0;
    GlassoConfig cfg;
    cfg.rho = 1.0;
    const GlassoResult result = graphical_lasso(s, cfg);
    CHECK(result.precision(0, 1) == 0.0);
    CHECK(result.precision(1, 0) == 0.0);
    CHECK(result.precision(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(result.precision(1, 1) == doctest::Approx(0.5).epsilon(1e-10));

    // Cross-check against a generic grid minimizer of the penalized
    // likelihood on this 2x2 instance.
    const auto oracle = oracles::glasso2_grid_oracle(s, 1.0);
    CHECK(std::abs(oracle.a - result.precision(0, 0)) < 2e-3);
    CHECK(std::abs(oracle.c - result.precision(1, 1)) < 2e-3);
    CHECK(std::abs(oracle.b - result.precision(0, 1)) < 2e-3);
    const double ours = oracles::glasso2_objective(s, result.precision(0, 0),
                                                   result.precision(0, 1),
                                                   result.precision(1, 1), 1.0);
    CHECK(ours <= oracle.objective + 1e-6);
}

TEST_CASE("rho = 0 reproduces the plain inverse on PD inputs") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(rng.uniform_index(10));
        Matrix s = random_psd(d, rng, d + 4);
        s.diagonal().array() += 0.5; // keep it comfortably PD
        GlassoConfig cfg;
        cfg.rho = 0.0;
        const GlassoResult result = graphical_lasso(s, cfg);
        const Matrix direct = s.inverse();
        const double rel = (result.precision - direct).cwiseAbs().maxCoeff() /
                           direct.cwiseAbs().maxCoeff();
        CHECK(rel < 1e-6);
    }
}

TEST_CASE("graphical lasso output is SPD and inverse-consistent on random PSD inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const int d = 2 + static_cast<int>(rng.uniform_index(15)); // up to 16
        const int rank = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(2 * d)));
        const Matrix s = random_psd(d, rng, rank);
        GlassoConfig cfg;
        cfg.rho = 0.02 + 0.3 * rng.uniform();
        const GlassoResult result = graphical_lasso(s, cfg);

        Eigen::LLT<Matrix> llt(result.precision);
        CHECK(llt.info() == Eigen::Success);

        const Matrix product = result.precision * result.cov_estimate;
        CHECK((product - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-8);

        CHECK(glasso_kkt_residual(s, result.cov_estimate, result.precision, result.rho) <=
              cfg.kkt_tol);

        // Monotone shrinkage endpoint for this instance.
        double max_off = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j) max_off = std::max(max_off, std::abs(s(i, j)));
        GlassoConfig big;
        big.rho = max_off + 0.1;
        const GlassoResult diag_result = graphical_lasso(s, big);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j) CHECK(diag_result.precision(i, j) == 0.0);
    }
}

TEST_CASE("graphical lasso rejects bad inputs and reports non-convergence") {
    Matrix asym(2, 2);
    asym << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(graphical_lasso(asym, GlassoConfig{}), DataError);

    GlassoConfig bad;
    bad.rho = -0.1;
    CHECK_THROWS_AS(graphical_lasso(Matrix::Identity(2, 2), bad), DataError);

    // A strongly coupled matrix cannot settle in a single sweep.
    Rng rng(3);
    Matrix s = random_psd(8, rng, 16);
    s.array() += 2.0; // strong common component
    s = ((s + s.transpose()) / 2.0).eval();
    GlassoConfig one_sweep;
    one_sweep.rho = 0.01;
    one_sweep.max_sweeps = 1;
    one_sweep.kkt_tol = 1e-10;
    CHECK_THROWS_WITH_AS(graphical_lasso(s, one_sweep),
                         doctest::Contains("did not converge"), NumericError);
}

TEST_CASE("graphical lasso recovers a diagonal generating precision") {
    // Monte-Carlo consistency: 500 draws from N(0, diag(1, 4)) with a tiny
    // penalty should estimate a precision close to diag(1, 0.25).
    Rng rng(12345);
    Matrix samples(500, 2);
    for (int i = 0; i < samples.rows(); ++i) {
        samples(i, 0) = rng.gaussian();
        samples(i, 1) = 2.0 * rng.gaussian();
    }
    GlassoConfig cfg;
    cfg.rho = 0.01;
    const GlassoResult result = graphical_lasso(empirical_covariance(samples), cfg);
    CHECK(std::abs(result.precision(0, 0) - 1.0) < 0.15);
    CHECK(std::abs(result.precision(1, 1) - 0.25) < 0.15 * 0.25);
    CHECK(std::abs(result.precision(0, 1)) < 0.15 * 0.25);
}

TEST_CASE("fit_class_models computes centroids and falls back on single shots") {
    // Class 0 shots around (0, 0), class 1 shots around (10, 10).
    Matrix values(5, 2);
    values << -1, 0, 1, 0, 9, 10, 11, 10, 5, 5;
    FeatureMatrix features(values);
    FewShotTask task;
    task.n_classes = 2;
    task.support_indices = {0, 1, 2, 3};
    task.support_labels = Matrix::Zero(4, 2);
    task.support_labels(0, 0) = 1.0;
    task.support_labels(1, 0) = 1.0;
    task.support_labels(2, 1) = 1.0;
    task.support_labels(3, 1) = 1.0;
    task.query_indices = {4};

    GlassoConfig cfg;
    cfg.rho = 0.5;
    const auto models = fit_class_models(task, features, cfg);
    REQUIRE(models.size() == 2);
    CHECK(models[0].centroid()[0] == doctest::Approx(0.0));
    CHECK(models[0].centroid()[1] == doctest::Approx(0.0));
    CHECK(models[1].centroid()[0] == doctest::Approx(10.0));
    CHECK(models[1].centroid()[1] == doctest::Approx(10.0));

    SUBCASE("single-shot class gets the identity precision") {
        FewShotTask lean = task;
        lean.support_indices = {0, 2};
        lean.support_labels = Matrix::Zero(2, 2);
        lean.support_labels(0, 0) = 1.0;
        lean.support_labels(1, 1) = 1.0;
        const auto fallback = fit_class_models(lean, features, cfg);
        CHECK((fallback[0].precision() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(fallback[0].log_det() == 0.0);
    }

    SUBCASE("errors carry the class id") {
        // Two identical shots give a zero covariance; with auto rho (0) and
        // no jitter the inversion must fail and name the class.
        Matrix degenerate(3, 2);
        degenerate << 1, 1, 1, 1, 0, 0;
        FeatureMatrix bad_features(degenerate);
        FewShotTask bad;
        bad.n_classes = 1;
        bad.support_indices = {0, 1};
        bad.support_labels = Matrix::Ones(2, 1);
        bad.query_indices = {2};
        GlassoConfig no_jitter;
        no_jitter.jitter = 0.0;
        CHECK_THROWS_WITH_AS(fit_class_models(bad, bad_features, no_jitter),
                             doctest::Contains("class 0"), NumericError);
    }

    SUBCASE("per-class threads produce the same models") {
        const auto serial = fit_class_models(task, features, cfg, 1);
        const auto parallel = fit_class_models(task, features, cfg, 4);
        for (size_t k = 0; k < serial.size(); ++k) {
            CHECK((serial[k].precision() - parallel[k].precision()).cwiseAbs().maxCoeff() == 0.0);
            CHECK((serial[k].centroid() - parallel[k].centroid()).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("fit_class_models estimates anisotropic structure with enough shots") {
    Rng rng(77);
    Matrix values(501, 2);
    for (int i = 0; i < 500; ++i) {
        values(i, 0) = rng.gaussian();
        values(i, 1) = 2.0 * rng.gaussian();
    }
    values.row(500) << 0.0, 0.0;
    FeatureMatrix features(values);
    FewShotTask task;
    task.n_classes = 1;
    task.support_indices.resize(500);
    for (int i = 0; i < 500; ++i) task.support_indices[static_cast<size_t>(i)] = i;
    task.support_labels = Matrix::Ones(500, 1);
    task.query_indices = {500};

    GlassoConfig cfg;
    cfg.rho = 0.01;
    const auto models = fit_class_models(task, features, cfg);
    CHECK(std::abs(models[0].precision()(0, 0) - 1.0) < 0.15);
    CHECK(std::abs(models[0].precision()(1, 1) - 0.25) < 0.15 * 0.25);
    CHECK(models[0].log_det() == doctest::Approx(log_det_pd(models[0].precision())).epsilon(1e-10));
}
