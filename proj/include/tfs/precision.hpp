#ifndef TFS_PRECISION_HPP
#define TFS_PRECISION_HPP

#include <optional>
#include <vector>

#include "tfs/types.hpp"

namespace tfs {

struct GlassoConfig {
    // L1 penalty. Unset selects 0.1 * mean(diag(S)) per input matrix.
    std::optional<double> rho{};
    int max_sweeps = 200;
    // Sweep convergence threshold on the max absolute change of the
    // covariance estimate, and slack allowed in the KKT residual.
    double kkt_tol = 1e-4;
    // Added to the covariance diagonal when a Cholesky factorization fails
    // (only reachable on the rho = 0 path).
    double jitter = 1e-8;
};

struct GlassoResult {
    Matrix precision;     // sparse SPD estimate of the inverse covariance
    Matrix cov_estimate;  // its inverse; diagonal equals diag(S) + rho
    double rho = 0.0;     // penalty actually applied
    int sweeps = 0;
    double kkt_residual = 0.0;
};

// Maximum-likelihood covariance of the rows of `samples` (normalized by the
// sample count, not count - 1).
Matrix empirical_covariance(const Eigen::Ref<const Matrix>& samples);

// L1-penalized precision estimation by block coordinate descent over
// columns, with the inner lasso solved by cyclic coordinate descent.
// Requires S symmetric, and positive-definite when the penalty is zero.
GlassoResult graphical_lasso(const Matrix& S, const GlassoConfig& cfg);

// Stationarity violation of a (precision, cov_estimate) pair: zero entries
// must satisfy |S_ij - W_ij| <= rho, nonzero entries the sign-equality
// condition W_ij - S_ij = rho * sign(precision_ij).
double glasso_kkt_residual(const Matrix& S, const Matrix& cov_estimate,
                           const Matrix& precision, double rho);

// ln det(M) as 2 * sum(log(diag(chol(M)))); throws NumericError when the
// factorization fails.
double log_det_pd(const Matrix& M);

// Per-class centroids and Graphical Lasso precisions from the support set.
// Classes with fewer than two shots fall back to the identity precision.
// Estimation may run concurrently across classes.
std::vector<ClassModel> fit_class_models(const FewShotTask& task,
                                         const FeatureMatrix& features,
                                         const GlassoConfig& cfg, int threads = 1);

} // namespace tfs

#endif
