#include "tfs/precision.hpp"

#include <cmath>
#include <sstream>

#include "tfs/parallel.hpp"

namespace tfs {

namespace {

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

void check_symmetric(const Matrix& S, const char* what) {
    if (S.rows() != S.cols()) throw DataError(std::string(what) + " is not square");
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw DataError(std::string(what) + " is not symmetric");
}

// Minimizes 0.5 b'Vb - b's + rho|b|_1 by cyclic coordinate descent,
// warm-started from beta. V is a principal submatrix of the current
// covariance estimate, hence SPD with diagonal >= rho.
void lasso_cd(const Matrix& V, const Vector& s, double rho, Vector& beta) {
    const int p = static_cast<int>(s.size());
    const double tol = 1e-13 * std::max(1.0, s.cwiseAbs().maxCoeff());
    const int max_pass = 10000;
    for (int pass = 0; pass < max_pass; ++pass) {
        double max_delta = 0.0;
        for (int k = 0; k < p; ++k) {
            const double old = beta[k];
            const double grad_others = V.col(k).dot(beta) - V(k, k) * old;
            const double next = soft_threshold(s[k] - grad_others, rho) / V(k, k);
            beta[k] = next;
            max_delta = std::max(max_delta, std::abs(next - old));
        }
        if (max_delta <= tol) break;
    }
}

// One full sweep of column updates; returns the largest change of any
// covariance-estimate entry.
double glasso_sweep(const Matrix& S, double rho, Matrix& W, Matrix& B) {
    const int d = static_cast<int>(S.rows());
    Matrix V(d - 1, d - 1);
    Vector s(d - 1), beta(d - 1);
    double max_change = 0.0;
    for (int j = 0; j < d; ++j) {
        int r = 0;
        for (int a = 0; a < d; ++a) {
            if (a == j) continue;
            int c = 0;
            for (int b = 0; b < d; ++b) {
                if (b == j) continue;
                V(r, c) = W(a, b);
                ++c;
            }
            s[r] = S(a, j);
            beta[r] = B(a, j);
            ++r;
        }
        lasso_cd(V, s, rho, beta);
        const Vector w12 = V * beta;
        r = 0;
        for (int a = 0; a < d; ++a) {
            if (a == j) continue;
            max_change = std::max(max_change, std::abs(w12[r] - W(a, j)));
            W(a, j) = w12[r];
            W(j, a) = w12[r];
            B(a, j) = beta[r];
            ++r;
        }
    }
    return max_change;
}

// Inverse of an SPD matrix through its Cholesky factorization. Falls back
// to a jittered diagonal when the factorization fails and jitter permits.
Matrix spd_inverse(const Matrix& M, double jitter, const char* what) {
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) {
        if (jitter > 0.0) {
            Matrix adjusted = M;
            adjusted.diagonal().array() += jitter;
            llt.compute(adjusted);
        }
        if (llt.info() != Eigen::Success)
            throw NumericError(std::string(what) + " is not positive-definite");
    }
    return llt.solve(Matrix::Identity(M.rows(), M.cols()));
}

} // namespace

Matrix empirical_covariance(const Eigen::Ref<const Matrix>& samples) {
    if (samples.rows() < 1) throw DataError("empirical covariance needs at least one sample");
    const auto m = samples.rows();
    const Eigen::RowVectorXd mean = samples.colwise().mean();
    const Matrix centered = samples.rowwise() - mean;
    Matrix cov = centered.transpose() * centered / static_cast<double>(m);
    cov = ((cov + cov.transpose()) / 2.0).eval();
    return cov;
}

GlassoResult graphical_lasso(const Matrix& S, const GlassoConfig& cfg) {
    check_symmetric(S, "covariance input");
    if (cfg.kkt_tol <= 0.0) throw DataError("kkt_tol must be positive");
    if (cfg.max_sweeps < 1) throw DataError("max_sweeps must be >= 1");
    if (cfg.rho && *cfg.rho < 0.0) throw DataError("rho must be nonnegative");
    if (cfg.jitter < 0.0) throw DataError("jitter must be nonnegative");

    const int d = static_cast<int>(S.rows());
    const double rho = cfg.rho ? *cfg.rho : 0.1 * S.diagonal().mean();

    GlassoResult out;
    out.rho = rho;

    if (rho == 0.0) {
        // Unpenalized case: the estimate is the plain inverse.
        out.cov_estimate = S;
        out.precision = spd_inverse(S, cfg.jitter, "covariance with rho = 0");
        out.precision = ((out.precision + out.precision.transpose()) / 2.0).eval();
        out.kkt_residual = 0.0;
        return out;
    }

    Matrix W = S;
    W.diagonal().array() += rho;

    if (d == 1) {
        out.cov_estimate = W;
        out.precision = Matrix::Constant(1, 1, 1.0 / W(0, 0));
        return out;
    }

    Matrix B = Matrix::Zero(d, d); // column j holds that column's lasso solution

    int sweeps = 0;
    bool converged = false;
    for (; sweeps < cfg.max_sweeps; ) {
        const double change = glasso_sweep(S, rho, W, B);
        ++sweeps;
        if (change < cfg.kkt_tol) {
            converged = true;
            break;
        }
    }

    if (converged) {
        // Tighten the estimate so that precision and cov_estimate agree as
        // inverses well below the user tolerance. Warm-started sweeps are
        // cheap; stopping early here is not an error.
        const double polish_tol = 1e-11 * std::max(1.0, W.diagonal().maxCoeff());
        for (int extra = 0; extra < cfg.max_sweeps; ++extra) {
            if (glasso_sweep(S, rho, W, B) < polish_tol) break;
            ++sweeps;
        }
    }

    // Recover the precision from the final column solutions; beta entries
    // that the soft threshold zeroed stay exactly zero here.
    Matrix theta = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        double dot = 0.0;
        for (int a = 0; a < d; ++a) {
            if (a != j) dot += W(a, j) * B(a, j);
        }
        const double denom = W(j, j) - dot;
        if (!(denom > 0.0))
            throw NumericError("graphical lasso produced a non-positive partial variance");
        const double theta_jj = 1.0 / denom;
        theta(j, j) = theta_jj;
        for (int a = 0; a < d; ++a) {
            if (a != j && B(a, j) != 0.0) theta(a, j) = -B(a, j) * theta_jj;
        }
    }
    theta = ((theta + theta.transpose()) / 2.0).eval();

    out.precision = theta;
    out.cov_estimate = W;
    out.sweeps = sweeps;
    out.kkt_residual = glasso_kkt_residual(S, W, theta, rho);

    if (!converged) {
        std::ostringstream msg;
        msg << "graphical lasso did not converge after " << cfg.max_sweeps
            << " sweeps (kkt residual " << out.kkt_residual << ")";
        throw NumericError(msg.str());
    }

    Eigen::LLT<Matrix> llt(out.precision);
    if (llt.info() != Eigen::Success)
        throw NumericError("graphical lasso precision failed its Cholesky check");
    return out;
}

double glasso_kkt_residual(const Matrix& S, const Matrix& cov_estimate,
                           const Matrix& precision, double rho) {
    const int d = static_cast<int>(S.rows());
    double residual = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            const double gap = cov_estimate(i, j) - S(i, j);
            if (precision(i, j) == 0.0) {
                residual = std::max(residual, std::abs(gap) - rho);
            } else {
                const double sign = precision(i, j) > 0.0 ? 1.0 : -1.0;
                residual = std::max(residual, std::abs(gap - rho * sign));
            }
        }
    }
    return std::max(residual, 0.0);
}

double log_det_pd(const Matrix& M) {
    check_symmetric(M, "log-det input");
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success)
        throw NumericError("log-det input is not positive-definite");
    const Matrix L = llt.matrixL();
    return 2.0 * L.diagonal().array().log().sum();
}

std::vector<ClassModel> fit_class_models(const FewShotTask& task,
                                         const FeatureMatrix& features,
                                         const GlassoConfig& cfg, int threads) {
    require_valid_support(task, features);
    const int k_classes = task.n_classes;
    const int d = features.dim();

    std::vector<std::vector<int>> class_rows(static_cast<size_t>(k_classes));
    for (int i = 0; i < task.n_support(); ++i)
        class_rows[static_cast<size_t>(task.support_class(i))].push_back(task.support_indices[static_cast<size_t>(i)]);

    std::vector<ClassModel> models(static_cast<size_t>(k_classes));
    parallel_for(k_classes, threads, [&](int k) {
        const auto& rows = class_rows[static_cast<size_t>(k)];
        Matrix shots(static_cast<Eigen::Index>(rows.size()), d);
        for (size_t i = 0; i < rows.size(); ++i) shots.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
        Vector centroid = shots.colwise().mean().transpose();
        if (rows.size() < 2) {
            models[static_cast<size_t>(k)] = ClassModel::identity(std::move(centroid));
            return;
        }
        try {
            const Matrix cov = empirical_covariance(shots);
            GlassoResult fit = graphical_lasso(cov, cfg);
            models[static_cast<size_t>(k)] = ClassModel(std::move(centroid), std::move(fit.precision));
        } catch (const NumericError& e) {
            throw NumericError("class " + std::to_string(k) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("class " + std::to_string(k) + ": " + e.what());
        }
    });
    return models;
}

} // namespace tfs
