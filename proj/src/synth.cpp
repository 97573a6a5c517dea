#include "tfs/synth.hpp"

#include <cmath>

namespace tfs {

namespace {

constexpr double kEigLow = 0.1;
constexpr double kEigHigh = 10.0;

Vector gaussian_vector(int dim, Rng& rng) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.gaussian();
    return v;
}

// K unit directions, orthonormalized while the dimension allows it.
Matrix random_directions(int n_classes, int dim, Rng& rng) {
    Matrix dirs(n_classes, dim);
    for (int k = 0; k < n_classes; ++k) {
        Vector v = gaussian_vector(dim, rng);
        if (k < dim) {
            for (int j = 0; j < k; ++j) v -= dirs.row(j).dot(v) * dirs.row(j).transpose();
        }
        double norm = v.norm();
        while (norm < 1e-8) { // essentially impossible, but stay safe
            v = gaussian_vector(dim, rng);
            norm = v.norm();
        }
        dirs.row(k) = v.transpose() / norm;
    }
    return dirs;
}

int sample_categorical(const std::vector<double>& priors, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (size_t k = 0; k < priors.size(); ++k) {
        acc += priors[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(priors.size()) - 1;
}

} // namespace

CovarianceSpec parse_covariance_spec(const std::string& name) {
    if (name == "identity") return CovarianceSpec::kIdentity;
    if (name == "diagonal") return CovarianceSpec::kDiagonal;
    if (name == "spd") return CovarianceSpec::kSpd;
    throw DataError("unknown covariance spec '" + name + "' (expected identity, diagonal or spd)");
}

std::string covariance_spec_name(CovarianceSpec spec) {
    switch (spec) {
        case CovarianceSpec::kIdentity: return "identity";
        case CovarianceSpec::kDiagonal: return "diagonal";
        case CovarianceSpec::kSpd: return "spd";
    }
    return "?";
}

Vector ClassGaussians::sample(int k, Rng& rng) const {
    const int dim = static_cast<int>(means.cols());
    return means.row(k).transpose() + transforms[static_cast<size_t>(k)] * gaussian_vector(dim, rng);
}

Matrix ClassGaussians::covariance(int k) const {
    const Matrix& a = transforms[static_cast<size_t>(k)];
    return a * a.transpose();
}

ClassGaussians make_class_gaussians(int n_classes, int dim, double separation,
                                    CovarianceSpec spec, Rng& rng) {
    if (n_classes < 1 || dim < 1) throw DataError("class gaussians need n_classes, dim >= 1");
    ClassGaussians out;
    out.means = separation * random_directions(n_classes, dim, rng);
    out.transforms.reserve(static_cast<size_t>(n_classes));
    for (int k = 0; k < n_classes; ++k) {
        switch (spec) {
            case CovarianceSpec::kIdentity:
                out.transforms.push_back(Matrix::Identity(dim, dim));
                break;
            case CovarianceSpec::kDiagonal: {
                Vector scales(dim);
                for (int i = 0; i < dim; ++i) scales[i] = std::sqrt(rng.uniform(kEigLow, kEigHigh));
                out.transforms.push_back(Matrix(scales.asDiagonal()));
                break;
            }
            case CovarianceSpec::kSpd: {
                Matrix g(dim, dim);
                for (int r = 0; r < dim; ++r)
                    for (int c = 0; c < dim; ++c) g(r, c) = rng.gaussian();
                const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
                Vector scales(dim);
                for (int i = 0; i < dim; ++i) scales[i] = std::sqrt(rng.uniform(kEigLow, kEigHigh));
                out.transforms.push_back(Matrix(q * scales.asDiagonal()));
                break;
            }
        }
    }
    return out;
}

GeneratedTask gen_task(const TaskGenParams& params) {
    if (params.n_classes < 2) throw DataError("gen_task needs at least two classes");
    if (params.dim < 1) throw DataError("gen_task needs dim >= 1");
    if (params.shots_per_class < 1 || params.queries_per_class < 1)
        throw DataError("gen_task needs at least one shot and one query per class");

    Rng rng(params.seed);
    const ClassGaussians dists = make_class_gaussians(params.n_classes, params.dim,
                                                      params.separation, params.covariance, rng);

    const int n_support = params.n_classes * params.shots_per_class;
    const int n_query = params.n_classes * params.queries_per_class;
    Matrix values(n_support + n_query, params.dim);

    GeneratedTask out;
    out.task.n_classes = params.n_classes;
    out.task.support_labels = Matrix::Zero(n_support, params.n_classes);

    int row = 0;
    for (int k = 0; k < params.n_classes; ++k) {
        for (int s = 0; s < params.shots_per_class; ++s, ++row) {
            values.row(row) = dists.sample(k, rng).transpose();
            out.task.support_indices.push_back(row);
            out.task.support_labels(row, k) = 1.0;
        }
    }
    for (int k = 0; k < params.n_classes; ++k) {
        for (int q = 0; q < params.queries_per_class; ++q, ++row) {
            values.row(row) = dists.sample(k, rng).transpose();
            out.task.query_indices.push_back(row);
            out.query_truth.push_back(k);
        }
    }
    out.features = FeatureMatrix(std::move(values));
    return out;
}

GeneratedSlide gen_slide(const SlideGenParams& params) {
    if (params.n_rows < 1 || params.n_cols < 1) throw DataError("gen_slide needs a non-empty grid");
    if (params.block < 1) throw DataError("gen_slide needs block >= 1");
    if (params.dim < 1) throw DataError("gen_slide needs dim >= 1");
    if (params.shots_per_class < 1) throw DataError("gen_slide needs at least one shot per class");
    const int n_classes = static_cast<int>(params.priors.size());
    if (n_classes < 1) throw DataError("gen_slide needs at least one class prior");
    double prior_sum = 0.0;
    for (double p : params.priors) {
        if (p < 0.0) throw DataError("priors are not on the simplex");
        prior_sum += p;
    }
    if (std::abs(prior_sum - 1.0) > 1e-9) throw DataError("priors are not on the simplex");

    Rng rng(params.seed);
    const ClassGaussians dists = make_class_gaussians(n_classes, params.dim, params.separation,
                                                      params.covariance, rng);

    // One class per block x block rectangle; edge blocks are clamped.
    const int block_rows = (params.n_rows + params.block - 1) / params.block;
    const int block_cols = (params.n_cols + params.block - 1) / params.block;
    std::vector<int> block_class(static_cast<size_t>(block_rows) * static_cast<size_t>(block_cols));
    for (auto& cls : block_class) cls = sample_categorical(params.priors, rng);

    GeneratedSlide out;
    out.grid.n_rows = params.n_rows;
    out.grid.n_cols = params.n_cols;
    out.grid.n_classes = n_classes;

    const int n_cells = params.n_rows * params.n_cols;
    const int n_support = n_classes * params.shots_per_class;
    Matrix values(n_cells + n_support, params.dim);

    for (int r = 0; r < params.n_rows; ++r) {
        for (int c = 0; c < params.n_cols; ++c) {
            const int cls = block_class[static_cast<size_t>(r / params.block) *
                                            static_cast<size_t>(block_cols) +
                                        static_cast<size_t>(c / params.block)];
            const int index = r * params.n_cols + c;
            values.row(index) = dists.sample(cls, rng).transpose();
            out.grid.cells.push_back(GridCell{r, c, index, cls});
        }
    }

    out.support_labels = Matrix::Zero(n_support, n_classes);
    int row = n_cells;
    for (int k = 0; k < n_classes; ++k) {
        for (int s = 0; s < params.shots_per_class; ++s, ++row) {
            values.row(row) = dists.sample(k, rng).transpose();
            out.support_indices.push_back(row);
            out.support_labels(row - n_cells, k) = 1.0;
        }
    }
    out.features = FeatureMatrix(std::move(values));
    return out;
}

} // namespace tfs
