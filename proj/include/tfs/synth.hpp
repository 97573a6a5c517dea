#ifndef TFS_SYNTH_HPP
#define TFS_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tfs/rng.hpp"
#include "tfs/types.hpp"
#include "tfs/windowing.hpp"

namespace tfs {

enum class CovarianceSpec {
    kIdentity,
    kDiagonal, // independent per-axis variances in [0.1, 10]
    kSpd,      // random rotation, eigenvalues in [0.1, 10] (condition <= 100)
};

CovarianceSpec parse_covariance_spec(const std::string& name);
std::string covariance_spec_name(CovarianceSpec spec);

// Shared class-conditional Gaussians: means at separation * (random
// orthonormal directions) and a covariance factor per class.
struct ClassGaussians {
    Matrix means;                    // K x d
    std::vector<Matrix> transforms;  // factor A with covariance = A A^T

    Vector sample(int k, Rng& rng) const;
    Matrix covariance(int k) const;
};

ClassGaussians make_class_gaussians(int n_classes, int dim, double separation,
                                    CovarianceSpec spec, Rng& rng);

struct TaskGenParams {
    int n_classes = 5;
    int dim = 32;
    int shots_per_class = 10;
    int queries_per_class = 5;
    double separation = 4.0;
    CovarianceSpec covariance = CovarianceSpec::kIdentity;
    std::uint64_t seed = 0;
};

struct GeneratedTask {
    FeatureMatrix features; // support rows first, then query rows
    FewShotTask task;
    std::vector<int> query_truth;
};

// Deterministic per seed; identical arguments give bit-identical output.
GeneratedTask gen_task(const TaskGenParams& params);

struct SlideGenParams {
    int n_rows = 20;
    int n_cols = 20;
    int block = 5; // side of the contiguous same-class regions, in cells
    std::vector<double> priors = {0.26, 0.14, 0.08, 0.12, 0.40};
    int dim = 32;
    int shots_per_class = 10;
    double separation = 4.0;
    CovarianceSpec covariance = CovarianceSpec::kSpd;
    std::uint64_t seed = 0;
};

struct GeneratedSlide {
    SlideGrid grid;         // cells carry the ground-truth classes
    FeatureMatrix features; // cell rows first (row-major), then support rows
    std::vector<int> support_indices;
    Matrix support_labels;
};

// Partitions the grid into block x block rectangles (clamped at the far
// edges), draws one class per rectangle from the priors, then samples every
// cell's features from its class Gaussian.
GeneratedSlide gen_slide(const SlideGenParams& params);

} // namespace tfs

#endif
