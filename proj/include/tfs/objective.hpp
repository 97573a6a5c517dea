#ifndef TFS_OBJECTIVE_HPP
#define TFS_OBJECTIVE_HPP

#include <vector>

#include "tfs/types.hpp"

namespace tfs {

struct ObjectiveBreakdown {
    double f_value = 0.0; // Gaussian data fidelity over all task samples
    double g_value = 0.0; // entropic barrier over query rows, always <= 0
    double h_value = 0.0; // partition entropy, in [0, ln K]
    double lambda = 0.0;
    double total = 0.0;   // f + g + lambda * h
};

// 0.5 * sum_nk u_nk Mahalanobis_k(z_n) - 0.5 * sum_nk u_nk ln det(precision_k),
// summed over support and query rows alike.
double data_fidelity(const AssignmentMatrix& U, const std::vector<ClassModel>& models,
                     const FeatureMatrix& features, const FewShotTask& task);

// sum over query rows of sum_k u ln u, with 0 ln 0 := 0.
double entropic_barrier(const AssignmentMatrix& U);

struct PartitionEntropy {
    double h = 0.0;
    Proportions pi;
};

// Mean query assignment per class and its entropy -sum_k pi_k ln pi_k.
PartitionEntropy partition_entropy(const AssignmentMatrix& U);

ObjectiveBreakdown total_objective(const AssignmentMatrix& U,
                                   const std::vector<ClassModel>& models,
                                   const FeatureMatrix& features, const FewShotTask& task,
                                   double lambda);

} // namespace tfs

#endif
