#ifndef TFS_BASELINES_HPP
#define TFS_BASELINES_HPP

#include <string>
#include <vector>

#include "tfs/types.hpp"

namespace tfs {

enum class SimpleShotVariant {
    kUN,   // raw features
    kL2N,  // row-wise unit L2 normalization
    kCL2N, // subtract the support mean, then L2 normalization
};

SimpleShotVariant parse_simpleshot_variant(const std::string& name);
std::string simpleshot_variant_name(SimpleShotVariant variant);

// Nearest support-class centroid in Euclidean distance after the variant's
// transform; ties go to the lowest class id. Zero rows are left
// unnormalized by the L2 transforms. Inductive: each query's prediction
// depends only on that query and the support set.
std::vector<int> simpleshot(const FewShotTask& task, const FeatureMatrix& features,
                            SimpleShotVariant variant);

} // namespace tfs

#endif
