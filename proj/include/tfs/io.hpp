#ifndef TFS_IO_HPP
#define TFS_IO_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tfs/types.hpp"
#include "tfs/windowing.hpp"

namespace tfs {

// Feature file (.fsf): magic "FSF1", u32 little-endian dim, u64
// little-endian n_samples, then n_samples * dim IEEE-754 32-bit floats,
// row-major, little-endian. Values are stored in single precision;
// round-trips are bit-exact for payloads representable at that width.
FeatureMatrix read_features(const std::string& path);
void write_features(const FeatureMatrix& matrix, const std::string& path);

// Label CSV with header "index,class". When n_classes is given, class ids
// are checked against it. Errors carry 1-based line numbers.
std::map<int, int> read_labels(const std::string& path, std::optional<int> n_classes = {});
void write_labels(const std::map<int, int>& labels, const std::string& path);

// Slide manifest: a metadata line "grid,<n_rows>,<n_cols>,<n_classes>",
// a header "row,col,feature,class", then one row per cell (class may be
// empty when the ground truth is unknown).
SlideGrid read_manifest(const std::string& path);
void write_manifest(const SlideGrid& grid, const std::string& path);

struct ModelFile {
    int dim = 0;
    int n_classes = 0;
    double lambda = 1250.0;
    std::optional<double> rho{}; // empty when the per-class default was used
    std::vector<ClassModel> models;
};

// JSON model file; the stored log-determinants are validated against their
// Cholesky recomputation on read.
ModelFile read_model(const std::string& path);
void write_model(const ModelFile& model, const std::string& path);

struct PosteriorTable {
    std::vector<int> query_indices;
    Matrix posteriors;
    std::vector<int> argmax;
};

// Per-query posterior CSV: "query_index,p_0,...,p_{K-1},argmax".
void write_posteriors(const std::vector<int>& query_indices, const Matrix& posteriors,
                      const std::string& path);
PosteriorTable read_posteriors(const std::string& path);

} // namespace tfs

#endif
