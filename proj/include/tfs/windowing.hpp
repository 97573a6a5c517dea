#ifndef TFS_WINDOWING_HPP
#define TFS_WINDOWING_HPP

#include <optional>
#include <string>
#include <vector>

#include "tfs/types.hpp"

namespace tfs {

struct GridCell {
    int row = 0;
    int col = 0;
    int feature_index = 0;
    std::optional<int> true_class{};
};

// Tiled-slide manifest: grid positions mapped to feature rows, with
// optional ground-truth classes.
struct SlideGrid {
    int n_rows = 0;
    int n_cols = 0;
    int n_classes = 0;
    std::vector<GridCell> cells;

    void validate() const; // throws DataError on any invariant violation
};

struct WindowSpec {
    int span = 5;
    int stride = 2;
};

// Anchor positions along one axis: multiples of stride while the window
// fits, plus one clamped anchor when the extent is not reached exactly.
std::vector<int> axis_anchors(int extent, int span, int stride);

struct Window {
    int anchor_row = 0;
    int anchor_col = 0;
    std::vector<int> cell_ids; // indices into grid.cells, one per query
    FewShotTask task;          // shares the global support block
};

struct WindowPlan {
    std::vector<Window> windows;
    std::vector<std::string> warnings; // empty windows are skipped, not fatal
};

// One transductive task per window anchor; every task shares the given
// support block. Windows that contain no cells are skipped with a warning.
WindowPlan build_windows(const SlideGrid& grid, const WindowSpec& spec,
                         const std::vector<int>& support_indices,
                         const Matrix& support_labels);

inline constexpr int kUnlabeledCell = -1;

struct MapCell {
    Vector posterior;          // empty when never covered
    int argmax = kUnlabeledCell;
    int coverage = 0;
};

struct ClassMap {
    int n_rows = 0;
    int n_cols = 0;
    int n_classes = 0;
    std::vector<MapCell> cells; // row-major, n_rows * n_cols

    const MapCell& at(int row, int col) const {
        return cells[static_cast<size_t>(row) * static_cast<size_t>(n_cols) +
                     static_cast<size_t>(col)];
    }
};

// Fuses per-window query posteriors into a slide-level class map: per cell
// the arithmetic mean of the posteriors of all covering windows, argmax
// with lowest-id tie-break, and the coverage count. The result does not
// depend on window order.
ClassMap aggregate(const std::vector<Window>& windows,
                   const std::vector<Matrix>& window_posteriors, const SlideGrid& grid);

// Writes "row,col,argmax,p_0..p_{K-1},coverage" rows covering every grid
// position, and a P6 image with one pixel per cell (sentinel = black).
void write_class_map_csv(const ClassMap& map, const std::string& path);
void write_class_map_ppm(const ClassMap& map, const std::string& path);

// Round-trip reader for the CSV form.
ClassMap read_class_map_csv(const std::string& path);

} // namespace tfs

#endif
