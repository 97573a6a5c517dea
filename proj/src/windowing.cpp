#include "tfs/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "tfs/image.hpp"

namespace tfs {

namespace {

// Map colors, one per class id (cycled past five), sentinel cells black.
constexpr Pixel kPalette[5] = {
    {0, 158, 115},   // green
    {148, 103, 189}, // purple
    {140, 86, 75},   // brown
    {230, 159, 0},   // orange
    {240, 228, 66},  // yellow
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void SlideGrid::validate() const {
    if (n_rows < 1 || n_cols < 1) throw DataError("slide grid has empty extent");
    if (n_classes < 1) throw DataError("slide grid needs n_classes >= 1");
    std::set<std::pair<int, int>> seen;
    for (const auto& cell : cells) {
        if (cell.row < 0 || cell.row >= n_rows || cell.col < 0 || cell.col >= n_cols)
            throw DataError("grid cell (" + std::to_string(cell.row) + "," +
                            std::to_string(cell.col) + ") out of bounds");
        if (!seen.insert({cell.row, cell.col}).second)
            throw DataError("duplicate grid cell (" + std::to_string(cell.row) + "," +
                            std::to_string(cell.col) + ")");
        if (cell.feature_index < 0)
            throw DataError("grid cell has negative feature index");
        if (cell.true_class && (*cell.true_class < 0 || *cell.true_class >= n_classes))
            throw DataError("grid cell true class out of range");
    }
}

std::vector<int> axis_anchors(int extent, int span, int stride) {
    if (extent < 1 || span < 1) throw DataError("axis anchors need positive extent and span");
    if (stride < 1 || stride > span) throw DataError("stride must satisfy 1 <= stride <= span");
    if (extent <= span) return {0};
    std::vector<int> anchors;
    for (int a = 0; a + span <= extent; a += stride) anchors.push_back(a);
    if ((extent - span) % stride != 0) anchors.push_back(extent - span);
    return anchors;
}

WindowPlan build_windows(const SlideGrid& grid, const WindowSpec& spec,
                         const std::vector<int>& support_indices,
                         const Matrix& support_labels) {
    grid.validate();
    if (static_cast<int>(support_indices.size()) != support_labels.rows() ||
        support_labels.cols() != grid.n_classes)
        throw DataError("support block shape does not match the grid's class count");

    // Row-major position -> cell id lookup.
    std::vector<int> cell_at(static_cast<size_t>(grid.n_rows) * static_cast<size_t>(grid.n_cols),
                             -1);
    for (size_t i = 0; i < grid.cells.size(); ++i) {
        const auto& c = grid.cells[i];
        cell_at[static_cast<size_t>(c.row) * static_cast<size_t>(grid.n_cols) +
                static_cast<size_t>(c.col)] = static_cast<int>(i);
    }

    WindowPlan plan;
    const std::vector<int> row_anchors = axis_anchors(grid.n_rows, spec.span, spec.stride);
    const std::vector<int> col_anchors = axis_anchors(grid.n_cols, spec.span, spec.stride);
    for (int ar : row_anchors) {
        for (int ac : col_anchors) {
            Window window;
            window.anchor_row = ar;
            window.anchor_col = ac;
            const int r_end = std::min(ar + spec.span, grid.n_rows);
            const int c_end = std::min(ac + spec.span, grid.n_cols);
            for (int r = ar; r < r_end; ++r) {
                for (int c = ac; c < c_end; ++c) {
                    const int id = cell_at[static_cast<size_t>(r) * static_cast<size_t>(grid.n_cols) +
                                           static_cast<size_t>(c)];
                    if (id >= 0) window.cell_ids.push_back(id);
                }
            }
            if (window.cell_ids.empty()) {
                plan.warnings.push_back("window at (" + std::to_string(ar) + "," +
                                        std::to_string(ac) + ") contains no cells; skipped");
                continue;
            }
            window.task.support_indices = support_indices;
            window.task.support_labels = support_labels;
            window.task.n_classes = grid.n_classes;
            window.task.query_indices.reserve(window.cell_ids.size());
            for (int id : window.cell_ids)
                window.task.query_indices.push_back(grid.cells[static_cast<size_t>(id)].feature_index);
            plan.windows.push_back(std::move(window));
        }
    }
    return plan;
}

ClassMap aggregate(const std::vector<Window>& windows,
                   const std::vector<Matrix>& window_posteriors, const SlideGrid& grid) {
    if (windows.size() != window_posteriors.size())
        throw DataError("aggregate: window and posterior counts differ");

    ClassMap map;
    map.n_rows = grid.n_rows;
    map.n_cols = grid.n_cols;
    map.n_classes = grid.n_classes;
    map.cells.assign(static_cast<size_t>(grid.n_rows) * static_cast<size_t>(grid.n_cols),
                     MapCell{});

    std::vector<Vector> sums(map.cells.size());
    for (size_t w = 0; w < windows.size(); ++w) {
        const Window& window = windows[w];
        const Matrix& posteriors = window_posteriors[w];
        if (posteriors.rows() != static_cast<Eigen::Index>(window.cell_ids.size()) ||
            posteriors.cols() != grid.n_classes)
            throw DataError("aggregate: posterior block shape mismatch at window " +
                            std::to_string(w));
        for (size_t q = 0; q < window.cell_ids.size(); ++q) {
            const auto& cell = grid.cells[static_cast<size_t>(window.cell_ids[q])];
            const size_t pos = static_cast<size_t>(cell.row) * static_cast<size_t>(grid.n_cols) +
                               static_cast<size_t>(cell.col);
            if (map.cells[pos].coverage == 0)
                sums[pos] = Vector::Zero(grid.n_classes);
            sums[pos] += posteriors.row(static_cast<Eigen::Index>(q)).transpose();
            map.cells[pos].coverage += 1;
        }
    }
    for (size_t pos = 0; pos < map.cells.size(); ++pos) {
        MapCell& cell = map.cells[pos];
        if (cell.coverage == 0) continue; // stays unlabeled
        cell.posterior = sums[pos] / static_cast<double>(cell.coverage);
        cell.argmax = argmax_lowest(cell.posterior.transpose());
    }
    return map;
}

void write_class_map_csv(const ClassMap& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write class map '" + path + "'");
    out << "row,col,argmax";
    for (int k = 0; k < map.n_classes; ++k) out << ",p_" << k;
    out << ",coverage\n";
    for (int r = 0; r < map.n_rows; ++r) {
        for (int c = 0; c < map.n_cols; ++c) {
            const MapCell& cell = map.at(r, c);
            out << r << ',' << c << ',' << cell.argmax;
            for (int k = 0; k < map.n_classes; ++k)
                out << ',' << format_double(cell.coverage > 0 ? cell.posterior[k] : 0.0);
            out << ',' << cell.coverage << '\n';
        }
    }
    if (!out) throw DataError("write failure on '" + path + "'");
}

void write_class_map_ppm(const ClassMap& map, const std::string& path) {
    Image img = Image::filled(map.n_cols, map.n_rows, Pixel{0, 0, 0});
    for (int r = 0; r < map.n_rows; ++r) {
        for (int c = 0; c < map.n_cols; ++c) {
            const MapCell& cell = map.at(r, c);
            if (cell.argmax != kUnlabeledCell) img.at(c, r) = kPalette[cell.argmax % 5];
        }
    }
    write_ppm(img, path);
}

ClassMap read_class_map_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open class map '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw DataError("class map '" + path + "' is empty");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    int n_classes = 0;
    {
        std::stringstream ss(header);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        if (cols.size() < 4 || cols[0] != "row" || cols[1] != "col" || cols[2] != "argmax" ||
            cols.back() != "coverage")
            throw DataError("class map '" + path + "': unexpected header");
        n_classes = static_cast<int>(cols.size()) - 4;
    }

    struct Row {
        int row, col, argmax, coverage;
        Vector posterior;
    };
    std::vector<Row> rows;
    std::string line;
    int line_no = 1;
    int max_row = -1, max_col = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (static_cast<int>(fields.size()) != n_classes + 4)
            throw DataError("class map '" + path + "': malformed row at line " +
                            std::to_string(line_no));
        try {
            Row r;
            r.row = std::stoi(fields[0]);
            r.col = std::stoi(fields[1]);
            r.argmax = std::stoi(fields[2]);
            r.posterior = Vector::Zero(n_classes);
            for (int k = 0; k < n_classes; ++k)
                r.posterior[k] = std::stod(fields[static_cast<size_t>(3 + k)]);
            r.coverage = std::stoi(fields.back());
            max_row = std::max(max_row, r.row);
            max_col = std::max(max_col, r.col);
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw DataError("class map '" + path + "': malformed row at line " +
                            std::to_string(line_no));
        }
    }
    if (rows.empty()) throw DataError("class map '" + path + "' has no data rows");

    ClassMap map;
    map.n_rows = max_row + 1;
    map.n_cols = max_col + 1;
    map.n_classes = n_classes;
    map.cells.assign(static_cast<size_t>(map.n_rows) * static_cast<size_t>(map.n_cols), MapCell{});
    for (const auto& r : rows) {
        MapCell& cell = map.cells[static_cast<size_t>(r.row) * static_cast<size_t>(map.n_cols) +
                                  static_cast<size_t>(r.col)];
        cell.argmax = r.argmax;
        cell.coverage = r.coverage;
        if (r.coverage > 0) cell.posterior = r.posterior;
    }
    return map;
}

} // namespace tfs
