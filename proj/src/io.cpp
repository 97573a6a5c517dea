#include "tfs/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tfs {

namespace {

constexpr char kFeatureMagic[4] = {'F', 'S', 'F', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

float get_f32(const unsigned char* p) {
    const std::uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

void put_f32(std::string& buf, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    put_u32(buf, bits);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

int parse_int(const std::string& s) {
    size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

FeatureMatrix read_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());

    if (data.size() < 4 || std::memcmp(data.data(), kFeatureMagic, 4) != 0)
        throw DataError("feature file '" + path + "': bad magic at byte 0");
    if (data.size() < 16)
        throw DataError("feature file '" + path + "': truncated header at byte " +
                        std::to_string(data.size()));
    const std::uint32_t dim = get_u32(bytes + 4);
    const std::uint64_t n_samples = get_u64(bytes + 8);
    if (dim == 0) throw DataError("feature file '" + path + "': dim = 0 at byte 4");
    if (n_samples == 0) throw DataError("feature file '" + path + "': n_samples = 0 at byte 8");

    const std::uint64_t n_values = static_cast<std::uint64_t>(dim) * n_samples;
    const std::uint64_t expected = 16 + n_values * 4;
    if (data.size() < expected)
        throw DataError("feature file '" + path + "': truncated payload at byte " +
                        std::to_string(data.size()) + " (expected " + std::to_string(expected) +
                        " bytes)");

    Matrix values(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(dim));
    for (std::uint64_t i = 0; i < n_values; ++i) {
        const std::uint64_t offset = 16 + i * 4;
        const float f = get_f32(bytes + offset);
        if (!std::isfinite(f))
            throw DataError("feature file '" + path + "': non-finite value at byte " +
                            std::to_string(offset));
        values(static_cast<Eigen::Index>(i / dim), static_cast<Eigen::Index>(i % dim)) = f;
    }
    return FeatureMatrix(std::move(values));
}

void write_features(const FeatureMatrix& matrix, const std::string& path) {
    std::string buf;
    buf.reserve(16 + static_cast<size_t>(matrix.n_samples()) * static_cast<size_t>(matrix.dim()) * 4);
    buf.append(kFeatureMagic, 4);
    put_u32(buf, static_cast<std::uint32_t>(matrix.dim()));
    put_u64(buf, static_cast<std::uint64_t>(matrix.n_samples()));
    for (int i = 0; i < matrix.n_samples(); ++i)
        for (int j = 0; j < matrix.dim(); ++j)
            put_f32(buf, static_cast<float>(matrix.values()(i, j)));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write feature file '" + path + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failure on '" + path + "'");
}

std::map<int, int> read_labels(const std::string& path, std::optional<int> n_classes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "index,class")
        throw DataError("label file '" + path + "': expected header \"index,class\" at line 1");

    std::map<int, int> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        int index = 0, cls = 0;
        try {
            if (fields.size() != 2) throw std::invalid_argument(line);
            index = parse_int(fields[0]);
            cls = parse_int(fields[1]);
        } catch (const std::exception&) {
            throw DataError("label file '" + path + "': malformed row at line " +
                            std::to_string(line_no));
        }
        if (index < 0)
            throw DataError("label file '" + path + "': negative index at line " +
                            std::to_string(line_no));
        if (cls < 0 || (n_classes && cls >= *n_classes))
            throw DataError("label file '" + path + "': class out of range at line " +
                            std::to_string(line_no));
        if (!labels.emplace(index, cls).second)
            throw DataError("label file '" + path + "': duplicate index at line " +
                            std::to_string(line_no));
    }
    return labels;
}

void write_labels(const std::map<int, int>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write label file '" + path + "'");
    out << "index,class\n";
    for (const auto& [index, cls] : labels) out << index << ',' << cls << '\n';
    if (!out) throw DataError("write failure on '" + path + "'");
}

SlideGrid read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("manifest '" + path + "' is empty");
    SlideGrid grid;
    {
        const auto fields = split_csv(strip_cr(line));
        try {
            if (fields.size() != 4 || fields[0] != "grid") throw std::invalid_argument(line);
            grid.n_rows = parse_int(fields[1]);
            grid.n_cols = parse_int(fields[2]);
            grid.n_classes = parse_int(fields[3]);
        } catch (const std::exception&) {
            throw DataError("manifest '" + path +
                            "': expected \"grid,<rows>,<cols>,<classes>\" at line 1");
        }
    }
    if (!std::getline(in, line) || strip_cr(line) != "row,col,feature,class")
        throw DataError("manifest '" + path +
                        "': expected header \"row,col,feature,class\" at line 2");

    int line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        GridCell cell;
        try {
            if (fields.size() != 4) throw std::invalid_argument(line);
            cell.row = parse_int(fields[0]);
            cell.col = parse_int(fields[1]);
            cell.feature_index = parse_int(fields[2]);
            if (!fields[3].empty()) cell.true_class = parse_int(fields[3]);
        } catch (const std::exception&) {
            throw DataError("manifest '" + path + "': malformed row at line " +
                            std::to_string(line_no));
        }
        if (cell.row < 0 || cell.row >= grid.n_rows || cell.col < 0 || cell.col >= grid.n_cols)
            throw DataError("manifest '" + path + "': cell out of bounds at line " +
                            std::to_string(line_no));
        if (cell.feature_index < 0)
            throw DataError("manifest '" + path + "': negative feature index at line " +
                            std::to_string(line_no));
        if (cell.true_class && (*cell.true_class < 0 || *cell.true_class >= grid.n_classes))
            throw DataError("manifest '" + path + "': class out of range at line " +
                            std::to_string(line_no));
        grid.cells.push_back(cell);
    }
    try {
        grid.validate();
    } catch (const DataError& e) {
        throw DataError("manifest '" + path + "': " + e.what());
    }
    return grid;
}

void write_manifest(const SlideGrid& grid, const std::string& path) {
    grid.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest '" + path + "'");
    out << "grid," << grid.n_rows << ',' << grid.n_cols << ',' << grid.n_classes << '\n';
    out << "row,col,feature,class\n";
    for (const auto& cell : grid.cells) {
        out << cell.row << ',' << cell.col << ',' << cell.feature_index << ',';
        if (cell.true_class) out << *cell.true_class;
        out << '\n';
    }
    if (!out) throw DataError("write failure on '" + path + "'");
}

ModelFile read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + path + "': " + e.what());
    }

    ModelFile model;
    try {
        model.dim = j.at("dim").get<int>();
        model.n_classes = j.at("n_classes").get<int>();
        model.lambda = j.at("lambda").get<double>();
        if (!j.at("rho").is_null()) model.rho = j.at("rho").get<double>();
        const auto& classes = j.at("classes");
        if (static_cast<int>(classes.size()) != model.n_classes)
            throw DataError("model file '" + path + "': class count mismatch");
        for (const auto& entry : classes) {
            const auto centroid_values = entry.at("centroid").get<std::vector<double>>();
            const auto precision_values = entry.at("precision").get<std::vector<double>>();
            const double stored_log_det = entry.at("log_det").get<double>();
            if (static_cast<int>(centroid_values.size()) != model.dim)
                throw DataError("model file '" + path + "': centroid length mismatch");
            if (static_cast<int>(precision_values.size()) != model.dim * model.dim)
                throw DataError("model file '" + path + "': precision length mismatch");
            Vector centroid = Eigen::Map<const Vector>(centroid_values.data(), model.dim);
            Matrix precision(model.dim, model.dim);
            for (int r = 0; r < model.dim; ++r)
                for (int c = 0; c < model.dim; ++c)
                    precision(r, c) = precision_values[static_cast<size_t>(r * model.dim + c)];
            ClassModel cm(std::move(centroid), std::move(precision));
            if (std::abs(cm.log_det() - stored_log_det) > 1e-8)
                throw DataError("model file '" + path +
                                "': stored log_det disagrees with the precision matrix");
            model.models.push_back(std::move(cm));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file '" + path + "': " + e.what());
    }
    return model;
}

void write_model(const ModelFile& model, const std::string& path) {
    nlohmann::ordered_json j;
    j["dim"] = model.dim;
    j["n_classes"] = model.n_classes;
    j["lambda"] = model.lambda;
    if (model.rho)
        j["rho"] = *model.rho;
    else
        j["rho"] = nullptr;
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (const auto& cm : model.models) {
        nlohmann::ordered_json entry;
        entry["centroid"] = std::vector<double>(cm.centroid().data(),
                                                cm.centroid().data() + cm.centroid().size());
        std::vector<double> precision;
        precision.reserve(static_cast<size_t>(model.dim) * static_cast<size_t>(model.dim));
        for (int r = 0; r < model.dim; ++r)
            for (int c = 0; c < model.dim; ++c) precision.push_back(cm.precision()(r, c));
        entry["precision"] = precision;
        entry["log_det"] = cm.log_det();
        classes.push_back(std::move(entry));
    }
    j["classes"] = std::move(classes);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failure on '" + path + "'");
}

void write_posteriors(const std::vector<int>& query_indices, const Matrix& posteriors,
                      const std::string& path) {
    if (static_cast<Eigen::Index>(query_indices.size()) != posteriors.rows())
        throw DataError("posterior table: index count does not match row count");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write posterior file '" + path + "'");
    out << "query_index";
    for (int k = 0; k < posteriors.cols(); ++k) out << ",p_" << k;
    out << ",argmax\n";
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        out << query_indices[static_cast<size_t>(i)];
        for (int k = 0; k < posteriors.cols(); ++k) out << ',' << format_double(posteriors(i, k));
        out << ',' << argmax_lowest(posteriors.row(i)) << '\n';
    }
    if (!out) throw DataError("write failure on '" + path + "'");
}

PosteriorTable read_posteriors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open posterior file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("posterior file '" + path + "' is empty");
    const auto header = split_csv(strip_cr(line));
    if (header.size() < 3 || header.front() != "query_index" || header.back() != "argmax")
        throw DataError("posterior file '" + path + "': unexpected header");
    const int n_classes = static_cast<int>(header.size()) - 2;

    PosteriorTable table;
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        try {
            if (static_cast<int>(fields.size()) != n_classes + 2)
                throw std::invalid_argument(line);
            table.query_indices.push_back(parse_int(fields.front()));
            std::vector<double> p(static_cast<size_t>(n_classes));
            for (int k = 0; k < n_classes; ++k) p[static_cast<size_t>(k)] = std::stod(fields[static_cast<size_t>(k + 1)]);
            rows.push_back(std::move(p));
            table.argmax.push_back(parse_int(fields.back()));
        } catch (const std::exception&) {
            throw DataError("posterior file '" + path + "': malformed row at line " +
                            std::to_string(line_no));
        }
    }
    table.posteriors.resize(static_cast<Eigen::Index>(rows.size()), n_classes);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int k = 0; k < n_classes; ++k)
            table.posteriors(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<size_t>(k)];
    return table;
}

} // namespace tfs
