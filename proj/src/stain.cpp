#include "tfs/stain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tfs/errors.hpp"

namespace tfs {

namespace {

// Fixed forward constants of the l-alpha-beta color transfer method. The
// LMS->RGB direction is the exact inverse of the forward matrix rather than
// the four-decimal published rounding, so that a round trip only costs
// quantization.
constexpr double kRgbToLms[3][3] = {
    {0.3811, 0.5783, 0.0402},
    {0.1967, 0.7244, 0.0782},
    {0.0241, 0.1288, 0.8444},
};

struct LmsToRgb {
    double m[3][3];
    LmsToRgb() {
        const auto& a = kRgbToLms;
        const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
        m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
        m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
        m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
        m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
        m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
        m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
        m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
        m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
    }
};

const LmsToRgb kLmsToRgb{};
constexpr double kLmsFloor = 1e-6;

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt6 = std::sqrt(6.0);
const double kSqrt2 = std::sqrt(2.0);

std::uint8_t quantize(double v) {
    const long x = std::lround(v * 255.0);
    return static_cast<std::uint8_t>(std::clamp(x, 0L, 255L));
}

} // namespace

std::array<double, 3> rgb_to_lab(const Pixel& rgb) {
    const double r = rgb[0] / 255.0;
    const double g = rgb[1] / 255.0;
    const double b = rgb[2] / 255.0;
    double lms[3];
    for (int i = 0; i < 3; ++i) {
        lms[i] = kRgbToLms[i][0] * r + kRgbToLms[i][1] * g + kRgbToLms[i][2] * b;
        lms[i] = std::log10(std::max(lms[i], kLmsFloor));
    }
    return {(lms[0] + lms[1] + lms[2]) / kSqrt3,
            (lms[0] + lms[1] - 2.0 * lms[2]) / kSqrt6,
            (lms[0] - lms[1]) / kSqrt2};
}

Pixel lab_to_rgb(const std::array<double, 3>& lab) {
    const double l = lab[0] / kSqrt3;
    const double a = lab[1] / kSqrt6;
    const double b = lab[2] / kSqrt2;
    const double log_lms[3] = {l + a + b, l + a - b, l - 2.0 * a};
    double lms[3];
    for (int i = 0; i < 3; ++i) lms[i] = std::pow(10.0, log_lms[i]);
    Pixel out;
    for (int i = 0; i < 3; ++i) {
        const double v = kLmsToRgb.m[i][0] * lms[0] + kLmsToRgb.m[i][1] * lms[1] +
                         kLmsToRgb.m[i][2] * lms[2];
        out[i] = quantize(v);
    }
    return out;
}

ChannelStats compute_stats(const Image& image) {
    if (image.pixels.empty()) throw DataError("cannot compute stats of a zero-pixel image");
    const double n = static_cast<double>(image.pixels.size());

    std::array<double, 3> sum{};
    std::vector<std::array<double, 3>> lab(image.pixels.size());
    for (size_t i = 0; i < image.pixels.size(); ++i) {
        lab[i] = rgb_to_lab(image.pixels[i]);
        for (int c = 0; c < 3; ++c) sum[c] += lab[i][c];
    }
    ChannelStats stats;
    for (int c = 0; c < 3; ++c) stats.mean[c] = sum[c] / n;

    std::array<double, 3> sq{};
    for (const auto& px : lab)
        for (int c = 0; c < 3; ++c) {
            const double d = px[c] - stats.mean[c];
            sq[c] += d * d;
        }
    for (int c = 0; c < 3; ++c) stats.stddev[c] = std::sqrt(sq[c] / n);
    return stats;
}

Image normalize(const Image& image, const ChannelStats& target) {
    const ChannelStats src = compute_stats(image);
    Image out;
    out.width = image.width;
    out.height = image.height;
    out.pixels.resize(image.pixels.size());
    for (size_t i = 0; i < image.pixels.size(); ++i) {
        std::array<double, 3> lab = rgb_to_lab(image.pixels[i]);
        for (int c = 0; c < 3; ++c) {
            const double scale = src.stddev[c] > 0.0 ? target.stddev[c] / src.stddev[c] : 1.0;
            lab[c] = (lab[c] - src.mean[c]) * scale + target.mean[c];
        }
        out.pixels[i] = lab_to_rgb(lab);
    }
    return out;
}

void write_stats(const ChannelStats& stats, const std::string& path) {
    nlohmann::ordered_json j;
    j["mean"] = stats.mean;
    j["std"] = stats.stddev;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write stats file '" + path + "'");
    out << j.dump(2) << '\n';
}

ChannelStats read_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stats file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("stats file '" + path + "': " + e.what());
    }
    ChannelStats stats;
    try {
        const auto mean = j.at("mean");
        const auto stddev = j.at("std");
        if (mean.size() != 3 || stddev.size() != 3)
            throw DataError("stats file must hold three means and three stds");
        for (int c = 0; c < 3; ++c) {
            stats.mean[static_cast<size_t>(c)] = mean.at(static_cast<size_t>(c)).get<double>();
            stats.stddev[static_cast<size_t>(c)] = stddev.at(static_cast<size_t>(c)).get<double>();
            if (stats.stddev[static_cast<size_t>(c)] < 0.0)
                throw DataError("stats file has a negative standard deviation");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("stats file '" + path + "': " + e.what());
    }
    return stats;
}

} // namespace tfs
