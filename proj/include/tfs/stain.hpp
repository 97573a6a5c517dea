#ifndef TFS_STAIN_HPP
#define TFS_STAIN_HPP

#include <array>
#include <string>

#include "tfs/image.hpp"

namespace tfs {

// Per-channel mean and standard deviation in l-alpha-beta space.
struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

// Forward/backward color-space transform for one pixel. LMS values are
// floored at 1e-6 before the log to keep black pixels finite.
std::array<double, 3> rgb_to_lab(const Pixel& rgb);
Pixel lab_to_rgb(const std::array<double, 3>& lab);

// Two-pass population statistics over all pixels in l-alpha-beta space.
ChannelStats compute_stats(const Image& image);

// Reinhard transfer: per channel x' = (x - mean_src) * (std_tgt / std_src)
// + mean_tgt, then back to RGB with clamping. A zero source deviation
// degrades to a pure shift on that channel.
Image normalize(const Image& image, const ChannelStats& target);

// Stats persist as a small JSON file of six numbers.
void write_stats(const ChannelStats& stats, const std::string& path);
ChannelStats read_stats(const std::string& path);

} // namespace tfs

#endif
