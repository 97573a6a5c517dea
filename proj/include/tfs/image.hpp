#ifndef TFS_IMAGE_HPP
#define TFS_IMAGE_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tfs {

using Pixel = std::array<std::uint8_t, 3>;

// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<Pixel> pixels;

    static Image filled(int width, int height, Pixel color);

    const Pixel& at(int x, int y) const {
        return pixels[static_cast<size_t>(y) * static_cast<size_t>(width) +
                      static_cast<size_t>(x)];
    }
    Pixel& at(int x, int y) {
        return pixels[static_cast<size_t>(y) * static_cast<size_t>(width) +
                      static_cast<size_t>(x)];
    }
    int n_pixels() const { return width * height; }
};

// Binary PPM (P6, maxval 255) reader/writer. The reader accepts comments
// and arbitrary whitespace in the header; the writer emits the canonical
// "P6\n<w> <h>\n255\n" form.
Image read_ppm(const std::string& path);
void write_ppm(const Image& image, const std::string& path);

} // namespace tfs

#endif
