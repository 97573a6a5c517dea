#include "tfs/image.hpp"

#include <fstream>

#include "tfs/errors.hpp"

namespace tfs {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string token;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    return token;
}

int parse_positive(const std::string& token, const char* what) {
    try {
        size_t used = 0;
        const int value = std::stoi(token, &used);
        if (used != token.size() || value <= 0) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        throw DataError(std::string("ppm: invalid ") + what + " '" + token + "'");
    }
}

} // namespace

Image Image::filled(int width, int height, Pixel color) {
    Image img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<size_t>(width) * static_cast<size_t>(height), color);
    return img;
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file '" + path + "'");
    if (next_token(in) != "P6") throw DataError("ppm: bad magic in '" + path + "'");

    Image img;
    img.width = parse_positive(next_token(in), "width");
    img.height = parse_positive(next_token(in), "height");
    const int maxval = parse_positive(next_token(in), "maxval");
    if (maxval != 255) throw DataError("ppm: only maxval 255 is supported");

    img.pixels.resize(static_cast<size_t>(img.width) * static_cast<size_t>(img.height));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size() * sizeof(Pixel)));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size() * sizeof(Pixel)))
        throw DataError("ppm: truncated pixel payload in '" + path + "'");
    return img;
}

void write_ppm(const Image& image, const std::string& path) {
    if (image.width < 1 || image.height < 1)
        throw DataError("ppm: refusing to write an empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image file '" + path + "'");
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size() * sizeof(Pixel)));
    if (!out) throw DataError("ppm: write failure on '" + path + "'");
}

} // namespace tfs
