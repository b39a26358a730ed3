#include "vroute/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "vroute/errors.hpp"
#include "vroute/kernels.hpp"

namespace vroute {

double round1(double value) { return std::round(value * 10.0) / 10.0; }

MetadataSummary summarize_image(const Image& image) {
    if (image.height < 1 || image.width < 1 || image.channels < 1)
        throw InvalidInput("summarize_image: image must have at least one pixel and channel");
    const std::size_t n = image.pixel_count();
    const auto c = static_cast<std::size_t>(image.channels);
    if (image.pixels.size() != n * c) throw InvalidInput("summarize_image: pixel buffer does not match dims");

    const auto& k = kernels::active();
    MetadataSummary out;
    out.height = image.height;
    out.width = image.width;
    out.channels = image.channels;

    std::vector<std::uint8_t> plane;
    if (c > 1) plane.resize(n);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const std::uint8_t* data = image.pixels.data();
        if (c > 1) {
            for (std::size_t i = 0; i < n; ++i) plane[i] = image.pixels[i * c + ch];
            data = plane.data();
        }
        std::uint64_t sum = 0, sum_sq = 0;
        k.u8_moments(data, n, &sum, &sum_sq);
        // n²·var = n·Σx² − (Σx)², exact in 128-bit integers.
        const unsigned __int128 nn = n;
        const unsigned __int128 scaled_var = nn * sum_sq - static_cast<unsigned __int128>(sum) * sum;
        const double nd = static_cast<double>(n);
        const double mean = static_cast<double>(sum) / nd;
        const double std = std::sqrt(static_cast<double>(scaled_var)) / nd;
        out.channel_means.push_back(round1(mean));
        out.channel_stds.push_back(round1(std));
    }
    return out;
}

namespace {

int read_header_int(std::istream& in, const std::filesystem::path& path) {
    int ch = in.peek();
    while (ch != EOF && (std::isspace(ch) || ch == '#')) {
        if (ch == '#') {
            std::string skip;
            std::getline(in, skip);
        } else {
            in.get();
        }
        ch = in.peek();
    }
    int value = 0;
    if (!(in >> value)) throw IoError("malformed PNM header in " + path.string());
    return value;
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path.string());
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else throw IoError("unsupported image format in " + path.string() + " (need binary PGM/PPM)");
    Image img;
    img.width = read_header_int(in, path);
    img.height = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (maxval != 255) throw IoError("only 8-bit PNM is supported: " + path.string());
    in.get();  // single whitespace after maxval
    img.channels = channels;
    img.pixels.resize(img.pixel_count() * static_cast<std::size_t>(channels));
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw IoError("truncated image " + path.string());
    return img;
}

void write_pnm(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3) throw InvalidInput("PNM supports 1 or 3 channels");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image " + path.string());
    out << (image.channels == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace vroute
