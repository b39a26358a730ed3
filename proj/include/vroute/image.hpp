#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vroute/core.hpp"

namespace vroute {

/// Decoded 8-bit image in height × width × channels (interleaved) order.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    bool operator==(const Image&) const = default;
};

/// Dims plus population mean/std per channel, each rounded to one decimal.
MetadataSummary summarize_image(const Image& image);

/// Rounds to one decimal place, half away from zero.
double round1(double value);

/// Binary PGM (P5, 1 channel) and PPM (P6, 3 channels), maxval 255.
Image read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& image);

}  // namespace vroute
