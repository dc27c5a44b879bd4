#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace voidforge {

// 8-bit image, 1 channel (grayscale) or 3 channels (RGB), row-major.
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    ImageU8() = default;
    ImageU8(int w, int h, int c)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, 0) {}

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Minimal PNG codec: 8-bit grayscale or RGB, non-interlaced. The encoder
// always emits one IDAT with a fixed zlib level, so output bytes are a pure
// function of the pixels. The decoder handles all five scanline filters.
std::vector<std::uint8_t> encode_png(const ImageU8& img);
ImageU8 decode_png(const std::uint8_t* bytes, std::size_t size);
ImageU8 decode_png(const std::vector<std::uint8_t>& bytes);

void write_png(const std::filesystem::path& path, const ImageU8& img);
ImageU8 read_png(const std::filesystem::path& path);

std::string base64_encode(const std::uint8_t* bytes, std::size_t size);
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Byte-level file helpers shared by the binary format readers/writers.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::uint8_t* bytes,
                      std::size_t size);

}  // namespace voidforge
