#include "voidforge/image.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "voidforge/errors.hpp"

namespace voidforge {

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = crc32(crc32(0L, Z_NULL, 0), out.data() + crc_start,
                            static_cast<uInt>(4 + payload.size()));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> zlib_deflate(const std::uint8_t* data, std::size_t size) {
    uLongf bound = compressBound(static_cast<uLong>(size));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, data, static_cast<uLong>(size), 6) != Z_OK)
        throw IoError("png: deflate failed");
    out.resize(bound);
    return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t size,
                                       std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf out_size = static_cast<uLongf>(expected);
    const int rc = uncompress(out.data(), &out_size, data, static_cast<uLong>(size));
    if (rc != Z_OK || out_size != expected) throw IoError("png: inflate failed");
    return out;
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageU8& img) {
    if (img.width <= 0 || img.height <= 0 || (img.channels != 1 && img.channels != 3))
        throw IoError("png: unsupported image shape");

    std::vector<std::uint8_t> out(kPngSig, kPngSig + 8);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                     // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);             // gray / truecolor
    ihdr.push_back(0);                                     // deflate
    ihdr.push_back(0);                                     // filter method
    ihdr.push_back(0);                                     // no interlace
    append_chunk(out, "IHDR", ihdr);

    // filter byte 0 (None) on every scanline
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        const std::uint8_t* row = img.data.data() + static_cast<std::size_t>(y) * stride;
        raw.insert(raw.end(), row, row + stride);
    }
    append_chunk(out, "IDAT", zlib_deflate(raw.data(), raw.size()));
    append_chunk(out, "IEND", {});
    return out;
}

ImageU8 decode_png(const std::uint8_t* bytes, std::size_t size) {
    if (size < 8 || std::memcmp(bytes, kPngSig, 8) != 0) throw BadMagic("png: bad signature");

    int width = 0, height = 0, channels = 0;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool seen_ihdr = false;
    while (pos + 8 <= size) {
        const std::uint32_t len = get_u32_be(bytes + pos);
        if (pos + 12 + len > size) throw Truncated("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes + pos + 4);
        const std::uint8_t* payload = bytes + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw IoError("png: bad IHDR");
            width = static_cast<int>(get_u32_be(payload));
            height = static_cast<int>(get_u32_be(payload + 4));
            const int depth = payload[8];
            const int color = payload[9];
            if (depth != 8 || (color != 0 && color != 2) || payload[12] != 0)
                throw IoError("png: unsupported format (need 8-bit gray/rgb, no interlace)");
            channels = color == 0 ? 1 : 3;
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || width <= 0 || height <= 0) throw IoError("png: missing IHDR");

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    const std::size_t raw_size = (stride + 1) * height;
    const std::vector<std::uint8_t> raw = zlib_inflate(idat.data(), idat.size(), raw_size);

    ImageU8 img(width, height, channels);
    const int bpp = channels;
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[(stride + 1) * y];
        const std::uint8_t* src = raw.data() + (stride + 1) * y + 1;
        std::uint8_t* dst = img.data.data() + stride * y;
        const std::uint8_t* prev = y > 0 ? img.data.data() + stride * (y - 1) : nullptr;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(bpp) ? dst[i - bpp] : 0;
            const int b = prev ? prev[i] : 0;
            const int c = (prev && i >= static_cast<std::size_t>(bpp)) ? prev[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw IoError("png: unknown filter type");
            }
            dst[i] = static_cast<std::uint8_t>(v & 0xFF);
        }
    }
    return img;
}

ImageU8 decode_png(const std::vector<std::uint8_t>& bytes) {
    return decode_png(bytes.data(), bytes.size());
}

void write_png(const std::filesystem::path& path, const ImageU8& img) {
    const std::vector<std::uint8_t> bytes = encode_png(img);
    write_file_bytes(path, bytes.data(), bytes.size());
}

ImageU8 read_png(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    return decode_png(bytes.data(), bytes.size());
}

static const char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::uint8_t* bytes, std::size_t size) {
    std::string out;
    out.reserve((size + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= size; i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
    }
    if (i < size) {
        std::uint32_t v = bytes[i] << 16;
        const bool two = i + 1 < size;
        if (two) v |= bytes[i + 1] << 8;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(two ? kB64Alphabet[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    static int lut[256];
    static bool lut_ready = false;
    if (!lut_ready) {
        for (int i = 0; i < 256; ++i) lut[i] = -1;
        for (int i = 0; i < 64; ++i) lut[static_cast<unsigned char>(kB64Alphabet[i])] = i;
        lut_ready = true;
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    int acc = 0;
    int bits = 0;
    for (const char ch : text) {
        if (ch == '=' || ch == '\n' || ch == '\r') continue;
        const int v = lut[static_cast<unsigned char>(ch)];
        if (v < 0) throw IoError("base64: invalid character");
        acc = (acc << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + path.string());
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw IoError("read failed: " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::uint8_t* bytes,
                      std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace voidforge
