#include "nucleoforge/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace nucleoforge::io {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
    fs::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

namespace {

void append_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), len);
}

void flush_cb(png_structp) {}

struct ReadCursor {
    std::string_view bytes;
    std::size_t pos = 0;
};

void read_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + len > cur->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(data, cur->bytes.data() + cur->pos, len);
    cur->pos += len;
}

void silent_warning(png_structp, png_const_charp) {}

/// `raw` holds packed rows, 16-bit samples big-endian.
std::string encode_png(int width, int height, int bit_depth, int color_type, const std::vector<png_byte>& raw) {
    if (width <= 0 || height <= 0) throw FormatError("PNG dimensions must be positive");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
    if (!png) throw FormatError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::string out;
    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t stride = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r)
        rows[r] = const_cast<png_bytep>(raw.data() + static_cast<std::size_t>(r) * stride);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("PNG encoding failed");
    }
    png_set_write_fn(png, &out, append_cb, flush_cb);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

struct DecodedPng {
    int width = 0;
    int height = 0;
    int bit_depth = 0;  // 8 or 16
    int channels = 0;   // 1 or 3
    std::vector<png_byte> raw;
};

/// Expands palettes and low bit depths, drops alpha.
DecodedPng decode_png(std::string_view bytes) {
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0)
        throw FormatError("not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
    if (!png) throw FormatError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes, 0};
    DecodedPng d;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("malformed PNG stream");
    }
    png_set_read_fn(png, &cursor, read_cb);
    png_read_info(png, info);
    const int color_type = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    d.width = static_cast<int>(png_get_image_width(png, info));
    d.height = static_cast<int>(png_get_image_height(png, info));
    d.bit_depth = png_get_bit_depth(png, info);
    d.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    d.raw.resize(stride * static_cast<std::size_t>(d.height));
    rows.resize(static_cast<std::size_t>(d.height));
    for (int r = 0; r < d.height; ++r) rows[r] = d.raw.data() + static_cast<std::size_t>(r) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    if ((d.bit_depth != 8 && d.bit_depth != 16) || (d.channels != 1 && d.channels != 3))
        throw FormatError("unsupported PNG layout");
    return d;
}

double sample(const DecodedPng& d, std::size_t i) {
    if (d.bit_depth == 16) return static_cast<double>((d.raw[2 * i] << 8) | d.raw[2 * i + 1]) / 65535.0;
    return static_cast<double>(d.raw[i]) / 255.0;
}

std::uint8_t round_half_up_u8(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

std::string encode_label_png(const LabelMap& labels) {
    std::vector<png_byte> raw(labels.size() * 2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::uint32_t v = labels.data()[i];
        if (v > 65535) throw FormatError("label " + std::to_string(v) + " exceeds 16-bit PNG range");
        raw[2 * i] = static_cast<png_byte>(v >> 8);
        raw[2 * i + 1] = static_cast<png_byte>(v & 0xff);
    }
    return encode_png(labels.width(), labels.height(), 16, PNG_COLOR_TYPE_GRAY, raw);
}

LabelMap decode_label_png(std::string_view bytes) {
    const DecodedPng d = decode_png(bytes);
    if (d.channels != 1) throw FormatError("label map PNG must be single-channel grayscale");
    LabelMap out(d.width, d.height, 0);
    auto px = out.data();
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = d.bit_depth == 16 ? static_cast<std::uint32_t>((d.raw[2 * i] << 8) | d.raw[2 * i + 1])
                                  : static_cast<std::uint32_t>(d.raw[i]);
    }
    return out;
}

std::string encode_gray8_png(const Grid<std::uint8_t>& pixels) {
    std::vector<png_byte> raw(pixels.values().begin(), pixels.values().end());
    return encode_png(pixels.width(), pixels.height(), 8, PNG_COLOR_TYPE_GRAY, raw);
}

GrayImage decode_gray_image_png(std::string_view bytes) {
    const DecodedPng d = decode_png(bytes);
    const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
    if (d.channels == 1) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = sample(d, i);
        return GrayImage(d.width, d.height, std::move(v));
    }
    std::vector<double> rgb(n * 3);
    for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = sample(d, i);
    return to_grayscale(RgbImage(d.width, d.height, std::move(rgb)));
}

RgbImage decode_rgb_png(std::string_view bytes) {
    const DecodedPng d = decode_png(bytes);
    const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
    std::vector<double> rgb(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        for (int ch = 0; ch < 3; ++ch) rgb[3 * i + ch] = sample(d, d.channels == 1 ? i : 3 * i + ch);
    }
    return RgbImage(d.width, d.height, std::move(rgb));
}

void write_label_png(const fs::path& path, const LabelMap& labels) {
    write_file_atomic(path, encode_label_png(labels));
}

LabelMap read_label_png(const fs::path& path) { return decode_label_png(read_file(path)); }

GrayImage read_gray_image(const fs::path& path) { return decode_gray_image_png(read_file(path)); }

Grid<std::uint8_t> quantize_unit(const GrayImage& img) {
    Grid<std::uint8_t> out(img.width(), img.height(), 0);
    for (std::size_t i = 0; i < img.size(); ++i) out.data()[i] = round_half_up_u8(img.data()[i] * 255.0);
    return out;
}

Grid<std::uint8_t> encode_skeleton_map_u8(const FloatMap& map) {
    Grid<std::uint8_t> out(map.width(), map.height(), 0);
    for (std::size_t i = 0; i < map.size(); ++i)
        out.data()[i] = round_half_up_u8(static_cast<double>(map.data()[i]) * 127.5);
    return out;
}

FloatMap decode_skeleton_map_u8(const Grid<std::uint8_t>& bytes) {
    FloatMap out(bytes.width(), bytes.height(), 0.0f);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        out.data()[i] = static_cast<float>(static_cast<double>(bytes.data()[i]) / 127.5);
    return out;
}

std::string encode_pfm(const FloatMap& map) {
    std::string out = "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n-1.0\n";
    const std::size_t header = out.size();
    out.resize(header + map.size() * 4);
    char* dst = out.data() + header;
    for (int r = map.height() - 1; r >= 0; --r) {
        for (int c = 0; c < map.width(); ++c) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(map(r, c));
            for (int b = 0; b < 4; ++b) *dst++ = static_cast<char>((bits >> (8 * b)) & 0xff);
        }
    }
    return out;
}

FloatMap decode_pfm(std::string_view bytes) {
    // Header: three whitespace-separated tokens after the magic, then a
    // single whitespace byte before the raster.
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return std::string(bytes.substr(start, pos - start));
    };
    if (next_token() != "Pf") throw FormatError("not a single-channel PFM (expected 'Pf')");
    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(next_token());
        height = std::stoi(next_token());
        scale = std::stod(next_token());
    } catch (const std::exception&) {
        throw FormatError("malformed PFM header");
    }
    if (width <= 0 || height <= 0 || scale == 0.0) throw FormatError("invalid PFM header values");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - std::min(pos, bytes.size()) != n * 4) throw FormatError("PFM raster size mismatch");
    const bool little = scale < 0.0;
    FloatMap out(width, height, 0.0f);
    const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (int r = height - 1; r >= 0; --r) {
        for (int c = 0; c < width; ++c) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                const int shift = little ? 8 * b : 8 * (3 - b);
                bits |= static_cast<std::uint32_t>(src[b]) << shift;
            }
            src += 4;
            out(r, c) = std::bit_cast<float>(bits);
        }
    }
    return out;
}

void write_pfm(const fs::path& path, const FloatMap& map) { write_file_atomic(path, encode_pfm(map)); }

FloatMap read_pfm(const fs::path& path) { return decode_pfm(read_file(path)); }

}  // namespace nucleoforge::io
