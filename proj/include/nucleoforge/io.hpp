#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nucleoforge/raster.hpp"

namespace nucleoforge::io {

/// Writes `bytes` to a sibling temp file and renames it over `path`, so a
/// reader never observes a partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// PNG. Encoders use fixed zlib settings and emit no time or text chunks, so
// equal rasters always produce byte-identical files.

/// 16-bit grayscale PNG holding label IDs. Throws FormatError for labels
/// above 65535.
std::string encode_label_png(const LabelMap& labels);
/// Accepts 8- or 16-bit single-channel PNGs. Throws FormatError otherwise.
LabelMap decode_label_png(std::string_view bytes);

std::string encode_gray8_png(const Grid<std::uint8_t>& pixels);

/// Decodes any PNG to luminance in [0,1]. Colour inputs go through
/// to_grayscale; alpha is dropped; 16-bit samples are scaled by 1/65535.
GrayImage decode_gray_image_png(std::string_view bytes);
RgbImage decode_rgb_png(std::string_view bytes);

void write_label_png(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_label_png(const std::filesystem::path& path);
GrayImage read_gray_image(const std::filesystem::path& path);

/// 8-bit quantisation of a [0,1] image, round half up.
Grid<std::uint8_t> quantize_unit(const GrayImage& img);
/// Skeleton-map preview encoding: value * 127.5, round half up, so 2.0 -> 255.
Grid<std::uint8_t> encode_skeleton_map_u8(const FloatMap& map);
/// Inverse of the above up to quantisation: byte / 127.5.
FloatMap decode_skeleton_map_u8(const Grid<std::uint8_t>& bytes);

// PFM: "Pf" header, little-endian (scale -1.0), rows stored bottom-to-top.

std::string encode_pfm(const FloatMap& map);
FloatMap decode_pfm(std::string_view bytes);
void write_pfm(const std::filesystem::path& path, const FloatMap& map);
FloatMap read_pfm(const std::filesystem::path& path);

}  // namespace nucleoforge::io
