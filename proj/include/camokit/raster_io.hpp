#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "camokit/raster.hpp"

namespace camokit {

// File formats:
//   PGM  - binary P5, maxval 255. Masks are written as 0/255; on load a value
//          >= 128 (scaled to maxval 255) is foreground.
//   PF32 - "PF32", u32 height, u32 width (little endian), then height*width
//          little-endian IEEE float32 values in row-major order.
//
// ProbMap values are narrowed to float32 on save; anything loaded from PF32
// reproduces exactly on the next save/load cycle.

BinaryMask load_mask(const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);

// Loads a PF32 file. Values outside [0,1] raise ValidationError.
ProbMap load_prob(const std::filesystem::path& path);
void save_prob(const ProbMap& map, const std::filesystem::path& path);

// 8-bit grey image as a ProbMap (value / maxval).
ProbMap load_pgm_gray(const std::filesystem::path& path);

using Raster = std::variant<BinaryMask, ProbMap>;

// Dispatches on the magic bytes: P5 -> BinaryMask, PF32 -> ProbMap.
Raster load_raster(const std::filesystem::path& path);
void save_raster(const Raster& raster, const std::filesystem::path& path);

// PF32 files load as-is, PGM files are converted to {0,1} probabilities.
ProbMap load_as_prob(const std::filesystem::path& path);

// In-memory codecs used by the file functions.
std::string encode_pgm(const BinaryMask& mask);
std::string encode_pf32(const ProbMap& map);
BinaryMask decode_pgm_mask(const std::string& bytes);
ProbMap decode_pgm_gray(const std::string& bytes);
ProbMap decode_pf32(const std::string& bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace camokit
