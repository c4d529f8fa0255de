#pragma once

#include <filesystem>

#include "escape/codec.hpp"

namespace escape {

/// ESCD binary layout (little-endian, no padding):
///   magic "ESCD" | u32 version=1 | u32 n | u32 k |
///   k×3 float64 anchor coordinates (row-major) |
///   n×k float64 distances (row-major)
void write_escd(const DistanceMatrix& matrix, const std::filesystem::path& path);

/// Throws IoError with the byte offset on truncation, ParseError on bad magic
/// or version.
DistanceMatrix read_escd(const std::filesystem::path& path);

/// Text alternative: header `# escd v1 n=<n> k=<k>`, k anchor lines `A x y z`,
/// then n comma-separated distance rows.
void write_escd_csv(const DistanceMatrix& matrix, const std::filesystem::path& path);
DistanceMatrix read_escd_csv(const std::filesystem::path& path);

/// Dispatch on extension: `.csv` text, anything else binary.
void write_escd_auto(const DistanceMatrix& matrix, const std::filesystem::path& path);
DistanceMatrix read_escd_auto(const std::filesystem::path& path);

}  // namespace escape
