#pragma once

#include <filesystem>

#include "escape/point_cloud.hpp"

namespace escape {

enum class CloudFormat { xyz, ply };

/// Picks xyz/ply from the file extension; defaults to xyz.
CloudFormat format_from_path(const std::filesystem::path& path);

/// Loads a point cloud.
///
/// XYZ: one `x y z` (optionally `x y z nx ny nz`) per line, whitespace
/// separated, `#` comment lines ignored, LF or CRLF. PLY: ASCII or
/// binary-little-endian, element `vertex` with x,y,z (float32/float64) and
/// optional nx,ny,nz; other elements and properties are skipped.
/// Throws ParseError with the offending line, EmptyCloud for zero points.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_cloud(const std::filesystem::path& path);

/// Writes a point cloud.
///
/// XYZ text carries coordinates only at 17 significant digits (normals, if
/// present, are dropped with a warning on stderr). PLY is written
/// binary-little-endian with float64 properties and keeps normals, so either
/// format round-trips coordinates exactly. Throws IoError.
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                CloudFormat format);
void save_cloud(const PointCloud& cloud, const std::filesystem::path& path);

}  // namespace escape
