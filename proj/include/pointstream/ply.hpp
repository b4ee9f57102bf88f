#pragma once

#include "pointstream/point_cloud.hpp"

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pointstream {

class PlyError : public std::runtime_error {
 public:
  enum class Kind { Io, MalformedHeader, UnsupportedLayout, TruncatedBody, MalformedBody };

  PlyError(Kind kind, std::size_t offset, const std::string& what);

  Kind kind() const noexcept { return kind_; }
  /// Byte offset into the file where the problem was found.
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

enum class PlyFormat { BinaryLittleEndian, Ascii };

/// Writes vertex x,y,z as float32 plus red,green,blue when the cloud has colors.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

/// Reads binary little-endian or ASCII PLY with a single vertex element.
PointCloud read_ply(const std::filesystem::path& path);

/// Same as read_ply on an in-memory file image.
PointCloud parse_ply(std::string_view bytes);

std::string serialize_ply(const PointCloud& cloud,
                          PlyFormat format = PlyFormat::BinaryLittleEndian);

}  // namespace pointstream
