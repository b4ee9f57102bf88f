#pragma once

#include "pointstream/color.hpp"
#include "pointstream/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pointstream {

using PointId = std::uint32_t;

/// Positions plus optional parallel per-point attributes.
struct PointCloud {
  std::vector<Point3> points;
  std::optional<std::vector<ColorRgb8>> colors;
  std::optional<std::vector<std::uint8_t>> sensor_ids;
  std::optional<std::vector<std::int64_t>> timestamps_ns;
  /// Motion label provenance from fusion: 1 = point was labelled dynamic.
  std::optional<std::vector<std::uint8_t>> dynamic_flags;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return colors.has_value(); }

  /// Checks parallel-list lengths, finiteness, and (when given) that every
  /// sensor id is one of `rig_members`.
  void validate(std::span<const std::uint8_t> rig_members = {}) const;

  void reserve(std::size_t n);

  /// Appends point `i` of `other`, copying whichever attributes `this` carries.
  /// Attributes missing on `other` are filled with defaults.
  void append_from(const PointCloud& other, std::size_t i);

  /// Appends all of `other`. Attribute lists present on either side are kept.
  void append(const PointCloud& other);
};

/// Sub-cloud made of `ids`, in the given order.
PointCloud select(const PointCloud& cloud, std::span<const PointId> ids);

/// p' = R p + t for every point; other attributes copied.
PointCloud transform(const PointCloud& cloud, const Pose& pose);

}  // namespace pointstream
