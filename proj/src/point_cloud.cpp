#include "pointstream/point_cloud.hpp"

#include "pointstream/errors.hpp"

#include <algorithm>
#include <string>

namespace pointstream {
namespace {

template <typename T>
void check_len(const std::optional<std::vector<T>>& v, std::size_t n, const char* name) {
  if (v && v->size() != n)
    throw DataError(std::string("point cloud attribute '") + name + "' has " +
                    std::to_string(v->size()) + " entries for " + std::to_string(n) + " points");
}

template <typename T>
void push_attr(std::optional<std::vector<T>>& dst, const std::optional<std::vector<T>>& src,
               std::size_t i) {
  if (dst) dst->push_back(src ? (*src)[i] : T{});
}

template <typename T>
void append_attr(std::optional<std::vector<T>>& dst, const std::optional<std::vector<T>>& src,
                 std::size_t old_size, std::size_t add) {
  if (!dst && src) dst.emplace(old_size, T{});
  if (!dst) return;
  if (src)
    dst->insert(dst->end(), src->begin(), src->end());
  else
    dst->resize(dst->size() + add, T{});
}

}  // namespace

void PointCloud::validate(std::span<const std::uint8_t> rig_members) const {
  const std::size_t n = points.size();
  check_len(colors, n, "colors");
  check_len(sensor_ids, n, "sensor_ids");
  check_len(timestamps_ns, n, "timestamps_ns");
  check_len(dynamic_flags, n, "dynamic_flags");
  for (std::size_t i = 0; i < n; ++i)
    if (!points[i].allFinite())
      throw DataError("point " + std::to_string(i) + " has a non-finite coordinate");
  if (sensor_ids && !rig_members.empty()) {
    for (std::size_t i = 0; i < n; ++i)
      if (std::find(rig_members.begin(), rig_members.end(), (*sensor_ids)[i]) ==
          rig_members.end())
        throw DataError("point " + std::to_string(i) + " has undeclared sensor id " +
                        std::to_string((*sensor_ids)[i]));
  }
}

void PointCloud::reserve(std::size_t n) {
  points.reserve(n);
  if (colors) colors->reserve(n);
  if (sensor_ids) sensor_ids->reserve(n);
  if (timestamps_ns) timestamps_ns->reserve(n);
  if (dynamic_flags) dynamic_flags->reserve(n);
}

void PointCloud::append_from(const PointCloud& other, std::size_t i) {
  points.push_back(other.points[i]);
  push_attr(colors, other.colors, i);
  push_attr(sensor_ids, other.sensor_ids, i);
  push_attr(timestamps_ns, other.timestamps_ns, i);
  push_attr(dynamic_flags, other.dynamic_flags, i);
}

void PointCloud::append(const PointCloud& other) {
  const std::size_t old = points.size();
  const std::size_t add = other.points.size();
  points.insert(points.end(), other.points.begin(), other.points.end());
  append_attr(colors, other.colors, old, add);
  append_attr(sensor_ids, other.sensor_ids, old, add);
  append_attr(timestamps_ns, other.timestamps_ns, old, add);
  append_attr(dynamic_flags, other.dynamic_flags, old, add);
}

PointCloud select(const PointCloud& cloud, std::span<const PointId> ids) {
  PointCloud out;
  if (cloud.colors) out.colors.emplace();
  if (cloud.sensor_ids) out.sensor_ids.emplace();
  if (cloud.timestamps_ns) out.timestamps_ns.emplace();
  if (cloud.dynamic_flags) out.dynamic_flags.emplace();
  out.reserve(ids.size());
  for (PointId id : ids) out.append_from(cloud, id);
  return out;
}

PointCloud transform(const PointCloud& cloud, const Pose& pose) {
  if (pose.is_identity()) return cloud;
  PointCloud out = cloud;
  for (auto& p : out.points) p = pose.apply(p);
  return out;
}

}  // namespace pointstream
