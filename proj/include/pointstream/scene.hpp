#pragma once

#include "pointstream/color.hpp"
#include "pointstream/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pointstream::sim {

/// Rigid translation over time.
struct Motion {
  enum class Kind { None, Linear, Oscillate };
  Kind kind = Kind::None;
  Point3 velocity = Point3::Zero();  ///< Linear: m/s
  Point3 axis = Point3::UnitX();     ///< Oscillate: unit direction
  double amplitude = 0.0;            ///< Oscillate: meters
  double period = 1.0;               ///< Oscillate: seconds

  Point3 offset(double t) const;
};

struct Checker {
  double square = 0.12;  ///< meters
  ColorRgb8 color{};     ///< second checker color
};

struct Primitive {
  enum class Kind { Box, Plane, Sphere };
  Kind kind = Kind::Box;
  std::string name;
  // Box: axis-aligned [min, max].
  Point3 min = Point3::Zero(), max = Point3::Zero();
  // Plane: rectangle center +- u +- v (u, v orthogonal half-extent vectors).
  // Sphere: center + radius.
  Point3 center = Point3::Zero();
  Point3 u = Point3::Zero(), v = Point3::Zero();
  double radius = 0.0;
  ColorRgb8 color{255, 255, 255};
  std::optional<Checker> checker;  ///< planes only
  int region = 0;                  ///< illumination region
  Motion motion;

  void validate() const;
};

/// Per-channel sRGB affine map, c' = clamp(round(gain * c + bias)).
struct ColorAffine {
  Eigen::Vector3d gain = Eigen::Vector3d::Ones();
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();

  ColorRgb8 apply(ColorRgb8 c) const;
};

/// Region id -> color map; regions not listed keep their colors.
using Illumination = std::map<int, ColorAffine>;

struct Scene {
  std::vector<Primitive> primitives;
  std::uint64_t seed = 0;
  std::map<std::string, Illumination> illuminations;

  void validate() const;
  bool is_static() const;
};

/// Copy of the scene with every primitive color (and checker color) passed
/// through the region's affine map.
Scene with_illumination(const Scene& scene, const Illumination& light);

struct Hit {
  double t;         ///< ray parameter (meters along a unit direction)
  std::size_t primitive;
  Point3 point;
  ColorRgb8 color;
};

/// Nearest intersection with t in [t_min, t_max], primitives placed at time
/// `time`. `dir` must be unit length.
std::optional<Hit> cast_ray(const Scene& scene, const Point3& origin, const Point3& dir,
                            double t_min, double t_max, double time);

class SceneFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSceneFileVersion = 1;

Scene parse_scene(const std::string& json_text);
Scene load_scene(const std::filesystem::path& path);
std::string emit_scene(const Scene& scene);

}  // namespace pointstream::sim
