#include "pointstream/scene.hpp"

#include "pointstream/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace pointstream::sim {

Point3 Motion::offset(double t) const {
  switch (kind) {
    case Kind::None: return Point3::Zero();
    case Kind::Linear: return velocity * t;
    case Kind::Oscillate:
      return axis * (amplitude * std::sin(2.0 * 3.14159265358979323846 * t / period));
  }
  return Point3::Zero();
}

void Primitive::validate() const {
  auto fail = [&](const std::string& why) {
    throw ParameterError("primitive '" + name + "': " + why);
  };
  switch (kind) {
    case Kind::Box:
      if (!((max - min).array() > 0.0).all()) fail("box must have positive extent");
      break;
    case Kind::Plane:
      if (!(u.norm() > 0.0 && v.norm() > 0.0)) fail("plane must have positive extent");
      if (std::abs(u.normalized().dot(v.normalized())) > 1e-9) fail("plane axes must be orthogonal");
      break;
    case Kind::Sphere:
      if (!(radius > 0.0)) fail("sphere radius must be positive");
      break;
  }
  if (checker && !(checker->square > 0.0)) fail("checker square must be positive");
  if (motion.kind == Motion::Kind::Oscillate && !(motion.period > 0.0))
    fail("oscillation period must be positive");
}

ColorRgb8 ColorAffine::apply(ColorRgb8 c) const {
  auto ch = [&](int i, std::uint8_t x) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(gain[i] * x + bias[i], 0.0, 255.0)));
  };
  return {ch(0, c.r), ch(1, c.g), ch(2, c.b)};
}

void Scene::validate() const {
  for (const auto& p : primitives) p.validate();
}

bool Scene::is_static() const {
  return std::all_of(primitives.begin(), primitives.end(),
                     [](const Primitive& p) { return p.motion.kind == Motion::Kind::None; });
}

Scene with_illumination(const Scene& scene, const Illumination& light) {
  Scene out = scene;
  for (auto& p : out.primitives) {
    const auto it = light.find(p.region);
    if (it == light.end()) continue;
    p.color = it->second.apply(p.color);
    if (p.checker) p.checker->color = it->second.apply(p.checker->color);
  }
  return out;
}

namespace {

// Ray parameter of the first surface crossing with t >= t_min, or +inf.
double intersect_box(const Point3& lo, const Point3& hi, const Point3& o, const Point3& d,
                     double t_min) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::numeric_limits<double>::infinity();
  if (t0 >= t_min) return t0;
  if (t1 >= t_min) return t1;
  return std::numeric_limits<double>::infinity();
}

double intersect_plane(const Primitive& p, const Point3& o, const Point3& d, double t_min) {
  const Point3 n = p.u.cross(p.v).normalized();
  const double denom = d.dot(n);
  if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
  const double t = (p.center - o).dot(n) / denom;
  if (!(t >= t_min)) return std::numeric_limits<double>::infinity();
  const Point3 rel = o + t * d - p.center;
  const double su = std::abs(rel.dot(p.u)) / p.u.squaredNorm();
  const double sv = std::abs(rel.dot(p.v)) / p.v.squaredNorm();
  if (su > 1.0 || sv > 1.0) return std::numeric_limits<double>::infinity();
  return t;
}

double intersect_sphere(const Primitive& p, const Point3& o, const Point3& d, double t_min) {
  const Point3 oc = o - p.center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - p.radius * p.radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double s = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = b > 0.0 ? -(b + s) : -(b - s);
  double r0 = q, r1 = q == 0.0 ? 0.0 : c / q;
  if (r0 > r1) std::swap(r0, r1);
  if (r0 >= t_min) return r0;
  if (r1 >= t_min) return r1;
  return std::numeric_limits<double>::infinity();
}

ColorRgb8 surface_color(const Primitive& p, const Point3& local_hit) {
  if (p.kind != Primitive::Kind::Plane || !p.checker) return p.color;
  // Squares counted from the rectangle's (-u, -v) corner.
  const Point3 rel = local_hit - (p.center - p.u - p.v);
  const double s = rel.dot(p.u.normalized());
  const double t = rel.dot(p.v.normalized());
  const auto i = static_cast<long long>(std::floor(s / p.checker->square));
  const auto j = static_cast<long long>(std::floor(t / p.checker->square));
  return ((i + j) & 1) ? p.checker->color : p.color;
}

}  // namespace

std::optional<Hit> cast_ray(const Scene& scene, const Point3& origin, const Point3& dir,
                            double t_min, double t_max, double time) {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto& p = scene.primitives[i];
    const Point3 o = origin - p.motion.offset(time);
    double t = std::numeric_limits<double>::infinity();
    switch (p.kind) {
      case Primitive::Kind::Box: t = intersect_box(p.min, p.max, o, dir, t_min); break;
      case Primitive::Kind::Plane: t = intersect_plane(p, o, dir, t_min); break;
      case Primitive::Kind::Sphere: t = intersect_sphere(p, o, dir, t_min); break;
    }
    if (!std::isfinite(t) || !(t <= t_max)) continue;
    if (best && !(t < best->t)) continue;
    best = Hit{t, i, origin + t * dir, surface_color(p, o + t * dir)};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Scene file

namespace {

using nlohmann::json;

Point3 vec3(const json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw SceneFileError(std::string(key) + " must be [x,y,z]");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

ColorRgb8 rgb(const json& a) {
  if (!a.is_array() || a.size() != 3) throw SceneFileError("color must be [r,g,b]");
  auto ch = [](const json& x) {
    const int v = x.get<int>();
    if (v < 0 || v > 255) throw SceneFileError("color channel out of range");
    return static_cast<std::uint8_t>(v);
  };
  return {ch(a[0]), ch(a[1]), ch(a[2])};
}

json to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }
json to_json(ColorRgb8 c) { return json::array({c.r, c.g, c.b}); }

}  // namespace

Scene parse_scene(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneFileError(std::string("scene file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "pointstream-scene")
      throw SceneFileError("scene file must declare \"format\": \"pointstream-scene\"");
    const int version = j.at("version").get<int>();
    if (version != kSceneFileVersion)
      throw SceneFileError("unsupported scene file version " + std::to_string(version));
    Scene s;
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& pj : j.at("primitives")) {
      Primitive p;
      const std::string type = pj.at("type").get<std::string>();
      p.name = pj.value("name", type);
      if (type == "box") {
        p.kind = Primitive::Kind::Box;
        p.min = vec3(pj, "min");
        p.max = vec3(pj, "max");
      } else if (type == "plane") {
        p.kind = Primitive::Kind::Plane;
        p.center = vec3(pj, "center");
        p.u = vec3(pj, "u");
        p.v = vec3(pj, "v");
        if (pj.contains("checker"))
          p.checker = Checker{pj["checker"].at("square").get<double>(), rgb(pj["checker"].at("color"))};
      } else if (type == "sphere") {
        p.kind = Primitive::Kind::Sphere;
        p.center = vec3(pj, "center");
        p.radius = pj.at("radius").get<double>();
      } else {
        throw SceneFileError("unknown primitive type '" + type + "'");
      }
      if (pj.contains("color")) p.color = rgb(pj["color"]);
      p.region = pj.value("region", 0);
      if (pj.contains("motion")) {
        const auto& mj = pj["motion"];
        const std::string mt = mj.at("type").get<std::string>();
        if (mt == "linear") {
          p.motion.kind = Motion::Kind::Linear;
          p.motion.velocity = vec3(mj, "velocity");
        } else if (mt == "oscillate") {
          p.motion.kind = Motion::Kind::Oscillate;
          p.motion.axis = vec3(mj, "axis").normalized();
          p.motion.amplitude = mj.at("amplitude").get<double>();
          p.motion.period = mj.at("period").get<double>();
        } else if (mt != "none") {
          throw SceneFileError("unknown motion type '" + mt + "'");
        }
      }
      s.primitives.push_back(std::move(p));
    }
    if (j.contains("illuminations"))
      for (const auto& [name, lj] : j["illuminations"].items()) {
        Illumination light;
        for (const auto& [region, aj] : lj.items()) {
          ColorAffine a;
          if (aj.contains("gain")) a.gain = vec3(aj, "gain");
          if (aj.contains("bias")) a.bias = vec3(aj, "bias");
          light[std::stoi(region)] = a;
        }
        s.illuminations[name] = std::move(light);
      }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw SceneFileError(std::string("scene file schema error: ") + e.what());
  } catch (const ParameterError& e) {
    throw SceneFileError(std::string("scene file: ") + e.what());
  }
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SceneFileError("cannot open scene file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scene(ss.str());
  } catch (const SceneFileError& e) {
    throw SceneFileError(path.string() + ": " + e.what());
  }
}

std::string emit_scene(const Scene& s) {
  json j;
  j["format"] = "pointstream-scene";
  j["version"] = kSceneFileVersion;
  j["seed"] = s.seed;
  j["primitives"] = json::array();
  for (const auto& p : s.primitives) {
    json pj;
    pj["name"] = p.name;
    switch (p.kind) {
      case Primitive::Kind::Box:
        pj["type"] = "box";
        pj["min"] = to_json(p.min);
        pj["max"] = to_json(p.max);
        break;
      case Primitive::Kind::Plane:
        pj["type"] = "plane";
        pj["center"] = to_json(p.center);
        pj["u"] = to_json(p.u);
        pj["v"] = to_json(p.v);
        if (p.checker) pj["checker"] = {{"square", p.checker->square}, {"color", to_json(p.checker->color)}};
        break;
      case Primitive::Kind::Sphere:
        pj["type"] = "sphere";
        pj["center"] = to_json(p.center);
        pj["radius"] = p.radius;
        break;
    }
    pj["color"] = to_json(p.color);
    pj["region"] = p.region;
    if (p.motion.kind == Motion::Kind::Linear)
      pj["motion"] = {{"type", "linear"}, {"velocity", to_json(p.motion.velocity)}};
    else if (p.motion.kind == Motion::Kind::Oscillate)
      pj["motion"] = {{"type", "oscillate"},
                      {"axis", to_json(p.motion.axis)},
                      {"amplitude", p.motion.amplitude},
                      {"period", p.motion.period}};
    j["primitives"].push_back(pj);
  }
  if (!s.illuminations.empty()) {
    json lj = json::object();
    for (const auto& [name, light] : s.illuminations) {
      json rj = json::object();
      for (const auto& [region, a] : light)
        rj[std::to_string(region)] = {{"gain", to_json(a.gain)}, {"bias", to_json(a.bias)}};
      lj[name] = rj;
    }
    j["illuminations"] = lj;
  }
  return j.dump(2);
}

}  // namespace pointstream::sim
