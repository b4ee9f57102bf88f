#include "pointstream/ply.hpp"

#include "pointstream/version.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

namespace pointstream {

PlyError::PlyError(Kind kind, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
      kind_(kind),
      offset_(offset) {}

namespace {

enum class ScalarType { Float32, Float64, UInt8 };

struct Property {
  std::string name;
  ScalarType type;
};

std::size_t size_of(ScalarType t) {
  switch (t) {
    case ScalarType::Float32: return 4;
    case ScalarType::Float64: return 8;
    case ScalarType::UInt8: return 1;
  }
  return 0;
}

struct Header {
  PlyFormat format = PlyFormat::Ascii;
  std::size_t vertex_count = 0;
  std::vector<Property> props;
  std::size_t body_offset = 0;
  int idx_x = -1, idx_y = -1, idx_z = -1, idx_r = -1, idx_g = -1, idx_b = -1;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Header parse_header(std::string_view bytes) {
  using K = PlyError::Kind;
  Header h;
  std::size_t pos = 0;
  bool saw_vertex = false, in_vertex = false, saw_format = false;
  int line_no = 0;
  for (;;) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos)
      throw PlyError(K::MalformedHeader, pos, "PLY header is missing end_header");
    const std::string_view line = bytes.substr(pos, eol - pos);
    const std::size_t line_start = pos;
    pos = eol + 1;
    const auto tok = split_ws(line);
    if (line_no++ == 0) {
      if (tok.size() != 1 || tok[0] != "ply")
        throw PlyError(K::MalformedHeader, line_start, "missing 'ply' magic");
      continue;
    }
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() != 3) throw PlyError(K::MalformedHeader, line_start, "bad format line");
      if (tok[1] == "ascii")
        h.format = PlyFormat::Ascii;
      else if (tok[1] == "binary_little_endian")
        h.format = PlyFormat::BinaryLittleEndian;
      else
        throw PlyError(K::UnsupportedLayout, line_start,
                       "unsupported PLY format '" + std::string(tok[1]) + "'");
      saw_format = true;
      continue;
    }
    if (tok[0] == "element") {
      if (tok.size() != 3) throw PlyError(K::MalformedHeader, line_start, "bad element line");
      if (tok[1] != "vertex" || saw_vertex)
        throw PlyError(K::UnsupportedLayout, line_start,
                       "unsupported element '" + std::string(tok[1]) + "'");
      std::size_t n = 0;
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), n);
      if (r.ec != std::errc() || r.ptr != tok[2].data() + tok[2].size())
        throw PlyError(K::MalformedHeader, line_start, "bad vertex count");
      h.vertex_count = n;
      saw_vertex = in_vertex = true;
      continue;
    }
    if (tok[0] == "property") {
      if (!in_vertex) throw PlyError(K::MalformedHeader, line_start, "property before element");
      if (tok.size() >= 2 && tok[1] == "list")
        throw PlyError(K::UnsupportedLayout, line_start, "list properties are not supported");
      if (tok.size() != 3) throw PlyError(K::MalformedHeader, line_start, "bad property line");
      ScalarType t;
      if (tok[1] == "float" || tok[1] == "float32")
        t = ScalarType::Float32;
      else if (tok[1] == "double" || tok[1] == "float64")
        t = ScalarType::Float64;
      else if (tok[1] == "uchar" || tok[1] == "uint8")
        t = ScalarType::UInt8;
      else
        throw PlyError(K::UnsupportedLayout, line_start,
                       "unsupported property type '" + std::string(tok[1]) + "'");
      const std::string name(tok[2]);
      const int idx = static_cast<int>(h.props.size());
      const bool is_pos = name == "x" || name == "y" || name == "z";
      const bool is_col = name == "red" || name == "green" || name == "blue";
      if ((is_pos && t == ScalarType::UInt8) || (is_col && t != ScalarType::UInt8) ||
          (!is_pos && !is_col))
        throw PlyError(K::UnsupportedLayout, line_start,
                       "unsupported vertex property '" + name + "'");
      int* slot = name == "x"     ? &h.idx_x
                  : name == "y"   ? &h.idx_y
                  : name == "z"   ? &h.idx_z
                  : name == "red" ? &h.idx_r
                  : name == "green" ? &h.idx_g
                                    : &h.idx_b;
      if (*slot >= 0) throw PlyError(K::MalformedHeader, line_start, "duplicate property " + name);
      *slot = idx;
      h.props.push_back({name, t});
      continue;
    }
    throw PlyError(K::MalformedHeader, line_start,
                   "unknown header keyword '" + std::string(tok[0]) + "'");
  }
  if (!saw_format) throw PlyError(K::MalformedHeader, 0, "missing format line");
  if (!saw_vertex) throw PlyError(K::UnsupportedLayout, 0, "no vertex element");
  if (h.idx_x < 0 || h.idx_y < 0 || h.idx_z < 0)
    throw PlyError(K::UnsupportedLayout, 0, "vertex element lacks x/y/z");
  const int ncol = (h.idx_r >= 0) + (h.idx_g >= 0) + (h.idx_b >= 0);
  if (ncol != 0 && ncol != 3)
    throw PlyError(K::UnsupportedLayout, 0, "vertex colors need all of red/green/blue");
  h.body_offset = pos;
  return h;
}

template <typename T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

PointCloud read_binary(std::string_view bytes, const Header& h) {
  std::vector<std::size_t> offs;
  std::size_t stride = 0;
  for (const auto& p : h.props) {
    offs.push_back(stride);
    stride += size_of(p.type);
  }
  const std::size_t avail = bytes.size() - h.body_offset;
  if (stride != 0 && h.vertex_count > avail / stride) {
    const std::size_t complete = avail / stride;
    throw PlyError(PlyError::Kind::TruncatedBody, h.body_offset + complete * stride,
                   "PLY body truncated: " + std::to_string(complete) + " of " +
                       std::to_string(h.vertex_count) + " vertices present");
  }
  PointCloud cloud;
  cloud.points.resize(h.vertex_count);
  const bool colored = h.idx_r >= 0;
  if (colored) cloud.colors.emplace(h.vertex_count);
  auto read_real = [&](const char* row, int idx) -> double {
    const char* p = row + offs[idx];
    return h.props[idx].type == ScalarType::Float32 ? static_cast<double>(load<float>(p))
                                                    : load<double>(p);
  };
  for (std::size_t i = 0; i < h.vertex_count; ++i) {
    const char* row = bytes.data() + h.body_offset + i * stride;
    cloud.points[i] = Point3(read_real(row, h.idx_x), read_real(row, h.idx_y),
                             read_real(row, h.idx_z));
    if (colored)
      (*cloud.colors)[i] = {load<std::uint8_t>(row + offs[h.idx_r]),
                            load<std::uint8_t>(row + offs[h.idx_g]),
                            load<std::uint8_t>(row + offs[h.idx_b])};
  }
  return cloud;
}

PointCloud read_ascii(std::string_view bytes, const Header& h) {
  using K = PlyError::Kind;
  PointCloud cloud;
  cloud.points.resize(h.vertex_count);
  const bool colored = h.idx_r >= 0;
  if (colored) cloud.colors.emplace(h.vertex_count);
  std::size_t pos = h.body_offset;
  std::vector<double> vals(h.props.size());
  for (std::size_t i = 0; i < h.vertex_count; ++i) {
    for (std::size_t k = 0; k < h.props.size(); ++k) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos >= bytes.size())
        throw PlyError(K::TruncatedBody, pos,
                       "PLY body truncated at vertex " + std::to_string(i));
      std::size_t end = pos;
      while (end < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[end]))) ++end;
      double v = 0.0;
      const auto r = std::from_chars(bytes.data() + pos, bytes.data() + end, v);
      if (r.ec != std::errc() || r.ptr != bytes.data() + end)
        throw PlyError(K::MalformedBody, pos, "bad number in PLY body");
      if (h.props[k].type == ScalarType::UInt8 && (v < 0 || v > 255 || v != std::floor(v)))
        throw PlyError(K::MalformedBody, pos, "color value out of uchar range");
      vals[k] = v;
      pos = end;
    }
    cloud.points[i] = Point3(vals[h.idx_x], vals[h.idx_y], vals[h.idx_z]);
    if (h.props[h.idx_x].type == ScalarType::Float32)
      cloud.points[i] = cloud.points[i].cast<float>().cast<double>();
    if (colored)
      (*cloud.colors)[i] = {static_cast<std::uint8_t>(vals[h.idx_r]),
                            static_cast<std::uint8_t>(vals[h.idx_g]),
                            static_cast<std::uint8_t>(vals[h.idx_b])};
  }
  return cloud;
}

}  // namespace

PointCloud parse_ply(std::string_view bytes) {
  const Header h = parse_header(bytes);
  return h.format == PlyFormat::BinaryLittleEndian ? read_binary(bytes, h) : read_ascii(bytes, h);
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PlyError(PlyError::Kind::Io, 0, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ply(ss.str());
}

std::string serialize_ply(const PointCloud& cloud, PlyFormat format) {
  cloud.validate();
  const bool colored = cloud.has_colors();
  std::ostringstream out;
  out << "ply\n"
      << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n")
      << "comment generator pointstream " << kVersion << "\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (colored) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  std::string s = out.str();
  if (format == PlyFormat::BinaryLittleEndian) {
    const std::size_t stride = colored ? 15 : 12;
    const std::size_t base = s.size();
    s.resize(base + stride * cloud.size());
    char* p = s.data() + base;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const float xyz[3] = {static_cast<float>(cloud.points[i].x()),
                            static_cast<float>(cloud.points[i].y()),
                            static_cast<float>(cloud.points[i].z())};
      std::memcpy(p, xyz, 12);
      if (colored) {
        const auto& c = (*cloud.colors)[i];
        p[12] = static_cast<char>(c.r);
        p[13] = static_cast<char>(c.g);
        p[14] = static_cast<char>(c.b);
      }
      p += stride;
    }
  } else {
    std::ostringstream body;
    body.precision(9);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      body << static_cast<float>(cloud.points[i].x()) << ' '
           << static_cast<float>(cloud.points[i].y()) << ' '
           << static_cast<float>(cloud.points[i].z());
      if (colored) {
        const auto& c = (*cloud.colors)[i];
        body << ' ' << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b);
      }
      body << '\n';
    }
    s += body.str();
  }
  return s;
}

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
  const std::string bytes = serialize_ply(cloud, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PlyError(PlyError::Kind::Io, 0, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PlyError(PlyError::Kind::Io, 0, "write failed for " + path.string());
}

}  // namespace pointstream
