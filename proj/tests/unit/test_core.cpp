#include "doctest.h"

#include "oracles/oracles.hpp"
#include "support.hpp"

#include "pointstream/color.hpp"
#include "pointstream/errors.hpp"
#include "pointstream/neighbor_index.hpp"
#include "pointstream/ply.hpp"
#include "pointstream/point_cloud.hpp"

#include <cstring>
#include <fstream>
#include <set>

using namespace pointstream;

TEST_SUITE("core") {

TEST_CASE("srgb_to_lab reference points") {
  const ColorLab white = srgb_to_lab(ColorRgb8{255, 255, 255});
  CHECK(std::abs(white[0] - 100.0) < 1e-3);
  CHECK(std::abs(white[1]) < 1e-3);
  CHECK(std::abs(white[2]) < 1e-3);

  const ColorLab black = srgb_to_lab(ColorRgb8{0, 0, 0});
  CHECK(std::abs(black[0]) < 1e-3);
  CHECK(std::abs(black[1]) < 1e-3);
  CHECK(std::abs(black[2]) < 1e-3);
}

TEST_CASE("srgb_to_lab of mid grey agrees with the straight-line formulas") {
  const ColorRgb8 c{119, 119, 119};
  const auto ref = oracle::srgb_to_lab(119, 119, 119);
  const ColorLab scalar = srgb_to_lab(c);
  const std::vector<ColorRgb8> one{c};
  const ColorLab batch = srgb_to_lab(std::span<const ColorRgb8>(one)).front();
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(scalar[i] - ref[i]) < 1e-6);
    CHECK(std::abs(batch[i] - ref[i]) < 1e-6);
  }
}

TEST_CASE("srgb_to_lab agrees with the oracle on random colours") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 2000; ++n) {
    const ColorRgb8 c = testutil::random_color(rng);
    const auto ref = oracle::srgb_to_lab(c.r, c.g, c.b);
    const ColorLab lab = srgb_to_lab(c);
    for (int i = 0; i < 3; ++i) REQUIRE(std::abs(lab[i] - ref[i]) < 1e-9);
    REQUIRE(lab[0] >= 0.0);
    REQUIRE(lab[0] <= 100.0 + 1e-9);
  }
}

TEST_CASE("lab_to_srgb inverse and clamping") {
  CHECK(lab_to_srgb(ColorLab(100, 0, 0)) == ColorRgb8{255, 255, 255});
  CHECK(lab_to_srgb(ColorLab(200, 0, 0)) == ColorRgb8{255, 255, 255});
  CHECK(lab_to_srgb(ColorLab(200, 0, 0)) == oracle::lab_to_srgb(200, 0, 0));
  CHECK(lab_to_srgb(ColorLab(-20, 0, 0)) == ColorRgb8{0, 0, 0});

  // Far out of gamut on each axis; the oracle clamps explicitly.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> L(-50, 180), ab(-300, 300);
  for (int n = 0; n < 5000; ++n) {
    const double l = L(rng), a = ab(rng), b = ab(rng);
    REQUIRE(lab_to_srgb(ColorLab(l, a, b)) == oracle::lab_to_srgb(l, a, b));
  }
}

TEST_CASE("lab round trip on 10000 random colours") {
  std::mt19937_64 rng(99);
  for (int n = 0; n < 10000; ++n) {
    const ColorRgb8 c = testutil::random_color(rng);
    REQUIRE(lab_to_srgb(srgb_to_lab(c)) == c);
  }
}

TEST_CASE("lab round trip is exact for all 2^24 colours") {
  std::vector<ColorRgb8> all;
  all.reserve(1u << 16);
  std::size_t mismatches = 0;
  for (int r = 0; r < 256; ++r) {
    all.clear();
    for (int g = 0; g < 256; ++g)
      for (int b = 0; b < 256; ++b)
        all.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                       static_cast<std::uint8_t>(b)});
    const auto labs = srgb_to_lab(std::span<const ColorRgb8>(all));
    const auto back = lab_to_srgb(std::span<const ColorLab>(labs));
    for (std::size_t i = 0; i < all.size(); ++i)
      if (!(back[i] == all[i])) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("transform") {
  std::mt19937_64 rng(3);
  PointCloud c = testutil::random_cloud(rng, 50, -10, 10, true);
  c.sensor_ids = std::vector<std::uint8_t>(50, 2);

  SUBCASE("identity is bit-identical") {
    const PointCloud out = transform(c, Pose::identity());
    CHECK(out.points == c.points);
    CHECK(out.colors == c.colors);
    CHECK(out.sensor_ids == c.sensor_ids);
  }
  SUBCASE("pose then inverse") {
    const Pose p = Pose::from(testutil::random_rotation(rng), Point3(1.5, -3, 7));
    const PointCloud back = transform(transform(c, p), p.inverse());
    for (std::size_t i = 0; i < c.size(); ++i)
      REQUIRE((back.points[i] - c.points[i]).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(back.colors == c.colors);
  }
  SUBCASE("quarter turn about z") {
    PointCloud one;
    one.points.push_back({1, 0, 0});
    const Pose p = Pose::from(axis_angle<double>(Point3::UnitZ(), deg_to_rad(90)), Point3::Zero());
    const Point3 q = transform(one, p).points[0];
    CHECK((q - Point3(0, 1, 0)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pose composition keeps rotations orthonormal") {
  std::mt19937_64 rng(11);
  Pose acc = Pose::identity();
  for (int i = 0; i < 1000; ++i) {
    const Pose p = Pose::from(testutil::random_rotation(rng), testutil::random_point(rng, -5, 5));
    REQUIRE(p.is_valid());
    acc = acc * p;
    REQUIRE(acc.is_valid(1e-9));
    const Pose id = p * p.inverse();
    REQUIRE((id.rotation - Matrix3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(id.translation.cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("point cloud validation") {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 1, 1}};
  c.colors = std::vector<ColorRgb8>(1);
  CHECK_THROWS_AS(c.validate(), DataError);
  c.colors->resize(2);
  CHECK_NOTHROW(c.validate());
  c.sensor_ids = std::vector<std::uint8_t>{0, 7};
  const std::uint8_t rig[] = {0, 1, 2};
  CHECK_THROWS_AS(c.validate(rig), DataError);
  c.points[1].x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(c.validate(), DataError);
}

TEST_CASE("neighbor index examples") {
  CHECK_THROWS_AS(NeighborIndex(PointCloud{}, 0.0), ParameterError);
  CHECK_THROWS_AS(NeighborIndex(PointCloud{}, -1.0), ParameterError);

  const NeighborIndex empty(PointCloud{}, 0.5);
  CHECK(empty.query_radius({0, 0, 0}).empty());
  CHECK_FALSE(empty.nearest({0, 0, 0}).has_value());

  PointCloud c;
  c.points = {{1, 2, 3}, {1, 2, 3.5}};
  const auto idx = build_index(c, 1e-9);
  const auto hits = idx.query_radius({1, 2, 3});
  CHECK(std::find(hits.begin(), hits.end(), 0u) != hits.end());
}

TEST_CASE("neighbor index matches brute force over 120 seeds") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    std::mt19937_64 rng(seed);
    const double radius = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
    const PointCloud c = testutil::random_cloud(rng, 1000, -5, 5);
    const auto idx = build_index(c, radius);
    for (int q = 0; q < 100; ++q) {
      const Point3 p = testutil::random_point(rng, -6, 6);
      REQUIRE(idx.query_radius(p) == oracle::radius_search(c.points, p, radius));
      const auto nn = idx.nearest(p);
      const auto ref = oracle::nearest(c.points, p, radius);
      REQUIRE(nn.has_value() == ref.has_value());
      if (nn) {
        REQUIRE(nn->id == ref->first);
        REQUIRE(nn->distance == ref->second);
      }
    }
  }
}

TEST_CASE("neighbor index handles points exactly on the radius and negative cells") {
  PointCloud c;
  c.points = {{-1.0, -1.0, -1.0}, {-0.5, -1.0, -1.0}, {0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}};
  const auto idx = build_index(c, 0.5);
  CHECK(idx.query_radius({-1.0, -1.0, -1.0}) == std::vector<PointId>{0, 1});
  CHECK(idx.query_radius({0.0, 0.0, 0.0}) == std::vector<PointId>{2, 3});
}

TEST_CASE("ply round trips") {
  std::mt19937_64 rng(8);
  SUBCASE("empty cloud") {
    const std::string bytes = serialize_ply(PointCloud{});
    CHECK(parse_ply(bytes).empty());
    CHECK(bytes.find("comment generator pointstream ") != std::string::npos);
  }
  SUBCASE("three coloured points") {
    PointCloud c;
    c.points = {{0.5, -1.25, 3.0}, {10, 20, 30}, {-0.001, 0.002, 100.5}};
    c.colors = std::vector<ColorRgb8>{{1, 2, 3}, {255, 0, 128}, {9, 99, 199}};
    const PointCloud back = parse_ply(serialize_ply(c));
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(back.points[i] == c.points[i].cast<float>().cast<double>());
    CHECK(back.colors == c.colors);
  }
  SUBCASE("binary is bit exact in float32 for random clouds") {
    for (int trial = 0; trial < 20; ++trial) {
      const PointCloud c = testutil::random_cloud(rng, 257, -200, 200, trial % 2 == 0);
      const PointCloud back = parse_ply(serialize_ply(c));
      REQUIRE(back.size() == c.size());
      for (std::size_t i = 0; i < c.size(); ++i)
        for (int a = 0; a < 3; ++a)
          REQUIRE(back.points[i][a] == static_cast<double>(static_cast<float>(c.points[i][a])));
      REQUIRE(back.colors == c.colors);
    }
  }
  SUBCASE("ascii writer re-reads to the same float32 values") {
    const PointCloud c = testutil::random_cloud(rng, 64, -50, 50, true);
    const PointCloud back = parse_ply(serialize_ply(c, PlyFormat::Ascii));
    for (std::size_t i = 0; i < c.size(); ++i)
      for (int a = 0; a < 3; ++a)
        REQUIRE(static_cast<float>(back.points[i][a]) == static_cast<float>(c.points[i][a]));
    CHECK(back.colors == c.colors);
  }
  SUBCASE("through a file") {
    const auto dir = testutil::temp_dir("ply");
    const PointCloud c = testutil::random_cloud(rng, 10, -1, 1, true);
    write_ply(c, dir / "c.ply");
    const PointCloud back = read_ply(dir / "c.ply");
    CHECK(back.colors == c.colors);
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("ply ascii fixture") {
  const PointCloud c = read_ply(std::filesystem::path(PS_FIXTURE_DIR) / "two_vertices_ascii.ply");
  REQUIRE(c.size() == 2);
  CHECK(c.points[0] == Point3(1.5, -2.25, 3.0));
  CHECK(c.points[1] == Point3(0.125, 0.0, -7.5));
  REQUIRE(c.has_colors());
  CHECK((*c.colors)[0] == ColorRgb8{255, 0, 128});
  CHECK((*c.colors)[1] == ColorRgb8{10, 20, 30});
}

TEST_CASE("ply errors carry kind and offset") {
  using K = PlyError::Kind;
  auto kind_of = [](const std::string& bytes) {
    try {
      parse_ply(bytes);
    } catch (const PlyError& e) {
      return std::make_pair(e.kind(), e.offset());
    }
    FAIL("expected a PlyError");
    return std::make_pair(K::Io, std::size_t{0});
  };
  CHECK(kind_of("plx\nformat ascii 1.0\nend_header\n").first == K::MalformedHeader);
  CHECK(kind_of("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n").first ==
        K::MalformedHeader);
  CHECK(kind_of("ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\n"
                "property float y\nproperty float z\nend_header\n")
            .first == K::UnsupportedLayout);
  CHECK(kind_of("ply\nformat ascii 1.0\nelement vertex 1\nproperty list uchar int x\n"
                "end_header\n")
            .first == K::UnsupportedLayout);

  PointCloud c;
  c.points = {{1, 2, 3}, {4, 5, 6}};
  std::string bin = serialize_ply(c);
  const std::size_t body = bin.find("end_header\n") + 11;
  bin.resize(bin.size() - 5);
  const auto [k, off] = kind_of(bin);
  CHECK(k == K::TruncatedBody);
  CHECK(off == body + 12);

  const auto [k2, off2] = kind_of("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
                                  "property float y\nproperty float z\nend_header\n1 2 3\n");
  CHECK(k2 == K::TruncatedBody);
  CHECK(off2 > 0);
  CHECK(kind_of("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                "property float z\nend_header\n1 two 3\n")
            .first == K::MalformedBody);
  CHECK_THROWS_AS(read_ply("/nonexistent/dir/x.ply"), PlyError);
}

}  // TEST_SUITE
