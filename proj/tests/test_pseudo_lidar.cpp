#include <sstream>
#include <string>

#include "doctest.h"
#include "plin/errors.hpp"
#include "plin/pseudo_lidar.hpp"
#include "plin/rng.hpp"

using namespace plin;

namespace {

DepthMap random_sparse(Rng& rng, int w, int h) {
  DepthMap d(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (rng.uniform() < 0.3) {
        d.grid.at(u, v) = rng.uniform(0.5, 120.0);
        d.mask.set(u, v, true);
      }
  return d;
}

}  // namespace

TEST_CASE("back_project pinhole arithmetic") {
  CameraIntrinsics k{100.0, 100.0, 50.0, 50.0};
  DepthMap d(80, 60);
  d.grid.at(50, 50) = 2.0;  // principal point
  d.mask.set(50, 50, true);
  d.grid.at(60, 50) = 2.0;
  d.mask.set(60, 50, true);

  PointCloud pc = back_project(d, k);
  REQUIRE(pc.count() == 2);
  // Raster order visits (50,50) first.
  CHECK(pc.points[0].x == 0.0);
  CHECK(pc.points[0].y == 0.0);
  CHECK(pc.points[0].z == 2.0);
  CHECK(pc.points[1].x == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(pc.points[1].y == 0.0);
  CHECK(pc.points[1].z == 2.0);
}

TEST_CASE("back_project: empty map, point count, and homogeneity") {
  CameraIntrinsics k{70.0, 75.0, 30.0, 20.0};
  DepthMap empty(10, 10);
  CHECK(back_project(empty, k).count() == 0);

  Rng rng(3);
  DepthMap d = random_sparse(rng, 25, 18);
  PointCloud pc = back_project(d, k);
  CHECK(pc.count() == static_cast<std::size_t>(d.mask.count()));

  DepthMap d2 = d;
  for (auto& x : d2.grid.data) x *= 3.0;
  PointCloud pc2 = back_project(d2, k);
  for (std::size_t i = 0; i < pc.count(); ++i) {
    CHECK(pc2.points[i].x == doctest::Approx(3.0 * pc.points[i].x));
    CHECK(pc2.points[i].y == doctest::Approx(3.0 * pc.points[i].y));
    CHECK(pc2.points[i].z == 3.0 * pc.points[i].z);
  }
}

TEST_CASE("project is the exact inverse of back_project on the lattice") {
  Rng rng(17);
  CameraIntrinsics ks[3] = {{100, 100, 50, 50},
                            {721.5377, 721.5377, 609.5593, 172.854},
                            {55.5, 80.25, 12.0, 31.75}};
  for (const auto& k : ks)
    for (int trial = 0; trial < 5; ++trial) {
      DepthMap d = random_sparse(rng, 33, 21);
      DepthMap back = project(back_project(d, k), k, 33, 21);
      CHECK(back.mask == d.mask);
      for (int v = 0; v < 21; ++v)
        for (int u = 0; u < 33; ++u)
          if (d.mask.get(u, v))
            CHECK(back.grid.at(u, v) == d.grid.at(u, v));
    }
}

TEST_CASE("project z-buffers collisions and drops out-of-frame points") {
  CameraIntrinsics k{100, 100, 5, 5};
  PointCloud pc;
  pc.points.push_back({0.0, 0.0, 5.0});
  pc.points.push_back({0.0, 0.0, 3.0});   // same pixel, nearer
  pc.points.push_back({10.0, 0.0, 1.0});  // lands far outside
  DepthMap d = project(pc, k, 11, 11);
  CHECK(d.mask.count() == 1);
  CHECK(d.grid.at(5, 5) == 3.0);

  CHECK(project(PointCloud{}, k, 4, 4).mask.count() == 0);
}

TEST_CASE("PLY output: header, vertex lines, and formatting") {
  PointCloud pc;
  pc.points.push_back({0.0, 0.0, 2.0});
  std::string ply = write_ply(pc);
  CHECK(ply ==
        "ply\n"
        "format ascii 1.0\n"
        "element vertex 1\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "end_header\n"
        "0 0 2\n");

  std::string empty = write_ply(PointCloud{});
  CHECK(empty.find("element vertex 0\n") != std::string::npos);
  CHECK(empty.substr(empty.size() - 11) == "end_header\n");
}

TEST_CASE("PLY vertex count equals data line count") {
  Rng rng(29);
  PointCloud pc;
  for (int i = 0; i < 57; ++i)
    pc.points.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5),
                         rng.uniform(0.1, 9)});
  std::string ply = write_ply(pc);
  std::istringstream in(ply);
  std::string line;
  int lines = 0;
  bool body = false;
  while (std::getline(in, line)) {
    if (body) ++lines;
    if (line == "end_header") body = true;
  }
  CHECK(lines == 57);
}

TEST_CASE("intrinsics parser: round trip, duplicates, comments") {
  CameraIntrinsics k = parse_intrinsics(
      "# camera 02\n"
      "fu = 721.5377\n"
      "fv=721.5377\n"
      "cu = 609.5593\n"
      "cv = 172.854\n");
  CHECK(k.fu == 721.5377);
  CHECK(k.cv == 172.854);

  CameraIntrinsics dup = parse_intrinsics(
      "fu=1\nfv=2\ncu=3\ncv=4\nfu=100\n");
  CHECK(dup.fu == 100.0);  // last wins

  CameraIntrinsics rt = parse_intrinsics(format_intrinsics(k));
  CHECK(rt.fu == k.fu);
  CHECK(rt.fv == k.fv);
  CHECK(rt.cu == k.cu);
  CHECK(rt.cv == k.cv);
}

TEST_CASE("intrinsics parser rejects bad input") {
  CHECK_THROWS_AS(parse_intrinsics(""), DataError);
  CHECK_THROWS_AS(parse_intrinsics("fu=1\nfv=2\ncu=3\n"), DataError);  // no cv
  CHECK_THROWS_AS(parse_intrinsics("fu=x\nfv=2\ncu=3\ncv=4\n"), DataError);
  CHECK_THROWS_AS(parse_intrinsics("fu=0\nfv=2\ncu=3\ncv=4\n"), DataError);
  CHECK_THROWS_AS(parse_intrinsics("fu=-1\nfv=2\ncu=3\ncv=4\n"), DataError);
}

TEST_CASE("check_intrinsics guards focal lengths") {
  CHECK_THROWS_AS(check_intrinsics({0.0, 1.0, 0.0, 0.0}),
                  std::invalid_argument);
  CHECK_NOTHROW(check_intrinsics({1.0, 1.0, -5.0, 2.0}));
}
