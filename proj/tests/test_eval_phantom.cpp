#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "skullstrip/errors.hpp"
#include "skullstrip/evaluation.hpp"
#include "skullstrip/phantom.hpp"
#include "test_support.hpp"

using namespace skullstrip;
using test::cube_geometry;

namespace {

BinaryMask box(const Geometry& g, const Eigen::Vector3i& lo, const Eigen::Vector3i& hi) {
  BinaryMask m(g);
  for (std::size_t n = 0; n < m.size(); ++n) {
    const auto p = g.grid_index(n);
    m[n] = (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  return m;
}

/// Independent surface-distance oracle: explicit boundary extraction and
/// all-pairs nearest-surface search.
SurfaceDistance brute_force_surface_distance(const BinaryMask& a, const BinaryMask& b) {
  const Geometry& g = a.geometry();
  auto surface = [&](const BinaryMask& m) {
    std::vector<Eigen::Vector3d> out;
    for (std::size_t n = 0; n < m.size(); ++n) {
      if (!m[n]) continue;
      const Eigen::Vector3i p = g.grid_index(n);
      bool edge = false;
      for (int axis = 0; axis < 3; ++axis)
        for (int step : {-1, 1}) {
          Eigen::Vector3i q = p;
          q[axis] += step;
          edge = edge || !g.contains(q.x(), q.y(), q.z()) || !m(q.x(), q.y(), q.z());
        }
      if (edge) out.push_back(p.cast<double>().cwiseProduct(g.spacing));
    }
    return out;
  };
  const auto sa = surface(a), sb = surface(b);
  SurfaceDistance s;
  double sum = 0;
  auto directed = [&](const auto& from, const auto& to) {
    for (const auto& x : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : to) best = std::min(best, (x - y).norm());
      sum += best;
      s.max_mm = std::max(s.max_mm, best);
    }
  };
  directed(sa, sb);
  directed(sb, sa);
  s.mean_mm = sum / static_cast<double>(sa.size() + sb.size());
  return s;
}

Eigen::Vector3i world_voxel(const Geometry& g, const Eigen::Vector3d& world) {
  return world_to_index(g, world).array().round().cast<int>();
}

}  // namespace

TEST_SUITE("dice") {
  TEST_CASE("hand-counted example") {
    const Geometry g = cube_geometry(4);
    BinaryMask a(g), b(g);
    for (int i = 0; i < 4; ++i) a(i, 0, 0) = 1;
    for (int i = 1; i < 4; ++i) b(i, 0, 0) = 1;
    b(0, 1, 0) = b(0, 2, 0) = b(0, 3, 0) = 1;
    const DiceReport r = dice(a, b);
    CHECK(r.true_voxels_a == 4);
    CHECK(r.true_voxels_b == 6);
    CHECK(r.intersection == 3);
    CHECK(r.dice == doctest::Approx(0.6));
  }

  TEST_CASE("identities") {
    const Geometry g = cube_geometry(8);
    const BinaryMask a = box(g, {1, 1, 1}, {3, 3, 3});
    const BinaryMask b = box(g, {5, 5, 5}, {6, 7, 6});
    CHECK(dice(a, a).dice == 1.0);
    CHECK(dice(a, b).dice == 0.0);
    CHECK(dice(BinaryMask(g), BinaryMask(g)).dice == 1.0);
    CHECK(dice(a, BinaryMask(g)).dice == 0.0);
  }

  TEST_CASE("symmetric and bounded on random masks") {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution coin(0.3);
    const Geometry g = cube_geometry(6);
    for (int trial = 0; trial < 200; ++trial) {
      BinaryMask a(g), b(g);
      for (auto& x : a.data()) x = coin(rng);
      for (auto& x : b.data()) x = coin(rng);
      const double ab = dice(a, b).dice;
      CHECK(ab == dice(b, a).dice);
      CHECK((ab >= 0.0 && ab <= 1.0));
    }
  }

  TEST_CASE("geometry mismatch") {
    Geometry other = cube_geometry(4);
    other.origin.x() += 0.5;
    CHECK_THROWS_AS(dice(BinaryMask(cube_geometry(4)), BinaryMask(other)), GeometryMismatch);
    CHECK_THROWS_AS(dice(BinaryMask(cube_geometry(4)), BinaryMask(cube_geometry(5))), GeometryMismatch);
  }
}

TEST_SUITE("phantom") {
  TEST_CASE("constructed intensities") {
    const PhantomSpec spec{.noise_sigma = 0.0};
    const Phantom p = generate_phantom(spec);
    const Geometry& g = p.image.geometry();
    const auto centre = world_voxel(g, {0.5, 0.5, 0.5});
    CHECK(p.image(centre.x(), centre.y(), centre.z()) == 100.0f);
    // Skull spans 22..25 mm along z above the brain centre.
    const auto skull = world_voxel(g, {0.5, 0.5, 23.5});
    CHECK(p.image(skull.x(), skull.y(), skull.z()) == 20.0f);
    const auto tumor = world_voxel(g, {13.5, 0.5, 0.5});
    CHECK(p.image(tumor.x(), tumor.y(), tumor.z()) == 140.0f);
    CHECK(p.image(0, 0, 0) == 0.0f);
  }

  TEST_CASE("geometry is centred on the world origin") {
    const Geometry g = phantom_geometry(PhantomSpec{});
    const Eigen::Vector3d centre = index_to_world(g, (g.dims.cast<double>().array() - 1) / 2);
    CHECK(centre.norm() < 1e-12);
  }

  TEST_CASE("mask volume matches the ellipsoid") {
    for (const Eigen::Vector3d spacing : {Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1, 1, 3)}) {
      PhantomSpec spec{.noise_sigma = 0.0};
      spec.spacing = spacing;
      spec.dims = Eigen::Vector3d::Constant(64).cwiseQuotient(spacing).cast<int>();
      const Phantom p = generate_phantom(spec);
      const double expected = 4.0 / 3.0 * std::numbers::pi * 22 * 26 * 20 / spacing.prod();
      CHECK(std::abs(count_true(p.brain) / expected - 1.0) < 0.05);
    }
  }

  TEST_CASE("tumor is inside the brain, one millimetre below its surface") {
    const Phantom p = generate_phantom(PhantomSpec{.noise_sigma = 0.0});
    const Geometry& g = p.image.geometry();
    std::size_t tumor = 0;
    for (std::size_t n = 0; n < p.image.size(); ++n) {
      if (p.image[n] != 140.0f) continue;
      ++tumor;
      CHECK(p.brain[n] == 1);
    }
    CHECK(tumor > 0);
    // Nearest ellipsoid point along +x from the tumor's far edge (21 mm) is 22 mm.
    const auto edge = world_voxel(g, {20.5, 0.5, 0.5});
    CHECK(p.image(edge.x(), edge.y(), edge.z()) == 140.0f);
    const auto brain_rim = world_voxel(g, {21.5, 0.5, 0.5});
    CHECK(p.image(brain_rim.x(), brain_rim.y(), brain_rim.z()) == 100.0f);
  }

  TEST_CASE("same seed twice is bit-identical; a different seed is not") {
    const Phantom a = generate_phantom(PhantomSpec{.seed = 7});
    const Phantom b = generate_phantom(PhantomSpec{.seed = 7});
    const Phantom c = generate_phantom(PhantomSpec{.seed = 8});
    CHECK(a.image.values() == b.image.values());
    CHECK(a.brain.values() == b.brain.values());
    CHECK(a.image.values() != c.image.values());
  }

  TEST_CASE("noise has the requested spread") {
    PhantomSpec spec{.noise_sigma = 4.0};
    spec.with_tumor = false;
    const Phantom noisy = generate_phantom(spec);
    spec.noise_sigma = 0.0;
    const Phantom clean = generate_phantom(spec);
    double sum = 0, sum2 = 0;
    for (std::size_t n = 0; n < noisy.image.size(); ++n) {
      const double e = noisy.image[n] - clean.image[n];
      sum += e;
      sum2 += e * e;
    }
    const double count = static_cast<double>(noisy.image.size());
    CHECK(std::abs(sum / count) < 0.05);
    CHECK(std::sqrt(sum2 / count) == doctest::Approx(4.0).epsilon(0.01));
  }

  TEST_CASE("perturbation warps the anatomy analytically") {
    const AffineTransform shift = make_affine({0, 0, 0}, {1, 1, 1}, {5, 0, 0});
    PhantomSpec spec{.noise_sigma = 0.0};
    const Phantom base = generate_phantom(spec);
    spec.affine_perturbation = shift;
    const Phantom moved = generate_phantom(spec);
    const auto d = base.image.dims();
    for (int k = 0; k < d.z(); ++k)
      for (int j = 0; j < d.y(); ++j)
        for (int i = 0; i + 5 < d.x(); ++i) CHECK(moved.image(i + 5, j, k) == base.image(i, j, k));
  }

  TEST_CASE("invalid specs are rejected") {
    PhantomSpec spec;
    spec.tumor_center_offset = {40, 0, 0};
    CHECK_THROWS_AS(generate_phantom(spec), ConfigError);
    spec = {};
    spec.tumor_radius = 0;
    CHECK_THROWS_AS(generate_phantom(spec), ConfigError);
    spec = {};
    spec.skull_thickness = -1;
    CHECK_THROWS_AS(generate_phantom(spec), ConfigError);
    spec = {};
    spec.intensities.brain = std::nan("");
    CHECK_THROWS_AS(generate_phantom(spec), ConfigError);
    spec = {};
    spec.dims = {0, 64, 64};
    CHECK_THROWS_AS(generate_phantom(spec), ConfigError);
  }
}

TEST_SUITE("atlas") {
  TEST_CASE("matches a tumor-free, noise-free phantom") {
    PhantomSpec spec{.noise_sigma = 0.0};
    spec.with_tumor = false;
    const Phantom p = generate_phantom(spec);
    const Phantom atlas = generate_atlas(PhantomSpec{});
    CHECK(atlas.brain.values() == p.brain.values());
    CHECK(atlas.image.values() == p.image.values());
    for (float v : atlas.image.data()) CHECK(v != 140.0f);
  }

  TEST_CASE("ignores the perturbation and noise settings") {
    PhantomSpec spec{.noise_sigma = 9.0, .seed = 1};
    spec.affine_perturbation = make_affine({0.1, 0, 0}, {1, 1, 1}, {2, 0, 0});
    CHECK(generate_atlas(spec).image.values() == generate_atlas(PhantomSpec{}).image.values());
  }

  TEST_CASE("overlap with a translated phantom is high but not perfect") {
    PhantomSpec spec;
    spec.affine_perturbation = make_affine({0, 0, 0}, {1, 1, 1}, {5, 0, 0});
    const double d = dice(generate_atlas(spec).brain, generate_phantom(spec).brain).dice;
    CHECK(d < 1.0);
    CHECK(d > 0.7);
  }
}

TEST_SUITE("boundary distance") {
  TEST_CASE("identical masks") {
    const BinaryMask m = test::sphere_mask(cube_geometry(16), {8, 8, 8}, 5);
    const SurfaceDistance s = boundary_distance_stats(m, m);
    CHECK(s.mean_mm == 0.0);
    CHECK(s.max_mm == 0.0);
  }

  TEST_CASE("cube against the cube grown by one voxel layer") {
    const Geometry g = cube_geometry(16);
    const BinaryMask a = box(g, {5, 5, 5}, {10, 10, 10});
    const BinaryMask b = box(g, {4, 4, 4}, {11, 11, 11});
    const SurfaceDistance s = boundary_distance_stats(a, b);
    const SurfaceDistance oracle = brute_force_surface_distance(a, b);
    CHECK(s.mean_mm == doctest::Approx(oracle.mean_mm));
    CHECK(s.max_mm == doctest::Approx(oracle.max_mm));
    CHECK(s.mean_mm == doctest::Approx(1.0).epsilon(0.1));
    CHECK(s.max_mm == doctest::Approx(std::sqrt(3.0)));
  }

  TEST_CASE("sphere shifted by two voxels") {
    for (const Eigen::Vector3d spacing : {Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(2, 2, 2)}) {
      const Geometry g = cube_geometry(24, spacing);
      const BinaryMask a = test::sphere_mask(g, {11, 12, 12}, 6);
      const BinaryMask b = test::sphere_mask(g, {13, 12, 12}, 6);
      const SurfaceDistance s = boundary_distance_stats(a, b);
      const SurfaceDistance oracle = brute_force_surface_distance(a, b);
      CHECK(s.mean_mm == doctest::Approx(oracle.mean_mm));
      CHECK(s.max_mm == doctest::Approx(oracle.max_mm));
      // A surface point at polar angle t from the shift axis lies about
      // shift*|cos t| from the other sphere; averaged over the sphere: shift/2.
      const double shift = 2 * spacing.x();
      CHECK(std::abs(s.mean_mm / (shift / 2) - 1.0) <= 0.3);
      CHECK(s.max_mm == doctest::Approx(shift));
    }
  }

  TEST_CASE("anisotropic masks agree with the oracle") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> pick(2, 9);
    const Geometry g = cube_geometry(12, {1, 1.5, 3});
    for (int trial = 0; trial < 10; ++trial) {
      const BinaryMask a = box(g, {pick(rng) / 2, pick(rng) / 2, pick(rng) / 2}, {pick(rng), pick(rng), pick(rng)});
      const BinaryMask b = box(g, {pick(rng) / 2, pick(rng) / 2, pick(rng) / 2}, {pick(rng), pick(rng), pick(rng)});
      if (count_true(a) == 0 || count_true(b) == 0) continue;
      const SurfaceDistance s = boundary_distance_stats(a, b);
      const SurfaceDistance oracle = brute_force_surface_distance(a, b);
      CHECK(s.mean_mm == doctest::Approx(oracle.mean_mm));
      CHECK(s.max_mm == doctest::Approx(oracle.max_mm));
    }
  }

  TEST_CASE("errors") {
    const BinaryMask m = test::sphere_mask(cube_geometry(8), {4, 4, 4}, 2);
    CHECK_THROWS_AS(boundary_distance_stats(m, BinaryMask(m.geometry())), std::invalid_argument);
    CHECK_THROWS_AS(boundary_distance_stats(m, BinaryMask(cube_geometry(9), 1)), GeometryMismatch);
  }
}
