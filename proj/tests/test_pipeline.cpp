#include <cmath>
#include <fstream>

#include "doctest.h"
#include "skullstrip/errors.hpp"
#include "skullstrip/evaluation.hpp"
#include "skullstrip/pipeline.hpp"
#include "test_support.hpp"

using namespace skullstrip;

TEST_SUITE("config") {
  TEST_CASE("empty object gives the defaults") {
    const PipelineConfig cfg = parse_config(std::string_view("{}"));
    const PipelineConfig defaults;
    CHECK(cfg.registration.pyramid_factors == defaults.registration.pyramid_factors);
    CHECK(cfg.registration.metric == Metric::normalized_correlation);
    CHECK(cfg.evolution.alpha_balloon == defaults.evolution.alpha_balloon);
    CHECK_FALSE(cfg.evolution.edge_scale.has_value());
    CHECK(cfg.phantom.seed == 42);
    CHECK(cfg.keep_largest_component);
    CHECK_FALSE(cfg.overlay.enabled);
  }

  TEST_CASE("every section is read") {
    const PipelineConfig cfg = parse_config(std::string_view(R"({
      "registration": {"pyramid_factors": [8, 4, 1], "metric": "mean_squares", "max_iterations_per_level": 7,
                       "initial_step": 0.5, "min_step": 0.01, "relaxation": 0.5, "sample_fraction": 0.25,
                       "finite_difference_step": 0.02,
                       "parameter_scales": [1, 1, 1, 1, 1, 1, 1, 1, 1, 0.1, 0.1, 0.1]},
      "evolution": {"alpha_balloon": -0.5, "beta_curvature": 0.1, "gamma_advection": 3, "sigma_mm": 2,
                    "edge_exponent": 1.5, "edge_scale": 12.5, "cfl": 0.9, "max_iterations": 11,
                    "band_width_mm": 4, "reinit_interval": 3, "convergence_fraction": 0.001},
      "phantom": {"dims": [32, 40, 20], "spacing": [1, 1, 3], "brain_semi_axes": [10, 12, 9],
                  "skull_inner_offset": 1, "skull_thickness": 2, "scalp_thickness": 2,
                  "intensities": {"background": 1, "scalp": 2, "skull": 3, "csf": 4, "brain": 5, "tumor": 6},
                  "tumor_center_offset": [3, 0, 0], "tumor_radius": 2, "with_tumor": false,
                  "noise_sigma": 0, "seed": 9,
                  "affine_perturbation": {"rotation_deg": [0, 0, 90], "scale": [1, 1, 1], "translation": [1, 2, 3]}},
      "keep_largest_component": false,
      "overlay": {"enabled": true, "directory": "qc"}
    })"));
    CHECK(cfg.registration.pyramid_factors == std::vector<int>{8, 4, 1});
    CHECK(cfg.registration.metric == Metric::mean_squares);
    CHECK(cfg.registration.max_iterations_per_level == 7);
    CHECK(cfg.registration.initial_step == 0.5);
    CHECK(cfg.registration.min_step == 0.01);
    CHECK(cfg.registration.relaxation == 0.5);
    CHECK(cfg.registration.sample_fraction == 0.25);
    CHECK(cfg.registration.finite_difference_step == 0.02);
    CHECK(cfg.registration.parameter_scales[9] == 0.1);
    CHECK(cfg.evolution.alpha_balloon == -0.5);
    CHECK(cfg.evolution.beta_curvature == 0.1);
    CHECK(cfg.evolution.gamma_advection == 3);
    CHECK(cfg.evolution.sigma_mm == 2);
    CHECK(cfg.evolution.edge_exponent == 1.5);
    CHECK(cfg.evolution.edge_scale == 12.5);
    CHECK(cfg.evolution.cfl == 0.9);
    CHECK(cfg.evolution.max_iterations == 11);
    CHECK(cfg.evolution.band_width_mm == 4);
    CHECK(cfg.evolution.reinit_interval == 3);
    CHECK(cfg.evolution.convergence_fraction == 0.001);
    CHECK(cfg.phantom.dims == Eigen::Vector3i(32, 40, 20));
    CHECK(cfg.phantom.spacing == Eigen::Vector3d(1, 1, 3));
    CHECK(cfg.phantom.brain_semi_axes == Eigen::Vector3d(10, 12, 9));
    CHECK(cfg.phantom.skull_inner_offset == 1);
    CHECK(cfg.phantom.skull_thickness == 2);
    CHECK(cfg.phantom.scalp_thickness == 2);
    CHECK(cfg.phantom.intensities.background == 1);
    CHECK(cfg.phantom.intensities.tumor == 6);
    CHECK(cfg.phantom.tumor_center_offset == Eigen::Vector3d(3, 0, 0));
    CHECK(cfg.phantom.tumor_radius == 2);
    CHECK_FALSE(cfg.phantom.with_tumor);
    CHECK(cfg.phantom.noise_sigma == 0);
    CHECK(cfg.phantom.seed == 9);
    REQUIRE(cfg.phantom.affine_perturbation.has_value());
    const Eigen::Vector3d moved = apply_point(*cfg.phantom.affine_perturbation, {1, 0, 0});
    CHECK((moved - Eigen::Vector3d(1, 3, 3)).norm() < 1e-12);
    CHECK_FALSE(cfg.keep_largest_component);
    CHECK(cfg.overlay.enabled);
    CHECK(cfg.overlay.directory == "qc");
  }

  TEST_CASE("explicit perturbation matrix is row-major") {
    const PipelineConfig cfg = parse_config(std::string_view(R"({"phantom": {"affine_perturbation":
        {"matrix": [1, 0.1, 0, 0, 1, 0, 0, 0, 1], "translation": [0, 0, 2]}}})"));
    const Eigen::Vector3d moved = apply_point(*cfg.phantom.affine_perturbation, {0, 10, 0});
    CHECK((moved - Eigen::Vector3d(1, 10, 2)).norm() < 1e-12);
  }

  TEST_CASE("edge_scale accepts auto") {
    CHECK_FALSE(parse_config(std::string_view(R"({"evolution": {"edge_scale": "auto"}})")).evolution.edge_scale);
  }

  TEST_CASE("invalid documents are ConfigErrors") {
    const char* bad[] = {
        "[1, 2]",
        "{\"evolution\": {\"cfl\": 0}}",
        "{\"evolution\": {\"cfl\": \"fast\"}}",
        "{\"evolution\": {\"edge_scale\": \"manual\"}}",
        "{\"evolution\": {\"max_iterations\": 2.5}}",
        "{\"evolution\": {\"reinit_interval\": 0}}",
        "{\"registration\": {\"metric\": \"mutual_information\"}}",
        "{\"registration\": {\"pyramid_factors\": [2, 4]}}",
        "{\"registration\": {\"finite_difference_step\": 0}}",
        "{\"registration\": {\"parameter_scales\": [1, 1, 1]}}",
        "{\"phantom\": {\"dims\": [64, 64]}}",
        "{\"phantom\": {\"tumor_center_offset\": [40, 0, 0]}}",
        "{\"phantom\": {\"intensities\": {\"grey\": 3}}}",
        "{\"overlay\": {\"enabled\": true}}",
        "{\"keep_largest_component\": 1}",
        "{\"unknown\": {}}",
        "{\"evolution\": {\"alpha\": 1}}",
        "{",
    };
    for (const char* text : bad) {
      INFO(text);
      CHECK_THROWS_AS(parse_config(std::string_view(text)), ConfigError);
    }
  }

  TEST_CASE("load_config reads files and reports missing ones") {
    const auto dir = test::scratch_dir("pipeline_config");
    std::ofstream(dir / "c.json") << R"({"evolution": {"max_iterations": 4}})";
    CHECK(load_config(dir / "c.json").evolution.max_iterations == 4);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("strip improves on the propagated mask and masks the patient") {
    PipelineConfig cfg;
    cfg.phantom.seed = 4;
    cfg.phantom.affine_perturbation = make_affine({0.05, -0.03, 0.04}, {1, 1, 1}, {2, -3, 1});
    const Phantom patient = generate_phantom(cfg.phantom);
    const Phantom atlas = generate_atlas(cfg.phantom);
    const StripResult r = strip(patient.image, atlas.image, atlas.brain, cfg);

    const double propagated = dice(r.registration.propagated, patient.brain).dice;
    const double refined = dice(r.refinement.mask, patient.brain).dice;
    CHECK(refined >= 0.95);
    CHECK(refined > propagated);
    for (std::size_t n = 0; n < r.brain.size(); ++n)
      CHECK(r.brain[n] == (r.refinement.mask[n] ? patient.image[n] : 0.0f));

    const auto report = strip_report(r);
    CHECK(report["command"] == "strip");
    CHECK(report["refinement"]["mask_voxels"] == count_true(r.refinement.mask));
    CHECK(report["seconds_total"].get<double>() >= 0.0);
  }

  TEST_CASE("atlas mask must match the atlas grid") {
    const Phantom atlas = generate_atlas(PhantomSpec{});
    CHECK_THROWS_AS(run_registration(atlas.image, atlas.image, BinaryMask(test::cube_geometry(8)), PipelineConfig{}),
                    GeometryMismatch);
  }

  TEST_CASE("apply_mask zeroes everything outside") {
    const Geometry g = test::cube_geometry(3);
    Volume v(g, 7.0f);
    BinaryMask m(g);
    m(1, 1, 1) = 1;
    const Volume out = apply_mask(v, m);
    CHECK(out(1, 1, 1) == 7.0f);
    CHECK(out(0, 0, 0) == 0.0f);
    CHECK_THROWS_AS(apply_mask(v, BinaryMask(test::cube_geometry(4))), GeometryMismatch);
  }
}
