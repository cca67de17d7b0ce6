#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "skullstrip/errors.hpp"
#include "skullstrip/evaluation.hpp"
#include "skullstrip/nifti.hpp"
#include "skullstrip/overlay.hpp"
#include "skullstrip/pipeline.hpp"

namespace skullstrip::cli {
namespace {

using nlohmann::json;

struct Options {
  std::string input, atlas, atlas_mask, mask, config;
  std::string output_mask, output_brain, output_transform, output_volume;
  std::string report, overlay_dir;
  std::string kind = "phantom";
  std::vector<std::string> dice_inputs;
  std::uint64_t seed = 0;
};

PipelineConfig config_from(const Options& o) {
  return o.config.empty() ? PipelineConfig{} : load_config(o.config);
}

BinaryMask load_mask(const std::string& path) { return threshold(load_nifti(path), 0.5f); }

void save_mask(const BinaryMask& m, const std::string& path) { save_nifti(mask_to_volume(m), path); }

void write_report(const json& report, const Options& o, std::ostream& out) {
  if (!o.report.empty()) {
    std::ofstream f(o.report, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write report " + o.report);
    f << report.dump(2) << '\n';
  }
  out << report.dump() << '\n';
}

void maybe_overlay(const Volume& v, const BinaryMask& m, const Options& o, const PipelineConfig& cfg) {
  const std::string dir = !o.overlay_dir.empty() ? o.overlay_dir : cfg.overlay.enabled ? cfg.overlay.directory : "";
  if (!dir.empty()) write_overlays(render_overlays(v, m), dir);
}

void cmd_strip(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_from(o);
  const Volume patient = load_nifti(o.input);
  const Volume atlas = load_nifti(o.atlas);
  const BinaryMask atlas_mask = load_mask(o.atlas_mask);

  const StripResult r = strip(patient, atlas, atlas_mask, cfg);
  save_mask(r.refinement.mask, o.output_mask);
  if (!o.output_brain.empty()) save_nifti(r.brain, o.output_brain);
  if (!o.output_transform.empty()) save_transform(r.registration.registration.transform, o.output_transform);
  maybe_overlay(patient, r.refinement.mask, o, cfg);
  write_report(strip_report(r), o, out);
}

void cmd_register(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_from(o);
  const Volume patient = load_nifti(o.input);
  const Volume atlas = load_nifti(o.atlas);
  if (!o.output_mask.empty() && o.atlas_mask.empty())
    throw ConfigError("--output-mask requires --atlas-mask");

  json report;
  report["command"] = "register";
  if (o.atlas_mask.empty()) {
    const auto start = std::chrono::steady_clock::now();
    RegistrationStage stage;
    stage.registration = register_affine(patient, atlas, cfg.registration);
    stage.propagated = BinaryMask(patient.geometry());
    stage.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_transform(stage.registration.transform, o.output_transform);
    report["registration"] = registration_report(stage);
    report["registration"].erase("propagated_voxels");
  } else {
    const RegistrationStage stage = run_registration(patient, atlas, load_mask(o.atlas_mask), cfg);
    save_transform(stage.registration.transform, o.output_transform);
    if (!o.output_mask.empty()) save_mask(stage.propagated, o.output_mask);
    report["registration"] = registration_report(stage);
  }
  write_report(report, o, out);
}

void cmd_evolve(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = config_from(o);
  const Volume patient = load_nifti(o.input);
  const BinaryMask initial = load_mask(o.mask);
  const RefinementStage stage = run_refinement(patient, initial, cfg);
  save_mask(stage.mask, o.output_mask);
  if (!o.output_brain.empty()) save_nifti(apply_mask(patient, stage.mask), o.output_brain);
  maybe_overlay(patient, stage.mask, o, cfg);
  json report;
  report["command"] = "evolve";
  report["refinement"] = refinement_report(stage);
  write_report(report, o, out);
}

void cmd_phantom(const Options& o, std::ostream& out, bool seed_given) {
  PipelineConfig cfg = config_from(o);
  if (seed_given) cfg.phantom.seed = o.seed;
  cfg.phantom.validate();
  const Phantom p = o.kind == "atlas" ? generate_atlas(cfg.phantom) : generate_phantom(cfg.phantom);
  save_nifti(p.image, o.output_volume);
  save_mask(p.brain, o.output_mask);
  json report;
  report["command"] = "phantom";
  report["kind"] = o.kind;
  report["seed"] = cfg.phantom.seed;
  report["dims"] = {p.image.dims().x(), p.image.dims().y(), p.image.dims().z()};
  report["brain_voxels"] = count_true(p.brain);
  write_report(report, o, out);
}

void cmd_dice(const Options& o, std::ostream& out) {
  const DiceReport d = dice(load_mask(o.dice_inputs[0]), load_mask(o.dice_inputs[1]));
  json report;
  report["dice"] = d.dice;
  report["true_voxels_a"] = d.true_voxels_a;
  report["true_voxels_b"] = d.true_voxels_b;
  report["intersection"] = d.intersection;
  out << report.dump() << '\n';
}

void cmd_overlay(const Options& o, std::ostream& out) {
  const Volume v = load_nifti(o.input);
  const BinaryMask m = load_mask(o.mask);
  const OverlaySet set = render_overlays(v, m);
  write_overlays(set, o.overlay_dir);
  json report;
  report["command"] = "overlay";
  report["slice"] = {set.slice.x(), set.slice.y(), set.slice.z()};
  report["directory"] = o.overlay_dir;
  out << report.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Atlas registration + geodesic active contour skull stripping", "skullstrip"};
  app.require_subcommand(1);
  Options o;

  auto* strip = app.add_subcommand("strip", "Register the atlas, propagate its mask and refine it");
  strip->add_option("--input", o.input, "Patient volume (NIfTI-1)")->required()->check(CLI::ExistingFile);
  strip->add_option("--atlas", o.atlas, "Atlas volume")->required()->check(CLI::ExistingFile);
  strip->add_option("--atlas-mask", o.atlas_mask, "Atlas brain mask")->required()->check(CLI::ExistingFile);
  strip->add_option("--config", o.config, "JSON configuration")->check(CLI::ExistingFile);
  strip->add_option("--output-mask", o.output_mask, "Brain mask output")->required();
  strip->add_option("--output-brain", o.output_brain, "Masked patient volume output");
  strip->add_option("--output-transform", o.output_transform, "Affine transform output");
  strip->add_option("--report", o.report, "JSON run report");
  strip->add_option("--overlay-dir", o.overlay_dir, "Directory for QC overlays");

  auto* reg = app.add_subcommand("register", "Affine atlas-to-patient registration only");
  reg->add_option("--input", o.input, "Patient volume")->required()->check(CLI::ExistingFile);
  reg->add_option("--atlas", o.atlas, "Atlas volume")->required()->check(CLI::ExistingFile);
  reg->add_option("--atlas-mask", o.atlas_mask, "Atlas brain mask to propagate")->check(CLI::ExistingFile);
  reg->add_option("--config", o.config, "JSON configuration")->check(CLI::ExistingFile);
  reg->add_option("--output-transform", o.output_transform, "Affine transform output")->required();
  reg->add_option("--output-mask", o.output_mask, "Propagated mask output");
  reg->add_option("--report", o.report, "JSON run report");

  auto* evo = app.add_subcommand("evolve", "Level-set refinement of an initial mask");
  evo->add_option("--input", o.input, "Patient volume")->required()->check(CLI::ExistingFile);
  evo->add_option("--mask", o.mask, "Initial brain mask")->required()->check(CLI::ExistingFile);
  evo->add_option("--config", o.config, "JSON configuration")->check(CLI::ExistingFile);
  evo->add_option("--output-mask", o.output_mask, "Refined mask output")->required();
  evo->add_option("--output-brain", o.output_brain, "Masked patient volume output");
  evo->add_option("--report", o.report, "JSON run report");
  evo->add_option("--overlay-dir", o.overlay_dir, "Directory for QC overlays");

  auto* ph = app.add_subcommand("phantom", "Generate a synthetic head phantom or atlas");
  ph->add_option("--config", o.config, "JSON configuration (phantom section)")->check(CLI::ExistingFile);
  auto* seed_opt = ph->add_option("--seed", o.seed, "Noise seed (overrides the config)");
  ph->add_option("--kind", o.kind, "phantom or atlas")->check(CLI::IsMember({"phantom", "atlas"}));
  ph->add_option("--output-volume", o.output_volume, "Phantom image output")->required();
  ph->add_option("--output-mask", o.output_mask, "Ground-truth brain mask output")->required();
  ph->add_option("--report", o.report, "JSON report");

  auto* di = app.add_subcommand("dice", "Dice overlap of two masks");
  di->add_option("masks", o.dice_inputs, "Two mask files")->required()->expected(2)->check(CLI::ExistingFile);

  auto* ov = app.add_subcommand("overlay", "Render axial/coronal/sagittal QC overlays");
  ov->add_option("--input", o.input, "Volume")->required()->check(CLI::ExistingFile);
  ov->add_option("--mask", o.mask, "Mask")->required()->check(CLI::ExistingFile);
  ov->add_option("--overlay-dir", o.overlay_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*strip) cmd_strip(o, out);
    else if (*reg) cmd_register(o, out);
    else if (*evo) cmd_evolve(o, out);
    else if (*ph) cmd_phantom(o, out, seed_opt->count() > 0);
    else if (*di) cmd_dice(o, out);
    else if (*ov) cmd_overlay(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace skullstrip::cli
