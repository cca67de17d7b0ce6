#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "skullstrip/levelset.hpp"
#include "skullstrip/phantom.hpp"
#include "skullstrip/registration.hpp"

namespace skullstrip {

/// Everything a CLI run can configure. Loaded from JSON with sections
/// "registration", "evolution", "phantom" and the top-level flag
/// "keep_largest_component"; every field is optional.
/// QC overlay rendering for the strip and evolve commands.
struct OverlayConfig {
  bool enabled = false;
  std::string directory;
};

struct PipelineConfig {
  RegistrationConfig registration;
  EvolutionConfig evolution;
  PhantomSpec phantom;
  bool keep_largest_component = true;
  OverlayConfig overlay;

  void validate() const;
};

/// Throws ConfigError on malformed JSON, unknown keys or invalid values.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

struct RegistrationStage {
  RegistrationResult registration;
  BinaryMask propagated;
  double seconds = 0.0;
};

/// Step 1: atlas -> patient affine registration and mask propagation.
RegistrationStage run_registration(const Volume& patient, const Volume& atlas,
                                   const BinaryMask& atlas_mask, const PipelineConfig& cfg);

struct RefinementStage {
  EdgePotential edge;
  EvolutionResult evolution;
  BinaryMask mask;
  double seconds_edge = 0.0;
  double seconds_distance = 0.0;
  double seconds_evolve = 0.0;
};

/// Step 2: geodesic active contour refinement of an initial brain mask.
RefinementStage run_refinement(const Volume& patient, const BinaryMask& initial_mask,
                               const PipelineConfig& cfg);

struct StripResult {
  RegistrationStage registration;
  RefinementStage refinement;
  Volume brain;
  double seconds_total = 0.0;
};

/// Both steps, plus the masked patient volume (zero outside the mask).
StripResult strip(const Volume& patient, const Volume& atlas, const BinaryMask& atlas_mask,
                  const PipelineConfig& cfg);

Volume apply_mask(const Volume& v, const BinaryMask& m);

nlohmann::json registration_report(const RegistrationStage& stage);
nlohmann::json refinement_report(const RefinementStage& stage);
nlohmann::json strip_report(const StripResult& result);

}  // namespace skullstrip
