#include "skullstrip/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "skullstrip/errors.hpp"

namespace skullstrip {
namespace {

using nlohmann::json;

/// Reads optional fields out of one JSON object and rejects unknown keys.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected a JSON object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(name_ + ": unknown key \"" + key + "\"");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, key);
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      out = v->get<int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  template <typename Vec>
  void vector(const std::string& key, Vec& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != static_cast<std::size_t>(out.size()))
        throw ConfigError(where(key) + ": expected an array of " + std::to_string(out.size()) +
                          " numbers");
      for (int n = 0; n < out.size(); ++n) {
        const double x = as_number((*v)[n], key);
        if constexpr (std::is_integral_v<typename Vec::Scalar>) {
          if (!(*v)[n].is_number_integer()) throw ConfigError(where(key) + ": expected integers");
          out[n] = static_cast<typename Vec::Scalar>((*v)[n].template get<long long>());
        } else {
          out[n] = x;
        }
      }
    }
  }

  std::string where(const std::string& key) const { return name_ + "." + key; }

 private:
  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where(key) + ": must be finite");
    return x;
  }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void parse_registration(const json& j, RegistrationConfig& cfg) {
  Section s(j, "registration");
  if (const json* v = s.find("pyramid_factors")) {
    if (!v->is_array()) throw ConfigError("registration.pyramid_factors: expected an array");
    cfg.pyramid_factors.clear();
    for (const auto& f : *v) {
      if (!f.is_number_integer()) throw ConfigError("registration.pyramid_factors: expected integers");
      cfg.pyramid_factors.push_back(f.get<int>());
    }
  }
  if (const json* v = s.find("metric")) {
    const std::string name = v->is_string() ? v->get<std::string>() : "";
    if (name == "mean_squares")
      cfg.metric = Metric::mean_squares;
    else if (name == "normalized_correlation")
      cfg.metric = Metric::normalized_correlation;
    else
      throw ConfigError("registration.metric: expected \"mean_squares\" or \"normalized_correlation\"");
  }
  s.integer("max_iterations_per_level", cfg.max_iterations_per_level);
  s.number("initial_step", cfg.initial_step);
  s.number("min_step", cfg.min_step);
  s.number("relaxation", cfg.relaxation);
  s.number("sample_fraction", cfg.sample_fraction);
  s.number("finite_difference_step", cfg.finite_difference_step);
  s.vector("parameter_scales", cfg.parameter_scales);
}

void parse_evolution(const json& j, EvolutionConfig& cfg) {
  Section s(j, "evolution");
  s.number("alpha_balloon", cfg.alpha_balloon);
  s.number("beta_curvature", cfg.beta_curvature);
  s.number("gamma_advection", cfg.gamma_advection);
  s.number("sigma_mm", cfg.sigma_mm);
  s.number("edge_exponent", cfg.edge_exponent);
  if (const json* v = s.find("edge_scale")) {
    if (v->is_string() && v->get<std::string>() == "auto") {
      cfg.edge_scale.reset();
    } else if (v->is_number()) {
      cfg.edge_scale = v->get<double>();
    } else {
      throw ConfigError("evolution.edge_scale: expected a number or \"auto\"");
    }
  }
  s.number("cfl", cfg.cfl);
  s.integer("max_iterations", cfg.max_iterations);
  s.number("band_width_mm", cfg.band_width_mm);
  s.integer("reinit_interval", cfg.reinit_interval);
  s.number("convergence_fraction", cfg.convergence_fraction);
}

void parse_phantom(const json& j, PhantomSpec& spec) {
  Section s(j, "phantom");
  s.vector("dims", spec.dims);
  s.vector("spacing", spec.spacing);
  s.vector("brain_semi_axes", spec.brain_semi_axes);
  s.number("skull_inner_offset", spec.skull_inner_offset);
  s.number("skull_thickness", spec.skull_thickness);
  s.number("scalp_thickness", spec.scalp_thickness);
  if (const json* v = s.find("intensities")) {
    Section t(*v, "phantom.intensities");
    t.number("background", spec.intensities.background);
    t.number("scalp", spec.intensities.scalp);
    t.number("skull", spec.intensities.skull);
    t.number("csf", spec.intensities.csf);
    t.number("brain", spec.intensities.brain);
    t.number("tumor", spec.intensities.tumor);
  }
  s.vector("tumor_center_offset", spec.tumor_center_offset);
  s.number("tumor_radius", spec.tumor_radius);
  s.boolean("with_tumor", spec.with_tumor);
  s.number("noise_sigma", spec.noise_sigma);
  if (const json* v = s.find("seed")) {
    if (!v->is_number_unsigned()) throw ConfigError("phantom.seed: expected a non-negative integer");
    spec.seed = v->get<std::uint64_t>();
  }
  if (const json* v = s.find("affine_perturbation")) {
    if (v->is_null()) {
      spec.affine_perturbation.reset();
    } else {
      // Either an explicit matrix/translation pair or rotation/scale/translation.
      Section p(*v, "phantom.affine_perturbation");
      Eigen::Matrix<double, 9, 1> matrix = Eigen::Matrix<double, 9, 1>::Zero();
      Eigen::Vector3d rotation_deg = Eigen::Vector3d::Zero();
      Eigen::Vector3d scale = Eigen::Vector3d::Ones();
      Eigen::Vector3d translation = Eigen::Vector3d::Zero();
      const bool explicit_matrix = v->contains("matrix");
      p.vector("matrix", matrix);
      p.vector("rotation_deg", rotation_deg);
      p.vector("scale", scale);
      p.vector("translation", translation);
      if (explicit_matrix) {
        AffineTransform t;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) t.matrix(r, c) = matrix[3 * r + c];
        t.translation = translation;
        spec.affine_perturbation = t;
      } else {
        spec.affine_perturbation =
            make_affine(rotation_deg * (std::numbers::pi / 180.0), scale, translation);
      }
    }
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void PipelineConfig::validate() const {
  registration.validate();
  evolution.validate();
  phantom.validate();
  if (overlay.enabled && overlay.directory.empty())
    throw ConfigError("overlay.directory is required when overlay.enabled is true");
}

PipelineConfig parse_config(const nlohmann::json& j) {
  PipelineConfig cfg;
  Section s(j, "config");
  if (const json* v = s.find("registration")) parse_registration(*v, cfg.registration);
  if (const json* v = s.find("evolution")) parse_evolution(*v, cfg.evolution);
  if (const json* v = s.find("phantom")) parse_phantom(*v, cfg.phantom);
  s.boolean("keep_largest_component", cfg.keep_largest_component);
  if (const json* v = s.find("overlay")) {
    Section o(*v, "overlay");
    o.boolean("enabled", cfg.overlay.enabled);
    o.string("directory", cfg.overlay.directory);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(std::string_view(buf.str()));
}

RegistrationStage run_registration(const Volume& patient, const Volume& atlas,
                                   const BinaryMask& atlas_mask, const PipelineConfig& cfg) {
  require_same_geometry(atlas.geometry(), atlas_mask.geometry(), "atlas mask");
  const auto start = std::chrono::steady_clock::now();
  RegistrationStage stage;
  stage.registration = register_affine(patient, atlas, cfg.registration);
  stage.propagated = propagate_mask(atlas_mask, stage.registration.transform, patient.geometry());
  stage.seconds = seconds_since(start);
  return stage;
}

RefinementStage run_refinement(const Volume& patient, const BinaryMask& initial_mask,
                               const PipelineConfig& cfg) {
  require_same_geometry(patient.geometry(), initial_mask.geometry(), "initial mask");
  RefinementStage stage;
  auto start = std::chrono::steady_clock::now();
  stage.edge = edge_potential(patient, cfg.evolution, &initial_mask);
  stage.seconds_edge = seconds_since(start);

  start = std::chrono::steady_clock::now();
  const LevelSetField phi0 = signed_distance_from_mask(initial_mask);
  stage.seconds_distance = seconds_since(start);

  start = std::chrono::steady_clock::now();
  stage.evolution = evolve(phi0, stage.edge, cfg.evolution);
  stage.mask = extract_mask(stage.evolution.phi, cfg.keep_largest_component);
  stage.seconds_evolve = seconds_since(start);
  return stage;
}

Volume apply_mask(const Volume& v, const BinaryMask& m) {
  require_same_geometry(v.geometry(), m.geometry(), "apply_mask");
  Volume out(v.geometry());
  for (std::size_t n = 0; n < v.size(); ++n) out[n] = m[n] ? v[n] : 0.0f;
  return out;
}

StripResult strip(const Volume& patient, const Volume& atlas, const BinaryMask& atlas_mask,
                  const PipelineConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  StripResult result;
  result.registration = run_registration(patient, atlas, atlas_mask, cfg);
  result.refinement = run_refinement(patient, result.registration.propagated, cfg);
  result.brain = apply_mask(patient, result.refinement.mask);
  result.seconds_total = seconds_since(start);
  return result;
}

nlohmann::json registration_report(const RegistrationStage& stage) {
  const auto& r = stage.registration;
  json j;
  j["initial_metric"] = r.initial_metric;
  j["final_metric"] = r.final_metric;
  j["iterations_per_level"] = r.iterations_used;
  j["converged_per_level"] = r.converged;
  j["propagated_voxels"] = count_true(stage.propagated);
  j["seconds"] = stage.seconds;
  return j;
}

nlohmann::json refinement_report(const RefinementStage& stage) {
  json j;
  j["edge_scale"] = stage.edge.edge_scale;
  j["iterations"] = stage.evolution.iterations_used;
  j["converged"] = stage.evolution.converged;
  j["final_sign_change_fraction"] = stage.evolution.sign_change_history.empty()
                                        ? 0.0
                                        : stage.evolution.sign_change_history.back();
  j["mask_voxels"] = count_true(stage.mask);
  j["seconds"] = {{"edge_potential", stage.seconds_edge},
                  {"signed_distance", stage.seconds_distance},
                  {"evolve", stage.seconds_evolve}};
  return j;
}

nlohmann::json strip_report(const StripResult& result) {
  json j;
  j["command"] = "strip";
  j["registration"] = registration_report(result.registration);
  j["refinement"] = refinement_report(result.refinement);
  j["seconds_total"] = result.seconds_total;
  return j;
}

}  // namespace skullstrip
