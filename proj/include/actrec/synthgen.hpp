#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "actrec/constraints.hpp"
#include "actrec/geometry.hpp"
#include "actrec/planner.hpp"
#include "actrec/recognizer.hpp"
#include "actrec/trace.hpp"

namespace actrec {

struct SceneObject {
  std::string class_name;
  BBox bbox;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

enum class StepKind { pick, pour, place, touch, idle };

/// One scripted hand activity.
///
///   pick   object       approach, grip, lift
///   pour   object into  carry above `target` and tilt back and forth
///   place  object [at]  carry to `at` (default: initial centroid), release
///                       and retreat; off the table with skip_table_check
///   touch  object       a single frame of contact
///   idle   frames       hand at rest
struct ScriptStep {
  StepKind kind = StepKind::idle;
  std::string object;
  std::string target;
  std::optional<Point2> at;
  int frames = 0;

  friend bool operator==(const ScriptStep&, const ScriptStep&) = default;
};

struct Scenario {
  std::string name;
  /// Column label in the per-activity report table.
  std::string activity;
  ImageSize image_size{640, 480};
  BBox table{0, 200, 640, 480};
  /// "left", "right" or "random" (drawn from the seed).
  std::string hand = "right";
  std::optional<Point2> hand_start;
  std::vector<SceneObject> objects;
  std::vector<ScriptStep> script;
  /// Released objects end up off the table, so no Place is expected.
  bool skip_table_check = false;
  /// Hand speed in pixels per frame; raised to at least 3 sigma_pos.
  double speed = 8.0;
  std::size_t frames = 600;
  /// Seeded uniform shift of every object, in pixels.
  double perturb_px = 8.0;
  std::uint64_t seed = 0;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct NoiseModel {
  /// Standard deviation of a per-frame shift of every object box.
  double centroid_jitter_px = 0.0;
  /// Chance that an object detection is dropped from a frame.
  double dropout_prob = 0.0;
  /// Extra hand-to-object distance while gripping, ramped in and out.
  double grip_offset_px = 0.0;
  /// Objects the grip offset applies to; empty means all.
  std::vector<std::string> grip_offset_classes;
  std::uint64_t seed = 0;

  bool clean() const { return centroid_jitter_px == 0.0 && dropout_prob == 0.0 && grip_offset_px == 0.0; }
  /// Throws ValidationError on negative or non-finite values.
  void validate() const;

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

class GenerationError : public InputError {
 public:
  using InputError::InputError;
};

struct Generated {
  Trace trace;
  /// Ground truth: Pick, Pour, Place and wateringPlant instances.
  Timeline labels;
  /// Off-table releases, which produce no action but still exercise the
  /// hand-leaves constraints.
  std::vector<ActionInstance> releases;
  Hand hand = Hand::right;
};

/// Synthesizes a trace realizing the script, then applies `noise`.
/// Throws GenerationError naming the step that cannot be realized.
Generated generate(const Scenario& scenario, const NoiseModel& noise = {}, const Thresholds& thresholds = {});

/// Every poured-from object starts with "<class>_contents".
WorldState initial_world(const Scenario& scenario);
/// Contents poured, objects placed or released, hand empty.
Goal goal_of(const Scenario& scenario);
WorldState simulate_plan(const CommandPlan& plan, const Scenario& scenario);

Scenario load_scenario(std::istream& in);
Scenario load_scenario_string(const std::string& text);
Scenario load_scenario_file(const std::string& path);
std::string serialize_scenario(const Scenario& scenario);

struct BatchSpec {
  std::size_t count = 0;
  std::vector<Scenario> templates;
  std::vector<NoiseModel> noise_grid{NoiseModel{}};
  std::uint64_t seed = 0;
  Thresholds thresholds;
};

struct ManifestEntry {
  std::string dir;
  std::string template_name;
  std::string activity;
  std::uint64_t scenario_seed = 0;
  std::size_t noise_index = 0;
  NoiseModel noise;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  Thresholds thresholds;
  std::vector<Scenario> templates;
  std::vector<NoiseModel> noise_grid;
  std::vector<ManifestEntry> entries;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Scenario `k` uses template `k % templates.size()`. Each scenario is
/// generated once per noise-grid entry, so the corpus holds
/// count * |noise_grid| pairs. Every entry directory holds scenario.yaml,
/// trace.jsonl, labels.jsonl and, when present, releases.jsonl.
Manifest plan_batch(const BatchSpec& spec);
Manifest batch(const BatchSpec& spec, const std::string& out_dir);
/// Rewrites the corpus a manifest describes.
void write_corpus(const Manifest& manifest, const std::string& out_dir);

std::string serialize_manifest(const Manifest& manifest);
Manifest parse_manifest(const std::string& text);
Manifest load_manifest(const std::string& path);

/// Corpus spec in YAML: count, seed, templates (paths relative to the file)
/// and a noise list.
BatchSpec load_batch_spec_file(const std::string& path);
NoiseModel noise_from_yaml_string(const std::string& text);

}  // namespace actrec
