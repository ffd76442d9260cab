#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "actrec/action_dsl.hpp"
#include "actrec/constraints.hpp"
#include "actrec/ontology.hpp"
#include "actrec/scene.hpp"
#include "actrec/trace.hpp"

namespace actrec {

/// A recognized action. `start`/`end` are inclusive frame indices (the
/// frames' own `index` values). `children` hold ids of constituent instances
/// in the same timeline.
struct ActionInstance {
  std::size_t id = 0;
  std::string action;
  Binding binding;
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  std::vector<std::size_t> children;

  friend bool operator==(const ActionInstance&, const ActionInstance&) = default;
};

/// Instances ordered by (start, end, action, binding); ids equal positions.
struct Timeline {
  std::string source;
  Thresholds thresholds;
  std::vector<ActionInstance> instances;

  friend bool operator==(const Timeline&, const Timeline&) = default;
};

/// Sorts `instances`, renumbers ids to positions and rewrites children.
void normalize(Timeline& timeline);

/// Runs every definition over the trace. See README for the matching rules.
/// Throws InputError for an empty trace and ValidationError when a
/// definition names an affordance the ontology lacks.
Timeline match(const Trace& trace, const SceneState& scene, const Ontology& ontology, const Thresholds& thresholds,
               const std::vector<ActionDefinition>& definitions, std::string source = {});

/// The closest present hand to `object` at the context's current frame.
std::optional<Hand> bind_hand(const EvalContext& ctx, const std::string& object);

struct RecognizeOptions {
  Thresholds thresholds;
  SceneOptions scene;
  std::string source;
};

struct Recognition {
  SceneState scene;
  Timeline timeline;
};

/// Scene analysis followed by match().
Recognition recognize(const Trace& trace, const Ontology& ontology, const std::vector<ActionDefinition>& definitions,
                      const RecognizeOptions& options);

void write_timeline(const Timeline& timeline, std::ostream& out);
std::string serialize_timeline(const Timeline& timeline);
Timeline read_timeline(std::istream& in);
Timeline parse_timeline_string(const std::string& text);
Timeline load_timeline_file(const std::string& path);
void save_timeline_file(const Timeline& timeline, const std::string& path);

}  // namespace actrec
