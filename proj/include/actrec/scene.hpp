#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "actrec/geometry.hpp"
#include "actrec/ontology.hpp"
#include "actrec/trace.hpp"

namespace actrec {

enum class Role { active, passive };

struct SceneOptions {
  std::size_t init_window = 10;
  /// Admit classes first seen after the window, using their first observed
  /// centroid. Strict mode rejects them.
  bool lenient = false;
};

/// What the initial view of the table establishes before the demonstration.
struct SceneState {
  std::map<std::string, Role> assignments;
  std::map<std::string, Point2> initial_centroids;
  /// Median local-changes vector over the window, per active object.
  std::map<std::string, Point2> rotation_baseline;
  BBox table;
  std::uint64_t first_frame = 0;
  std::uint64_t last_frame = 0;

  bool is_active(const std::string& class_name) const;
  bool is_passive(const std::string& class_name) const;

  friend bool operator==(const SceneState&, const SceneState&) = default;
};

/// Classifies the objects seen in the first `init_window` frames and stores
/// per-coordinate medians of their centroids and of the table box.
SceneState analyze_initial(const Trace& trace, const Ontology& ontology, const SceneOptions& options = {});

}  // namespace actrec
