#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "actrec/ontology.hpp"
#include "actrec/scene.hpp"
#include "actrec/trace.hpp"

namespace actrec {

/// The twelve hand/object relations an action definition is built from.
///
///   C1  active object is manipulable        C7  C5 held for th_n frames
///   C2  passive object is not manipulable   C8  C6 held for th_n frames
///   C3  active object has affordance        C9  object and hand co-move
///   C4  passive object has affordance       C10 active object rotates
///   C5  hand within th_d of object          C11 active object on the table
///   C6  hand beyond th_d of object          C12 active object over passive
enum class ConstraintId { C1 = 1, C2, C3, C4, C5, C6, C7, C8, C9, C10, C11, C12 };

std::string to_string(ConstraintId id);
std::optional<ConstraintId> constraint_from_string(std::string_view name);

/// Ontology-only constraints: constant over a trace.
bool is_static(ConstraintId id);
/// Constraints that may appear negated inside a phase.
bool is_per_frame(ConstraintId id);

enum class OperandKind { active, passive, hand, affordance };

/// Operand kinds in argument order, e.g. C12 -> {active, passive}.
const std::vector<OperandKind>& signature(ConstraintId id);

enum class C9Mode { magnitude, vector };

struct Thresholds {
  /// Hand-object distance threshold in pixels. Unset: 5% of the image diagonal.
  std::optional<double> th_d;
  int th_n = 5;
  double sigma_pos = 3.0;
  double eps_rot = 0.1;
  /// C12 x tolerance in pixels. Unset: a quarter of the passive box width.
  std::optional<double> eps_col;
  /// Frames an operand may go unobserved before counters reset.
  int k_miss = 2;
  C9Mode c9_mode = C9Mode::magnitude;

  /// Throws ValidationError on non-positive values.
  void validate() const;
  double distance_threshold(const ImageSize& image) const;

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

/// Role assignment handed to a constraint. Only the roles the constraint's
/// signature names are read.
struct Binding {
  std::optional<std::string> active_object;
  std::optional<std::string> passive_object;
  std::optional<Hand> hand;
  std::optional<Affordance> affordance;

  friend bool operator==(const Binding&, const Binding&) = default;
  friend auto operator<=>(const Binding&, const Binding&) = default;
};

std::string describe(const Binding& binding);

/// Throws std::invalid_argument when `binding` lacks a role `id` needs.
void check_arity(ConstraintId id, const Binding& binding);

enum class Observation { observed, coasted, missing };

/// A constraint value together with how well-supported its operands were.
/// Coasted operands reuse the last observation for up to k_miss frames;
/// missing operands always yield `value == false`.
struct Evaluation {
  bool value = false;
  Observation status = Observation::observed;
};

/// Frame-by-frame evaluation state for one trace.
///
/// advance() must be called with positions 0, 1, 2, ... in order; evaluate()
/// answers for the most recently advanced position. Positions index
/// `trace.frames`, not the frames' own `index` field.
class EvalContext {
 public:
  EvalContext(const Trace& trace, const SceneState& scene, const Ontology& ontology, Thresholds thresholds);

  void advance(std::size_t position);
  std::optional<std::size_t> position() const { return position_; }

  Evaluation evaluate(ConstraintId id, const Binding& binding) const;
  /// Boolean view; `position` must be the current one.
  bool eval(ConstraintId id, const Binding& binding, std::size_t position) const;

  /// Consecutive-frame counter j behind C7 (for C5) and C8 (for C6).
  int counter(ConstraintId id, const std::string& object, Hand hand) const;

  /// The present hand closest to `object`; exact ties go to the right hand.
  std::optional<Hand> bind_hand(const std::string& object) const;

  const Thresholds& thresholds() const { return thresholds_; }
  double th_d() const { return th_d_; }
  const Trace& trace() const { return *trace_; }
  const SceneState& scene() const { return *scene_; }
  const Ontology& ontology() const { return *ontology_; }

 private:
  template <typename T>
  struct Sample {
    T value{};
    Observation status = Observation::missing;
  };

  template <typename T>
  struct Track {
    std::optional<T> last;
    std::size_t last_seen = 0;
    Sample<T> current;
    Sample<T> previous;
  };

  struct Counter {
    int run = 0;
    int dropouts = 0;
  };

  template <typename T>
  void step(Track<T>& track, const std::optional<T>& observed);
  void step_counter(Counter& counter, const Evaluation& e);

  const Sample<BBox>& object_sample(const std::string& cls, bool previous = false) const;
  const Sample<Point2>& hand_sample(Hand hand, bool previous = false) const;
  Evaluation distance_check(const Binding& b, bool within) const;

  const Trace* trace_;
  const SceneState* scene_;
  const Ontology* ontology_;
  Thresholds thresholds_;
  double th_d_;
  std::optional<std::size_t> position_;
  std::map<std::string, Track<BBox>, std::less<>> objects_;
  std::array<Track<Point2>, 2> hands_;
  std::map<std::pair<std::string, Hand>, std::array<Counter, 2>> counters_;
};

}  // namespace actrec
