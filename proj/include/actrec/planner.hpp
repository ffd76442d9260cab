#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actrec/error.hpp"
#include "actrec/geometry.hpp"
#include "actrec/ontology.hpp"
#include "actrec/recognizer.hpp"
#include "actrec/scene.hpp"

namespace actrec {

enum class Verb { grasp, move_over, pour_into, place_on_table, release };

std::string_view to_string(Verb verb);
std::optional<Verb> verb_from_string(std::string_view name);
/// Number of object arguments the verb takes.
std::size_t arity(Verb verb);

struct Command {
  Verb verb = Verb::grasp;
  std::vector<std::string> args;
  /// Action the command was expanded from. Unset for inserted releases.
  std::optional<std::string> source_action;
  std::optional<std::size_t> source_id;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> source_interval;
  /// place_on_table only: table centroid and the object's initial position.
  std::optional<Point2> target;
  std::optional<Point2> initial_position;

  friend bool operator==(const Command&, const Command&) = default;
};

struct CommandPlan {
  std::string source;
  std::vector<Command> commands;

  friend bool operator==(const CommandPlan&, const CommandPlan&) = default;
};

class PlanError : public InputError {
 public:
  enum class Kind { affordance_violation, dangling_manipulation, precondition_failure };

  PlanError(Kind kind, const std::string& what) : InputError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Expands the primitive actions of `timeline` into commands.
///
///   Pick  -> grasp(o)
///   Pour  -> move_over(o, p), pour_into(o, p)
///   Place -> place_on_table(o)
///
/// Composed and unrecognized actions contribute nothing of their own. A
/// release is inserted before a grasp while another object is held and
/// appended for anything still held at the end. With `scene`, place commands
/// carry the table centroid and the object's initial centroid.
CommandPlan plan(const Timeline& timeline, const Ontology& ontology, const SceneState* scene = nullptr);

void write_plan(const CommandPlan& plan, std::ostream& out);
std::string serialize_plan(const CommandPlan& plan);
CommandPlan read_plan(std::istream& in);
CommandPlan parse_plan_string(const std::string& text);
CommandPlan load_plan_file(const std::string& path);
void save_plan_file(const CommandPlan& plan, const std::string& path);

enum class Location { resting, held, on_table, released };

std::string_view to_string(Location location);

struct ObjectState {
  Location location = Location::resting;
  std::vector<std::string> contains;

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

/// Symbolic world the plan is executed against.
struct WorldState {
  std::map<std::string, ObjectState> objects;
  std::optional<std::string> held;
  std::optional<std::string> over;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

/// Every active object that can pour starts out holding "<class>_contents".
WorldState initial_world(const SceneState& scene, const Ontology& ontology);

/// Throws PlanError(precondition_failure) on the first command whose
/// preconditions fail, e.g. grasping while holding or pouring while not over
/// the target.
WorldState simulate_plan(const CommandPlan& plan, WorldState world);

struct Goal {
  /// Passive object -> items it must contain.
  std::map<std::string, std::set<std::string>> contains;
  std::set<std::string> placed;
  std::set<std::string> released;

  friend bool operator==(const Goal&, const Goal&) = default;
};

/// Unmet goal conditions, empty when the goal is reached. The hand must end
/// up empty.
std::vector<std::string> unmet(const WorldState& world, const Goal& goal);
inline bool reached(const WorldState& world, const Goal& goal) { return unmet(world, goal).empty(); }

}  // namespace actrec
