#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "actrec/constraints.hpp"

namespace actrec {

enum class RoleKind { active, passive, hand };

std::string_view to_string(RoleKind kind);

struct RoleDecl {
  std::string name;
  RoleKind kind = RoleKind::active;

  friend bool operator==(const RoleDecl&, const RoleDecl&) = default;
};

/// One constraint applied to role names, e.g. `C3(o, pick)` or `!C9(o, h)`.
struct ConstraintTerm {
  ConstraintId id = ConstraintId::C1;
  std::vector<std::string> roles;
  std::optional<Affordance> affordance;
  bool negated = false;

  friend bool operator==(const ConstraintTerm&, const ConstraintTerm&) = default;
};

/// Conjunction that must hold for `hold_frames` consecutive frames (th_n when
/// unset). `hold_term` records which term was written as `hold(...)`.
struct Phase {
  std::vector<ConstraintTerm> terms;
  std::optional<std::size_t> hold_term;
  std::optional<int> hold_frames;

  int duration(const Thresholds& t) const { return hold_frames ? *hold_frames : t.th_n; }

  friend bool operator==(const Phase&, const Phase&) = default;
};

/// Reference to another action with the caller's role names as arguments.
struct SubActionRef {
  std::string action;
  std::vector<std::string> roles;

  friend bool operator==(const SubActionRef&, const SubActionRef&) = default;
};

/// A named action: ontology gates plus ordered temporal phases.
///
/// `after` sub-actions become children of each recognized instance and must
/// have completed before the first phase starts. `requires` sub-actions are
/// preconditions only. A definition without phases is composed: it is
/// assembled from its `after` sub-actions in order.
struct ActionDefinition {
  std::string name;
  std::vector<RoleDecl> roles;
  std::vector<ConstraintTerm> static_constraints;
  std::vector<SubActionRef> after;
  std::vector<SubActionRef> requires_;
  std::vector<Phase> phases;

  bool composed() const { return phases.empty(); }
  const RoleDecl* role(std::string_view name) const;
  const RoleDecl* role_of_kind(RoleKind kind) const;

  friend bool operator==(const ActionDefinition&, const ActionDefinition&) = default;
};

/// Parses the action language. Throws ParseError (line/column) for grammar
/// errors and unknown constraints; ValidationError for arity, kind and
/// reference problems, including cyclic sub-actions.
std::vector<ActionDefinition> parse_actions(std::istream& source);
std::vector<ActionDefinition> parse_actions_string(const std::string& text);
std::vector<ActionDefinition> load_actions_file(const std::string& path);

std::string dump_actions(const std::vector<ActionDefinition>& definitions);

/// Rejects unknown or cyclic references. Returns definition indices with
/// every sub-action ahead of its users.
std::vector<std::size_t> dependency_order(const std::vector<ActionDefinition>& definitions);

enum class Library {
  standard,
  /// Pour checks only co-movement, without the rotation and over-target
  /// terms.
  co_movement,
};

/// Source text of the shipped Pick / Place / Pour / wateringPlant library.
const std::string& builtin_actions_source(Library library = Library::standard);
std::vector<ActionDefinition> builtin_actions(Library library = Library::standard);

}  // namespace actrec
