#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace actrec {

using Affordance = std::string;

struct ObjectSpec {
  std::string class_name;
  bool manipulable = false;
  std::set<Affordance> affordances;

  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

/// The object/affordance knowledge base. Immutable once built.
///
/// Every lookup on an undeclared class or affordance throws
/// UnknownClassError / ValidationError; there is no silent default.
class Ontology {
 public:
  /// Affordances that only make sense for an object a single hand can move.
  static const std::vector<Affordance>& default_requires_manipulation();
  /// pick, place, pour, accept_pouring.
  static const std::vector<Affordance>& default_affordances();

  Ontology() = default;

  /// Validates and builds. Throws ValidationError naming the offending entry.
  Ontology(std::vector<Affordance> affordances, std::vector<ObjectSpec> objects,
           std::vector<Affordance> requires_manipulation = default_requires_manipulation());

  std::size_t size() const { return objects_.size(); }
  bool contains(std::string_view class_name) const;
  bool has_affordance(std::string_view affordance) const;

  const ObjectSpec& object(std::string_view class_name) const;
  const std::map<std::string, ObjectSpec, std::less<>>& objects() const { return objects_; }
  const std::vector<Affordance>& affordances() const { return affordances_; }
  const std::vector<Affordance>& requires_manipulation() const { return requires_manipulation_; }

  /// 1 iff the class is manipulable (active).
  bool g_m(std::string_view class_name) const;
  /// The class's affordance set.
  const std::set<Affordance>& g_l(std::string_view class_name) const;
  /// 1 iff `affordance` is in g_l(class_name).
  bool g_a(std::string_view class_name, std::string_view affordance) const;

  friend bool operator==(const Ontology&, const Ontology&) = default;

 private:
  std::vector<Affordance> affordances_;
  std::vector<Affordance> requires_manipulation_;
  std::map<std::string, ObjectSpec, std::less<>> objects_;
};

/// Reads the YAML ontology document. Throws ParseError on malformed input and
/// ValidationError on broken references.
Ontology load_ontology(std::istream& source);
Ontology load_ontology_file(const std::string& path);
Ontology load_ontology_string(const std::string& text);

std::string serialize_ontology(const Ontology& ontology);

}  // namespace actrec
