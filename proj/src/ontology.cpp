#include "actrec/ontology.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "actrec/error.hpp"

namespace actrec {

namespace {

std::size_t line_of(const YAML::Node& node) { return static_cast<std::size_t>(node.Mark().line + 1); }
std::size_t column_of(const YAML::Node& node) { return static_cast<std::size_t>(node.Mark().column + 1); }

void reject_unknown_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                         std::string_view where) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError("unknown key '" + key + "' in " + std::string(where), line_of(kv.first),
                       column_of(kv.first));
    }
  }
}

std::vector<std::string> string_list(const YAML::Node& node, std::string_view what) {
  if (!node.IsSequence()) {
    throw ParseError(std::string(what) + " must be a list", line_of(node), column_of(node));
  }
  std::vector<std::string> out;
  for (const auto& item : node) {
    if (!item.IsScalar() || item.Scalar().empty()) {
      throw ParseError(std::string(what) + " entries must be non-empty names", line_of(item), column_of(item));
    }
    out.push_back(item.Scalar());
  }
  return out;
}

}  // namespace

const std::vector<Affordance>& Ontology::default_requires_manipulation() {
  static const std::vector<Affordance> list{"pick", "place", "pour"};
  return list;
}

const std::vector<Affordance>& Ontology::default_affordances() {
  static const std::vector<Affordance> list{"pick", "place", "pour", "accept_pouring"};
  return list;
}

Ontology::Ontology(std::vector<Affordance> affordances, std::vector<ObjectSpec> objects,
                   std::vector<Affordance> requires_manipulation)
    : affordances_(std::move(affordances)), requires_manipulation_(std::move(requires_manipulation)) {
  std::set<std::string_view> seen;
  for (const auto& a : affordances_) {
    if (a.empty()) throw ValidationError("empty affordance name");
    if (!seen.insert(a).second) throw ValidationError("duplicate affordance '" + a + "'");
  }
  for (const auto& a : requires_manipulation_) {
    if (!seen.contains(a)) {
      throw ValidationError("requires_manipulation lists undeclared affordance '" + a + "'");
    }
  }
  for (auto& spec : objects) {
    if (spec.class_name.empty()) throw ValidationError("object with empty class name");
    for (const auto& a : spec.affordances) {
      if (!seen.contains(a)) {
        throw ValidationError("object '" + spec.class_name + "' references undeclared affordance '" + a + "'");
      }
      if (!spec.manipulable && std::find(requires_manipulation_.begin(), requires_manipulation_.end(), a) !=
                                   requires_manipulation_.end()) {
        throw ValidationError("object '" + spec.class_name + "' is not manipulable but lists affordance '" + a +
                              "' which requires manipulation");
      }
    }
    auto name = spec.class_name;
    if (!objects_.emplace(name, std::move(spec)).second) {
      throw ValidationError("duplicate object class '" + name + "'");
    }
  }
}

bool Ontology::contains(std::string_view class_name) const { return objects_.find(class_name) != objects_.end(); }

bool Ontology::has_affordance(std::string_view affordance) const {
  return std::find(affordances_.begin(), affordances_.end(), affordance) != affordances_.end();
}

const ObjectSpec& Ontology::object(std::string_view class_name) const {
  auto it = objects_.find(class_name);
  if (it == objects_.end()) throw UnknownClassError(std::string(class_name));
  return it->second;
}

bool Ontology::g_m(std::string_view class_name) const { return object(class_name).manipulable; }

const std::set<Affordance>& Ontology::g_l(std::string_view class_name) const {
  return object(class_name).affordances;
}

bool Ontology::g_a(std::string_view class_name, std::string_view affordance) const {
  const auto& spec = object(class_name);
  if (!has_affordance(affordance)) {
    throw ValidationError("unknown affordance '" + std::string(affordance) + "'");
  }
  return spec.affordances.find(std::string(affordance)) != spec.affordances.end();
}

Ontology load_ontology(std::istream& source) {
  YAML::Node root;
  try {
    root = YAML::Load(source);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1), static_cast<std::size_t>(e.mark.column + 1));
  }
  if (root.IsNull()) throw ParseError("empty ontology document", 1);
  if (!root.IsMap()) throw ParseError("ontology document must be a mapping", line_of(root), column_of(root));
  reject_unknown_keys(root, {"affordances", "objects", "requires_manipulation"}, "ontology");

  try {
    std::vector<Affordance> affordances =
        root["affordances"] ? string_list(root["affordances"], "affordances") : Ontology::default_affordances();
    std::vector<Affordance> requires_manipulation;
    if (root["requires_manipulation"]) {
      requires_manipulation = string_list(root["requires_manipulation"], "requires_manipulation");
    } else {
      // defaults only cover what the document declares
      for (const auto& a : Ontology::default_requires_manipulation()) {
        if (std::find(affordances.begin(), affordances.end(), a) != affordances.end()) {
          requires_manipulation.push_back(a);
        }
      }
    }
    std::vector<ObjectSpec> objects;
    if (const auto list = root["objects"]) {
      if (!list.IsSequence() && !list.IsNull()) throw ParseError("objects must be a list", line_of(list));
      for (const auto& entry : list) {
        if (!entry.IsMap()) throw ParseError("object entry must be a mapping", line_of(entry), column_of(entry));
        reject_unknown_keys(entry, {"class", "manipulable", "affordances"}, "object entry");
        if (!entry["class"] || !entry["manipulable"]) {
          throw ParseError("object entry needs 'class' and 'manipulable'", line_of(entry), column_of(entry));
        }
        ObjectSpec spec;
        spec.class_name = entry["class"].as<std::string>();
        spec.manipulable = entry["manipulable"].as<bool>();
        if (entry["affordances"]) {
          for (auto& a : string_list(entry["affordances"], "affordances")) {
            if (!spec.affordances.insert(a).second) {
              throw ValidationError("object '" + spec.class_name + "' lists affordance '" + a + "' twice");
            }
          }
        }
        objects.push_back(std::move(spec));
      }
    }
    return Ontology(std::move(affordances), std::move(objects), std::move(requires_manipulation));
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1), static_cast<std::size_t>(e.mark.column + 1));
  }
}

Ontology load_ontology_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ontology file '" + path + "'");
  try {
    return load_ontology(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

Ontology load_ontology_string(const std::string& text) {
  std::istringstream in(text);
  return load_ontology(in);
}

std::string serialize_ontology(const Ontology& ontology) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "affordances" << YAML::Value << YAML::Flow << ontology.affordances();
  out << YAML::Key << "requires_manipulation" << YAML::Value << YAML::Flow << ontology.requires_manipulation();
  out << YAML::Key << "objects" << YAML::Value << YAML::BeginSeq;
  for (const auto& [name, spec] : ontology.objects()) {
    out << YAML::BeginMap;
    out << YAML::Key << "class" << YAML::Value << name;
    out << YAML::Key << "manipulable" << YAML::Value << spec.manipulable;
    out << YAML::Key << "affordances" << YAML::Value << YAML::Flow
        << std::vector<std::string>(spec.affordances.begin(), spec.affordances.end());
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace actrec
