#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "actrec/ontology.hpp"
#include "actrec/synthgen.hpp"
#include "actrec/trace.hpp"

namespace support {

using namespace actrec;

inline std::string data(const std::string& rel) { return std::string(ACTREC_DATA_DIR) + "/" + rel; }

inline const Ontology& kitchen() {
  static const Ontology o = load_ontology_file(data("ontology.yaml"));
  return o;
}

inline Scenario scenario(const std::string& name) { return load_scenario_file(data("templates/" + name + ".yaml")); }

inline const std::vector<std::string>& template_names() {
  static const std::vector<std::string> names{"cup_bowl", "mug_bowl", "watering_can_plant", "spaghetti_pot",
                                              "yellow_cup_pot"};
  return names;
}

struct Obj {
  std::string cls;
  BBox box;
};

/// A frame with the right hand only (pass nullopt to hide it).
inline Frame frame(std::uint64_t index, std::optional<Point2> right, std::initializer_list<Obj> objs,
                   std::optional<Point2> left = std::nullopt, std::optional<BBox> table = BBox{0, 200, 640, 480}) {
  Frame f;
  f.index = index;
  f.hands.right = right;
  f.hands.left = left;
  for (const auto& o : objs) f.detections.push_back({o.cls, o.box, 1.0});
  f.table = table;
  return f;
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("actrec_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str(const std::string& rel = {}) const { return rel.empty() ? path.string() : (path / rel).string(); }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace support
