#include "actrec/scene.hpp"

#include <algorithm>
#include <set>
#include <vector>

#include "actrec/error.hpp"

namespace actrec {

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

Point2 median_point(const std::vector<Point2>& points) {
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return {median(std::move(xs)), median(std::move(ys))};
}

}  // namespace

bool SceneState::is_active(const std::string& class_name) const {
  auto it = assignments.find(class_name);
  return it != assignments.end() && it->second == Role::active;
}

bool SceneState::is_passive(const std::string& class_name) const {
  auto it = assignments.find(class_name);
  return it != assignments.end() && it->second == Role::passive;
}

SceneState analyze_initial(const Trace& trace, const Ontology& ontology, const SceneOptions& options) {
  if (options.init_window == 0 || trace.frames.empty()) throw InputError("initialization window is empty");
  if (trace.frames.size() < options.init_window) {
    throw InputError("trace has " + std::to_string(trace.frames.size()) + " frames, fewer than the " +
                     std::to_string(options.init_window) + "-frame initialization window");
  }

  std::map<std::string, std::vector<Point2>> centroids;
  std::map<std::string, std::vector<Point2>> diagonals;
  std::vector<double> tx, ty, bx, by;
  for (std::size_t i = 0; i < options.init_window; ++i) {
    const Frame& f = trace.frames[i];
    std::set<std::string_view> seen;
    for (const auto& d : f.detections) {
      if (!seen.insert(d.class_name).second) continue;
      if (!ontology.contains(d.class_name)) throw UnknownClassError(d.class_name);
      const Detection* best = f.find(d.class_name);
      centroids[d.class_name].push_back(centroid(best->bbox));
      diagonals[d.class_name].push_back(local_changes(best->bbox));
    }
    if (f.table) {
      tx.push_back(f.table->x_t);
      ty.push_back(f.table->y_t);
      bx.push_back(f.table->x_b);
      by.push_back(f.table->y_b);
    }
  }
  if (tx.empty()) throw InputError("no table observation in the initialization window");

  SceneState scene;
  scene.first_frame = trace.frames.front().index;
  scene.last_frame = trace.frames[options.init_window - 1].index;
  scene.table = {median(tx), median(ty), median(bx), median(by)};
  for (const auto& [cls, points] : centroids) {
    const bool active = ontology.g_m(cls);
    scene.assignments[cls] = active ? Role::active : Role::passive;
    scene.initial_centroids[cls] = median_point(points);
    if (active) scene.rotation_baseline[cls] = median_point(diagonals[cls]);
  }

  for (std::size_t i = options.init_window; i < trace.frames.size(); ++i) {
    for (const auto& d : trace.frames[i].detections) {
      if (scene.assignments.contains(d.class_name)) continue;
      if (!ontology.contains(d.class_name)) throw UnknownClassError(d.class_name);
      if (!options.lenient) {
        throw UnknownClassError(d.class_name, "object first seen after the initialization window (frame " +
                                                  std::to_string(trace.frames[i].index) + "):");
      }
      const Detection* best = trace.frames[i].find(d.class_name);
      const bool active = ontology.g_m(d.class_name);
      scene.assignments[d.class_name] = active ? Role::active : Role::passive;
      scene.initial_centroids[d.class_name] = centroid(best->bbox);
      if (active) scene.rotation_baseline[d.class_name] = local_changes(best->bbox);
    }
  }
  return scene;
}

}  // namespace actrec
