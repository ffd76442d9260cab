#include "doctest.h"

#include <random>

#include "actrec/error.hpp"
#include "actrec/scene.hpp"
#include "support.hpp"

using namespace actrec;
using support::frame;

namespace {

Trace cup_bowl_trace(std::size_t n) {
  Trace t;
  t.image_size = {640, 480};
  for (std::size_t i = 0; i < n; ++i) {
    t.frames.push_back(frame(i, Point2{500, 100}, {{"cup", {100, 250, 140, 300}}, {"bowl", {300, 260, 400, 320}}}));
  }
  return t;
}

}  // namespace

TEST_CASE("cup and bowl window") {
  const SceneState s = analyze_initial(cup_bowl_trace(20), support::kitchen());
  CHECK(s.assignments.at("cup") == Role::active);
  CHECK(s.assignments.at("bowl") == Role::passive);
  CHECK(s.is_active("cup"));
  CHECK(s.is_passive("bowl"));
  CHECK(s.initial_centroids.at("cup") == Point2{120, 275});
  CHECK(s.initial_centroids.at("bowl") == Point2{350, 290});
  CHECK(s.rotation_baseline.at("cup") == Point2{40, 50});
  CHECK(s.rotation_baseline.count("bowl") == 0);
  CHECK(s.table == BBox{0, 200, 640, 480});
  CHECK(s.first_frame == 0);
  CHECK(s.last_frame == 9);
}

TEST_CASE("single frame window stores that frame exactly") {
  Trace t = cup_bowl_trace(5);
  t.frames[0].detections[0].bbox = {11.5, 250.25, 40.75, 299};
  SceneOptions opt;
  opt.init_window = 1;
  const SceneState s = analyze_initial(t, support::kitchen(), opt);
  CHECK(s.initial_centroids.at("cup") == centroid(BBox{11.5, 250.25, 40.75, 299}));
}

TEST_CASE("jittered window stays within 2 px of the truth") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> j(-2, 2);
  for (int rep = 0; rep < 50; ++rep) {
    Trace t = cup_bowl_trace(15);
    for (auto& f : t.frames) {
      for (auto& d : f.detections) {
        const double dx = j(rng), dy = j(rng);
        d.bbox = {d.bbox.x_t + dx, d.bbox.y_t + dy, d.bbox.x_b + dx, d.bbox.y_b + dy};
      }
    }
    const SceneState s = analyze_initial(t, support::kitchen());
    CHECK(distance(s.initial_centroids.at("cup"), Point2{120, 275}) <= 2 * std::sqrt(2.0));
    CHECK(std::abs(s.initial_centroids.at("cup").x - 120) <= 2);
    CHECK(std::abs(s.initial_centroids.at("cup").y - 275) <= 2);
    CHECK(std::abs(s.initial_centroids.at("bowl").x - 350) <= 2);
    CHECK(std::abs(s.initial_centroids.at("bowl").y - 290) <= 2);
  }
}

TEST_CASE("table is the per-corner median") {
  Trace t = cup_bowl_trace(10);
  t.frames[3].table = BBox{0, 150, 600, 470};
  t.frames[4].table.reset();
  const SceneState s = analyze_initial(t, support::kitchen());
  CHECK(s.table == BBox{0, 200, 640, 480});
}

TEST_CASE("assignment follows manipulability for every class") {
  Trace t = cup_bowl_trace(12);
  for (auto& f : t.frames) {
    f.detections.push_back({"watering_can", {10, 210, 60, 260}, 1.0});
    f.detections.push_back({"plant", {500, 210, 560, 290}, 1.0});
    f.detections.push_back({"spaghetti", {200, 210, 220, 260}, 1.0});
  }
  const Ontology& o = support::kitchen();
  const SceneState s = analyze_initial(t, o);
  CHECK(s.assignments.size() == 5);
  for (const auto& [cls, role] : s.assignments) CHECK((role == Role::active) == o.g_m(cls));
}

TEST_CASE("only the window matters") {
  Trace a = cup_bowl_trace(30);
  Trace b = a;
  for (std::size_t i = 10; i < b.frames.size(); ++i) {
    b.frames[i].detections[0].bbox = {300, 300, 330, 340};
    b.frames[i].table = BBox{5, 5, 6, 6};
  }
  CHECK(analyze_initial(a, support::kitchen()) == analyze_initial(b, support::kitchen()));
  CHECK(analyze_initial(a, support::kitchen()) == analyze_initial(a, support::kitchen()));
}

TEST_CASE("late objects: strict rejects, lenient admits") {
  Trace t = cup_bowl_trace(20);
  t.frames[15].detections.push_back({"plant", {500, 210, 560, 290}, 1.0});
  try {
    analyze_initial(t, support::kitchen());
    FAIL("expected an unknown class error");
  } catch (const UnknownClassError& e) {
    CHECK(e.class_name() == "plant");
  }
  SceneOptions lenient;
  lenient.lenient = true;
  const SceneState s = analyze_initial(t, support::kitchen(), lenient);
  CHECK(s.is_passive("plant"));
  CHECK(s.initial_centroids.at("plant") == Point2{530, 250});
}

TEST_CASE("classes missing from the ontology are rejected") {
  Trace t = cup_bowl_trace(20);
  t.frames[2].detections.push_back({"unicorn", {1, 1, 2, 2}, 1.0});
  CHECK_THROWS_AS(analyze_initial(t, support::kitchen()), UnknownClassError);
  SceneOptions lenient;
  lenient.lenient = true;
  CHECK_THROWS_AS(analyze_initial(t, support::kitchen(), lenient), UnknownClassError);
}

TEST_CASE("window problems") {
  Trace t = cup_bowl_trace(5);
  CHECK_THROWS_AS(analyze_initial(t, support::kitchen()), InputError);
  SceneOptions opt;
  opt.init_window = 0;
  CHECK_THROWS_AS(analyze_initial(t, support::kitchen(), opt), InputError);
  for (auto& f : t.frames) f.table.reset();
  opt.init_window = 5;
  CHECK_THROWS_AS(analyze_initial(t, support::kitchen(), opt), InputError);
  CHECK_THROWS_AS(analyze_initial(Trace{}, support::kitchen()), InputError);
}
