#pragma once

// Straight-line re-derivation of C1..C12 used to cross-check EvalContext.
// Everything is recomputed from the raw frames at each position: no tracks,
// no incremental counters.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "actrec/constraints.hpp"
#include "actrec/scene.hpp"
#include "actrec/trace.hpp"

namespace oracle {

using namespace actrec;

struct Box {
  double xt, yt, xb, yb;
};

struct Seen {
  double a = 0, b = 0, c = 0, d = 0;  // box corners, or x/y in a/b for hands
  bool observed = false;
};

/// Plain lookup tables standing in for the knowledge base.
struct Kb {
  std::map<std::string, bool> manipulable;
  std::map<std::string, std::set<std::string>> affordances;
};

inline Kb kitchen_kb() {
  Kb kb;
  kb.manipulable = {{"cup", true}, {"mug", true}, {"bowl", false}, {"plant", false}};
  kb.affordances = {{"cup", {"pick", "place", "pour"}},
                    {"mug", {"pick", "place"}},
                    {"bowl", {"accept_pouring"}},
                    {"plant", {"accept_pouring"}}};
  return kb;
}

inline const char* kKitchenOntology = R"(affordances: [pick, place, pour, accept_pouring]
objects:
  - {class: cup, manipulable: true, affordances: [pick, place, pour]}
  - {class: mug, manipulable: true, affordances: [pick, place]}
  - {class: bowl, manipulable: false, affordances: [accept_pouring]}
  - {class: plant, manipulable: false, affordances: [accept_pouring]}
)";

inline std::optional<Seen> object_at(const Trace& t, const std::string& cls, std::size_t i, int k_miss) {
  for (std::size_t back = 0; back <= static_cast<std::size_t>(k_miss) && back <= i; ++back) {
    const Frame& f = t.frames[i - back];
    const Detection* best = nullptr;
    for (const auto& d : f.detections) {
      if (d.class_name != cls) continue;
      if (best == nullptr || d.confidence > best->confidence) best = &d;
    }
    if (best) return Seen{best->bbox.x_t, best->bbox.y_t, best->bbox.x_b, best->bbox.y_b, back == 0};
  }
  return std::nullopt;
}

inline std::optional<Seen> hand_at(const Trace& t, Hand h, std::size_t i, int k_miss) {
  for (std::size_t back = 0; back <= static_cast<std::size_t>(k_miss) && back <= i; ++back) {
    const auto& p = t.frames[i - back].hands.get(h);
    if (p) return Seen{p->x, p->y, 0, 0, back == 0};
  }
  return std::nullopt;
}

struct Oracle {
  const Trace& trace;
  const SceneState& scene;
  Kb kb;
  Thresholds th;

  double th_d() const {
    if (th.th_d) return *th.th_d;
    const double w = trace.image_size.width, h = trace.image_size.height;
    return 0.05 * std::sqrt(w * w + h * h);
  }

  /// Squared hand-centroid distance, or nullopt when an operand is missing.
  /// `observed` is false when either operand was coasted.
  std::optional<double> dist2(const std::string& o, Hand h, std::size_t i, bool* observed = nullptr) const {
    const auto ob = object_at(trace, o, i, th.k_miss);
    const auto hd = hand_at(trace, h, i, th.k_miss);
    if (!ob || !hd) return std::nullopt;
    if (observed) *observed = ob->observed && hd->observed;
    const double cx = (ob->a + ob->c) / 2, cy = (ob->b + ob->d) / 2;
    return (cx - hd->a) * (cx - hd->a) + (cy - hd->b) * (cy - hd->b);
  }

  bool c5(const std::string& o, Hand h, std::size_t i) const {
    const auto d2 = dist2(o, h, i);
    return d2 && *d2 < th_d() * th_d();
  }
  bool c6(const std::string& o, Hand h, std::size_t i) const {
    const auto d2 = dist2(o, h, i);
    return d2 && *d2 > th_d() * th_d();
  }

  /// Replays the whole prefix: a run grows on observed true frames, resets
  /// on observed false frames, and survives at most k_miss unobserved ones.
  bool held(bool within, const std::string& o, Hand h, std::size_t i) const {
    int run = 0, gap = 0;
    for (std::size_t p = 0; p <= i; ++p) {
      bool observed = false;
      const auto d2 = dist2(o, h, p, &observed);
      if (d2 && observed) {
        const bool v = within ? *d2 < th_d() * th_d() : *d2 > th_d() * th_d();
        run = v ? run + 1 : 0;
        gap = 0;
      } else {
        ++gap;
        if (gap > th.k_miss) run = 0;
      }
    }
    return run >= th.th_n;
  }

  bool c9(const std::string& o, Hand h, std::size_t i) const {
    if (i == 0) return false;
    const auto o1 = object_at(trace, o, i, th.k_miss), o0 = object_at(trace, o, i - 1, th.k_miss);
    const auto h1 = hand_at(trace, h, i, th.k_miss), h0 = hand_at(trace, h, i - 1, th.k_miss);
    if (!o1 || !o0 || !h1 || !h0) return false;
    const double px = (o1->a + o1->c) / 2 - (o0->a + o0->c) / 2;
    const double py = (o1->b + o1->d) / 2 - (o0->b + o0->d) / 2;
    const double hx = h1->a - h0->a, hy = h1->b - h0->b;
    const double np = std::sqrt(px * px + py * py), nh = std::sqrt(hx * hx + hy * hy);
    const double s = th.sigma_pos;
    if (!(np > s && nh > s)) return false;
    if (th.c9_mode == C9Mode::magnitude) return std::fabs(np - nh) <= s;
    return std::sqrt((px - hx) * (px - hx) + (py - hy) * (py - hy)) <= s;
  }

  bool c10(const std::string& o, std::size_t i) const {
    const auto now = object_at(trace, o, i, th.k_miss);
    if (!now) return false;
    double bx, by;
    if (i == 0) {
      auto it = scene.rotation_baseline.find(o);
      if (it == scene.rotation_baseline.end()) return false;
      bx = it->second.x;
      by = it->second.y;
    } else {
      const auto prev = object_at(trace, o, i - 1, th.k_miss);
      if (!prev) return false;
      bx = prev->c - prev->a;
      by = prev->d - prev->b;
    }
    return std::fabs(std::atan2(now->d - now->b, now->c - now->a) - std::atan2(by, bx)) > th.eps_rot;
  }

  bool c11(const std::string& o, std::size_t i) const {
    const auto ob = object_at(trace, o, i, th.k_miss);
    if (!ob) return false;
    const double cx = (ob->a + ob->c) / 2, cy = (ob->b + ob->d) / 2;
    const auto& t = scene.table;
    return cx > t.x_t && cx < t.x_b && cy > t.y_t && cy < t.y_b;
  }

  bool c12(const std::string& a, const std::string& p, std::size_t i) const {
    const auto oa = object_at(trace, a, i, th.k_miss), op = object_at(trace, p, i, th.k_miss);
    if (!oa || !op) return false;
    const double eps = th.eps_col ? *th.eps_col : (op->c - op->a) / 4;
    const double ax = (oa->a + oa->c) / 2, ay = (oa->b + oa->d) / 2;
    const double px = (op->a + op->c) / 2, py = (op->b + op->d) / 2;
    return std::fabs(ax - px) <= eps && ay < py;
  }

  bool value(ConstraintId id, const Binding& b, std::size_t i) const {
    switch (id) {
      case ConstraintId::C1:
        return kb.manipulable.at(*b.active_object);
      case ConstraintId::C2:
        return !kb.manipulable.at(*b.passive_object);
      case ConstraintId::C3:
        return kb.affordances.at(*b.active_object).count(*b.affordance) > 0;
      case ConstraintId::C4:
        return kb.affordances.at(*b.passive_object).count(*b.affordance) > 0;
      case ConstraintId::C5:
        return c5(*b.active_object, *b.hand, i);
      case ConstraintId::C6:
        return c6(*b.active_object, *b.hand, i);
      case ConstraintId::C7:
        return held(true, *b.active_object, *b.hand, i);
      case ConstraintId::C8:
        return held(false, *b.active_object, *b.hand, i);
      case ConstraintId::C9:
        return c9(*b.active_object, *b.hand, i);
      case ConstraintId::C10:
        return c10(*b.active_object, i);
      case ConstraintId::C11:
        return c11(*b.active_object, i);
      case ConstraintId::C12:
        return c12(*b.active_object, *b.passive_object, i);
    }
    return false;
  }
};

/// Random walk traces over integer pixel coordinates with detector
/// dropouts, duplicate detections and a hand that sometimes carries the cup.
inline Trace random_trace(std::mt19937_64& rng, std::size_t frames) {
  std::uniform_int_distribution<int> coord(40, 600), step(-12, 12), size(10, 80), offset(-25, 25);
  std::bernoulli_distribution present(0.85), duplicate(0.1), glue(0.5), flip(0.08), coin(0.5);
  Trace t;
  t.image_size = {640, 480};
  struct Obj {
    std::string cls;
    int x, y, w, h;
  };
  std::vector<Obj> objs;
  for (const char* cls : {"cup", "mug", "bowl", "plant"}) objs.push_back({cls, coord(rng), coord(rng) % 400 + 40, size(rng), size(rng)});
  int hx[2] = {coord(rng), coord(rng)}, hy[2] = {coord(rng) % 400, coord(rng) % 400};
  bool glued = false;
  for (std::size_t i = 0; i < frames; ++i) {
    Frame f;
    f.index = i * 2 + 3;
    if (flip(rng)) glued = !glued;
    for (auto& o : objs) {
      o.x += step(rng);
      o.y += step(rng);
      if (flip(rng)) o.w = size(rng);
      if (flip(rng)) o.h = size(rng);
    }
    for (int h = 0; h < 2; ++h) {
      hx[h] += step(rng);
      hy[h] += step(rng);
    }
    if (glued && glue(rng)) {
      hx[1] = objs[0].x + offset(rng) / 5;
      hy[1] = objs[0].y + offset(rng) / 5;
    }
    const bool forced = i < 3;
    for (const auto& o : objs) {
      if (!forced && !present(rng)) continue;
      f.detections.push_back({o.cls, BBox{double(o.x), double(o.y), double(o.x + o.w), double(o.y + o.h)}, 0.9});
      if (duplicate(rng)) {
        f.detections.push_back(
            {o.cls, BBox{double(o.x + 7), double(o.y - 5), double(o.x + o.w + 7), double(o.y + o.h)},
             coin(rng) ? 0.95 : 0.9});
      }
    }
    if (forced || present(rng)) f.hands.left = Point2{double(hx[0]), double(hy[0])};
    if (forced || present(rng)) f.hands.right = Point2{double(hx[1]), double(hy[1])};
    if (forced || present(rng)) f.table = BBox{0, 200, 640, 480};
    t.frames.push_back(std::move(f));
  }
  return t;
}

inline Thresholds random_thresholds(std::mt19937_64& rng) {
  Thresholds th;
  std::uniform_int_distribution<int> d(5, 60), n(1, 6), s(1, 4), col(2, 30), k(0, 3);
  std::uniform_real_distribution<double> rot(0.05, 0.5);
  std::bernoulli_distribution coin(0.5);
  th.th_d = coin(rng) ? std::optional<double>(d(rng)) : std::nullopt;
  th.th_n = n(rng);
  th.sigma_pos = s(rng);
  th.eps_rot = rot(rng);
  th.eps_col = coin(rng) ? std::optional<double>(col(rng)) : std::nullopt;
  th.k_miss = k(rng);
  th.c9_mode = coin(rng) ? C9Mode::magnitude : C9Mode::vector;
  return th;
}

struct Comparison {
  std::size_t frames = 0;
  std::size_t checks = 0;
  std::size_t mismatches = 0;
  std::string first_mismatch;
};

/// Compares every constraint for every binding on every frame.
inline void compare(const Trace& trace, const SceneState& scene, const Ontology& ontology, const Thresholds& th,
                    Comparison& out) {
  Oracle o{trace, scene, kitchen_kb(), th};
  EvalContext ctx(trace, scene, ontology, th);
  std::vector<std::string> actives, passives;
  for (const auto& [cls, role] : scene.assignments) (role == Role::active ? actives : passives).push_back(cls);
  const std::vector<std::string> affordances{"pick", "place", "pour", "accept_pouring"};
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    ctx.advance(i);
    ++out.frames;
    for (const auto& a : actives) {
      for (const auto& p : passives) {
        for (Hand h : {Hand::left, Hand::right}) {
          for (const auto& aff : affordances) {
            Binding b{a, p, h, aff};
            for (int k = 1; k <= 12; ++k) {
              const auto id = static_cast<ConstraintId>(k);
              const bool got = ctx.eval(id, b, i);
              const bool want = o.value(id, b, i);
              ++out.checks;
              if (got != want) {
                if (out.mismatches == 0) {
                  out.first_mismatch = to_string(id) + " at frame " + std::to_string(trace.frames[i].index) +
                                       " for " + describe(b) + ": got " + (got ? "true" : "false");
                }
                ++out.mismatches;
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace oracle
