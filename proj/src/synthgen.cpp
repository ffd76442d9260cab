#include "actrec/synthgen.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json_util.hpp"

namespace actrec {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kLeadIn = 15;
constexpr double kFps = 30.0;
constexpr double kMinTilt = 0.1;
constexpr double kMaxTilt = std::numbers::pi / 2 - 0.1;

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

Point2 unit(Point2 v) {
  const double n = norm(v);
  return n > 0 ? (1.0 / n) * v : Point2{1.0, 0.0};
}

struct Obj {
  std::string cls;
  Point2 c;
  Point2 initial;
  double w = 0, h = 0;
  double theta0 = 0, theta = 0;
  double diag = 0;

  BBox bbox() const {
    if (theta == theta0) return box_around(c, w, h);
    return box_around(c, diag * std::cos(theta), diag * std::sin(theta));
  }
};

/// Per-frame grip annotation used by the grip-offset noise.
struct Grip {
  double weight = 0.0;
  Point2 dir;
  std::string object;
};

class Synth {
 public:
  Synth(const Scenario& sc, const Thresholds& th) : sc_(sc), th_(th) {
    th.validate();
    th_d_ = th.distance_threshold(sc.image_size);
    speed_ = std::max(sc.speed, 3.0 * th.sigma_pos);
    if (!(sc.speed > 0)) fail("scenario '" + sc.name + "': speed must be positive");

    std::mt19937_64 rng(sc.seed);
    std::uniform_real_distribution<double> shift(-sc.perturb_px, sc.perturb_px);
    for (const auto& o : sc.objects) {
      Obj ob;
      ob.cls = o.class_name;
      ob.w = o.bbox.width();
      ob.h = o.bbox.height();
      ob.c = centroid(o.bbox);
      if (sc.perturb_px > 0) {
        const double dx = std::round(shift(rng));
        const double dy = std::round(shift(rng));
        ob.c = ob.c + Point2{dx, dy};
      }
      ob.initial = ob.c;
      ob.theta0 = ob.theta = angle(local_changes(o.bbox));
      ob.diag = norm(local_changes(o.bbox));
      objs_.push_back(ob);
    }
    if (sc.hand == "left") {
      hand_ = Hand::left;
    } else if (sc.hand == "right") {
      hand_ = Hand::right;
    } else if (sc.hand == "random") {
      hand_ = std::bernoulli_distribution(0.5)(rng) ? Hand::right : Hand::left;
    } else {
      fail("scenario '" + sc.name + "': hand must be left, right or random");
    }
    const double w = sc.image_size.width, hgt = sc.image_size.height;
    H_ = sc.hand_start ? *sc.hand_start : Point2{hand_ == Hand::right ? 0.9 * w : 0.1 * w, 0.95 * hgt};
    for (const auto& ob : objs_) {
      if (distance(H_, ob.c) <= 2 * th_d_) {
        fail("scenario '" + sc.name + "': hand starts within reach of '" + ob.cls + "'");
      }
    }
  }

  Generated run() {
    for (std::size_t k = 0; k < kLeadIn; ++k) emit();
    for (std::size_t s = 0; s < sc_.script.size(); ++s) {
      step_ = s;
      const auto& st = sc_.script[s];
      switch (st.kind) {
        case StepKind::pick:
          pick(st.object);
          break;
        case StepKind::pour:
          pour(st.object, st.target);
          break;
        case StepKind::place:
          place(st.object, st.at);
          break;
        case StepKind::touch:
          touch(st.object);
          break;
        case StepKind::idle:
          if (st.frames < 0) fail_step("idle needs a non-negative frame count");
          for (int k = 0; k < st.frames; ++k) emit();
          break;
      }
    }
    if (frames_.size() > sc_.frames) {
      fail("scenario '" + sc_.name + "' needs " + std::to_string(frames_.size()) + " frames but allows " +
           std::to_string(sc_.frames));
    }
    while (frames_.size() < sc_.frames) emit();

    Generated g;
    g.trace.image_size = sc_.image_size;
    g.trace.frames = std::move(frames_);
    g.labels.source = sc_.name;
    g.labels.thresholds = th_;
    g.labels.instances = std::move(labels_);
    normalize(g.labels);
    g.releases = std::move(releases_);
    g.hand = hand_;
    grips_out_ = std::move(grips_);
    return g;
  }

  std::vector<Grip> grips_out_;

 private:
  [[noreturn]] static void fail(const std::string& what) { throw GenerationError(what); }

  [[noreturn]] void fail_step(const std::string& what) const {
    const auto& st = sc_.script[step_];
    static const char* names[] = {"pick", "pour", "place", "touch", "idle"};
    std::string label = names[static_cast<int>(st.kind)];
    if (!st.object.empty()) label += " " + st.object;
    fail("scenario '" + sc_.name + "', step " + std::to_string(step_ + 1) + " (" + label + "): " + what);
  }

  Obj& object(const std::string& cls) {
    for (auto& ob : objs_) {
      if (ob.cls == cls) return ob;
    }
    fail_step("no object '" + cls + "' in the scenario");
  }

  std::uint64_t now() const { return frames_.size() - 1; }

  void emit() {
    Frame f;
    f.index = frames_.size();
    f.timestamp = std::round(static_cast<double>(f.index) / kFps * 1e4) / 1e4;
    f.hands.get(hand_) = Point2{round3(H_.x), round3(H_.y)};
    for (const auto& ob : objs_) {
      const BBox b = ob.bbox();
      f.detections.push_back({ob.cls, {round3(b.x_t), round3(b.y_t), round3(b.x_b), round3(b.y_b)}, 1.0});
    }
    f.table = sc_.table;
    frames_.push_back(std::move(f));
    grips_.push_back(grip_);
  }

  void set_hand(Point2 p) {
    H_ = p;
    if (held_) held_->c = H_ - grip_off_;
  }

  /// Straight-line hand motion; `on_frame(k, n)` runs before each frame is
  /// emitted.
  template <typename F>
  void move_to(Point2 target, F on_frame) {
    const Point2 from = H_;
    const double d = distance(from, target);
    const int n = std::max(1, static_cast<int>(std::ceil(d / speed_)));
    for (int k = 1; k <= n; ++k) {
      set_hand(from + (static_cast<double>(k) / n) * (target - from));
      on_frame(k, n);
      emit();
    }
  }

  void check_in_image(const Obj& ob) {
    const double r = ob.diag / 2;
    if (ob.c.x < r || ob.c.y < r || ob.c.x > sc_.image_size.width - r || ob.c.y > sc_.image_size.height - r) {
      fail_step("'" + ob.cls + "' would leave the image");
    }
  }

  void pick(const std::string& cls) {
    if (held_) fail_step("the hand already holds '" + held_->cls + "'");
    Obj& ob = object(cls);
    const Point2 u = unit(H_ - ob.c);
    grip_ = Grip{0.0, u, cls};
    std::optional<std::uint64_t> start;
    move_to(ob.c + (th_d_ / 4) * u, [&](int k, int n) {
      grip_.weight = static_cast<double>(k) / n;
      if (!start && distance(H_, ob.c) < th_d_) start = frames_.size();
    });
    if (!start) fail_step("approach never comes within th_d");
    held_ = &ob;
    grip_off_ = H_ - ob.c;
    grip_.weight = 1.0;
    for (int k = 0; k < th_.th_n; ++k) emit();
    for (int k = 0; k < th_.th_n + 3; ++k) {
      set_hand(H_ + Point2{0.0, -speed_});
      check_in_image(ob);
      emit();
    }
    pick_id_ = push_label("Pick", {cls, std::nullopt, hand_, std::nullopt}, *start, now(), {});
    poured_ = false;
  }

  void pour(const std::string& cls, const std::string& into) {
    if (!held_ || held_->cls != cls) fail_step("'" + cls + "' is not held");
    if (poured_) fail_step("each pour needs its own pick");
    Obj& ob = *held_;
    const Obj& p = object(into);
    const double s = 2.0 * th_.sigma_pos;
    const double eps_col = th_.eps_col ? *th_.eps_col : 0.25 * p.w;
    if (s > eps_col) fail_step("the pouring sway exceeds the column tolerance over '" + into + "'");
    const double step = 1.5 * th_.eps_rot;
    if (2 * step > kMaxTilt - kMinTilt) fail_step("eps_rot is too large to realize a tilt");

    const Point2 spot{p.c.x, p.c.y - p.h / 2 - ob.h / 2 - 2.0};
    move_to(spot + grip_off_, [](int, int) {});
    check_in_image(ob);

    double dir = ob.theta0 > (kMinTilt + kMaxTilt) / 2 ? -1.0 : 1.0;
    for (int k = 1; k <= th_.th_n + 3; ++k) {
      double next = ob.theta + dir * step;
      if (next > kMaxTilt || next < kMinTilt) {
        dir = -dir;
        next = ob.theta + dir * step;
      }
      ob.theta = next;
      set_hand(Point2{p.c.x + (k % 2 == 1 ? s : -s), spot.y} + grip_off_);
      emit();
    }
    ob.theta = ob.theta0;
    const std::size_t id = push_label("Pour", {cls, into, hand_, std::nullopt}, labels_[pick_id_].start, now(),
                                      {pick_id_});
    pending_pour_[cls] = id;
    poured_ = true;
  }

  void place(const std::string& cls, std::optional<Point2> at) {
    if (!held_ || held_->cls != cls) fail_step("'" + cls + "' is not held");
    Obj& ob = *held_;
    const BBox& t = sc_.table;
    Point2 dest;
    if (sc_.skip_table_check) {
      dest = {ob.c.x, t.y_t - ob.diag / 2 - 10.0};
    } else {
      dest = at ? *at : ob.initial;
      if (!(dest.x > t.x_t && dest.x < t.x_b && dest.y > t.y_t && dest.y < t.y_b)) {
        fail_step("the placement point is not on the table");
      }
    }
    ob.theta = ob.theta0;
    move_to(dest + grip_off_, [](int, int) {});
    check_in_image(ob);

    held_ = nullptr;
    const double r = std::max(speed_, 0.4 * th_d_);
    const int n = th_.th_n + 3;
    const Point2 u = grip_.dir;
    std::uint64_t start = 0;
    for (int k = 1; k <= n; ++k) {
      set_hand(H_ + r * u);
      grip_.weight = 1.0 - static_cast<double>(k) / n;
      emit();
      if (k == 1) start = now();
    }
    grip_ = Grip{};
    if (sc_.skip_table_check) {
      ActionInstance rel;
      rel.id = releases_.size();
      rel.action = "release";
      rel.binding = {cls, std::nullopt, hand_, std::nullopt};
      rel.start = start;
      rel.end = now();
      releases_.push_back(rel);
    } else {
      const std::size_t id = push_label("Place", {cls, std::nullopt, hand_, std::nullopt}, start, now(), {});
      if (auto it = pending_pour_.find(cls); it != pending_pour_.end()) {
        const auto& pour = labels_[it->second];
        push_label("wateringPlant", pour.binding, pour.start, now(), {it->second, id});
      }
    }
    pending_pour_.erase(cls);
  }

  void touch(const std::string& cls) {
    if (held_) fail_step("the hand already holds '" + held_->cls + "'");
    Obj& ob = object(cls);
    const Point2 u = unit(H_ - ob.c);
    const Point2 outside = ob.c + (2 * th_d_) * u;
    move_to(outside, [](int, int) {});
    set_hand(ob.c + (th_d_ / 2) * u);
    emit();
    set_hand(outside);
    emit();
  }

  std::size_t push_label(const std::string& action, Binding b, std::uint64_t start, std::uint64_t end,
                         std::vector<std::size_t> children) {
    ActionInstance inst;
    inst.id = labels_.size();
    inst.action = action;
    inst.binding = std::move(b);
    inst.start = start;
    inst.end = end;
    inst.children = std::move(children);
    labels_.push_back(std::move(inst));
    return labels_.size() - 1;
  }

  const Scenario& sc_;
  Thresholds th_;
  double th_d_ = 0;
  double speed_ = 0;
  Hand hand_ = Hand::right;
  Point2 H_;
  std::vector<Obj> objs_;
  Obj* held_ = nullptr;
  Point2 grip_off_;
  Grip grip_;
  bool poured_ = false;
  std::size_t pick_id_ = 0;
  std::size_t step_ = 0;
  std::map<std::string, std::size_t> pending_pour_;
  std::vector<Frame> frames_;
  std::vector<Grip> grips_;
  std::vector<ActionInstance> labels_;
  std::vector<ActionInstance> releases_;
};

void apply_noise(Trace& trace, const std::vector<Grip>& grips, Hand hand, const NoiseModel& noise) {
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> jitter(0.0, noise.centroid_jitter_px > 0 ? noise.centroid_jitter_px : 1.0);
  std::bernoulli_distribution drop(noise.dropout_prob);
  const auto& only = noise.grip_offset_classes;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    Frame& f = trace.frames[i];
    const Grip& g = grips[i];
    if (noise.grip_offset_px > 0 && g.weight > 0 &&
        (only.empty() || std::find(only.begin(), only.end(), g.object) != only.end())) {
      if (auto& h = f.hands.get(hand)) {
        const Point2 moved = *h + (noise.grip_offset_px * g.weight) * g.dir;
        h = Point2{round3(moved.x), round3(moved.y)};
      }
    }
    std::vector<Detection> kept;
    for (auto& d : f.detections) {
      if (noise.centroid_jitter_px > 0) {
        const double dx = jitter(rng), dy = jitter(rng);
        d.bbox = {round3(d.bbox.x_t + dx), round3(d.bbox.y_t + dy), round3(d.bbox.x_b + dx), round3(d.bbox.y_b + dy)};
      }
      if (noise.dropout_prob > 0 && drop(rng)) continue;
      kept.push_back(std::move(d));
    }
    f.detections = std::move(kept);
  }
}

// ---- YAML ----

std::size_t line_of(const YAML::Node& n) { return static_cast<std::size_t>(n.Mark().line + 1); }
std::size_t column_of(const YAML::Node& n) { return static_cast<std::size_t>(n.Mark().column + 1); }

[[noreturn]] void bad(const YAML::Node& n, const std::string& what) { throw ParseError(what, line_of(n), column_of(n)); }

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    bad(n, what + " has the wrong type");
  }
}

std::vector<double> numbers(const YAML::Node& n, std::size_t count, const std::string& what) {
  if (!n.IsSequence() || n.size() != count) bad(n, what + " must be a list of " + std::to_string(count) + " numbers");
  std::vector<double> out;
  for (const auto& v : n) out.push_back(scalar<double>(v, what));
  return out;
}

BBox bbox_of(const YAML::Node& n, const std::string& what) {
  const auto v = numbers(n, 4, what);
  BBox b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) bad(n, what + " corners are inverted");
  return b;
}

Point2 point_of(const YAML::Node& n, const std::string& what) {
  const auto v = numbers(n, 2, what);
  return {v[0], v[1]};
}

void only_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      bad(kv.first, "unknown key '" + key + "' in " + where);
    }
  }
}

ScriptStep step_of(const YAML::Node& n) {
  if (!n.IsMap()) bad(n, "script steps must be maps such as {pick: cup}");
  ScriptStep st;
  if (n["pick"]) {
    only_keys(n, {"pick"}, "pick step");
    st.kind = StepKind::pick;
    st.object = scalar<std::string>(n["pick"], "pick");
  } else if (n["pour"]) {
    only_keys(n, {"pour", "into"}, "pour step");
    st.kind = StepKind::pour;
    st.object = scalar<std::string>(n["pour"], "pour");
    if (!n["into"]) bad(n, "pour step needs 'into'");
    st.target = scalar<std::string>(n["into"], "into");
  } else if (n["place"]) {
    only_keys(n, {"place", "at"}, "place step");
    st.kind = StepKind::place;
    st.object = scalar<std::string>(n["place"], "place");
    if (n["at"]) st.at = point_of(n["at"], "at");
  } else if (n["touch"]) {
    only_keys(n, {"touch"}, "touch step");
    st.kind = StepKind::touch;
    st.object = scalar<std::string>(n["touch"], "touch");
  } else if (n["idle"]) {
    only_keys(n, {"idle"}, "idle step");
    st.kind = StepKind::idle;
    st.frames = scalar<int>(n["idle"], "idle");
    if (st.frames < 0) bad(n["idle"], "idle needs a non-negative frame count");
  } else {
    bad(n, "unknown script step");
  }
  return st;
}

Scenario scenario_of(const YAML::Node& root) {
  if (!root.IsMap()) bad(root, "scenario must be a map");
  only_keys(root,
            {"name", "activity", "image_size", "table", "hand", "hand_start", "objects", "script", "skip_table_check",
             "speed", "frames", "perturb_px", "seed"},
            "scenario");
  Scenario sc;
  if (!root["name"]) bad(root, "scenario needs a name");
  sc.name = scalar<std::string>(root["name"], "name");
  if (root["activity"]) sc.activity = scalar<std::string>(root["activity"], "activity");
  if (root["image_size"]) {
    const auto v = numbers(root["image_size"], 2, "image_size");
    sc.image_size = {static_cast<int>(v[0]), static_cast<int>(v[1])};
    if (sc.image_size.width <= 0 || sc.image_size.height <= 0) bad(root["image_size"], "image_size must be positive");
  }
  if (root["table"]) sc.table = bbox_of(root["table"], "table");
  if (root["hand"]) sc.hand = scalar<std::string>(root["hand"], "hand");
  if (sc.hand != "left" && sc.hand != "right" && sc.hand != "random") {
    bad(root["hand"], "hand must be left, right or random");
  }
  if (root["hand_start"]) sc.hand_start = point_of(root["hand_start"], "hand_start");
  if (root["skip_table_check"]) sc.skip_table_check = scalar<bool>(root["skip_table_check"], "skip_table_check");
  if (root["speed"]) sc.speed = scalar<double>(root["speed"], "speed");
  if (root["frames"]) sc.frames = scalar<std::size_t>(root["frames"], "frames");
  if (root["perturb_px"]) sc.perturb_px = scalar<double>(root["perturb_px"], "perturb_px");
  if (root["seed"]) sc.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (!(sc.speed > 0)) bad(root["speed"], "speed must be positive");
  if (!(sc.perturb_px >= 0)) bad(root["perturb_px"], "perturb_px must be non-negative");

  std::set<std::string> names;
  if (const auto objs = root["objects"]) {
    if (!objs.IsSequence()) bad(objs, "objects must be a list");
    for (const auto& o : objs) {
      if (!o.IsMap()) bad(o, "objects entries must be maps");
      only_keys(o, {"class", "bbox"}, "object");
      if (!o["class"] || !o["bbox"]) bad(o, "objects need class and bbox");
      SceneObject so{scalar<std::string>(o["class"], "class"), bbox_of(o["bbox"], "bbox")};
      if (!names.insert(so.class_name).second) bad(o, "duplicate object '" + so.class_name + "'");
      sc.objects.push_back(std::move(so));
    }
  }
  if (const auto script = root["script"]) {
    if (!script.IsSequence()) bad(script, "script must be a list");
    for (const auto& s : script) {
      ScriptStep st = step_of(s);
      for (const auto* ref : {&st.object, &st.target}) {
        if (!ref->empty() && !names.contains(*ref)) bad(s, "step refers to unknown object '" + *ref + "'");
      }
      sc.script.push_back(std::move(st));
    }
  }
  return sc;
}

YAML::Node parse_yaml(std::istream& in) {
  try {
    return YAML::Load(in);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1), static_cast<std::size_t>(e.mark.column + 1));
  }
}

NoiseModel noise_of(const YAML::Node& n) {
  if (!n.IsMap()) bad(n, "noise entries must be maps");
  only_keys(n, {"centroid_jitter_px", "dropout_prob", "grip_offset_px", "grip_offset_classes", "seed"}, "noise");
  NoiseModel m;
  if (n["centroid_jitter_px"]) m.centroid_jitter_px = scalar<double>(n["centroid_jitter_px"], "centroid_jitter_px");
  if (n["dropout_prob"]) m.dropout_prob = scalar<double>(n["dropout_prob"], "dropout_prob");
  if (n["grip_offset_px"]) m.grip_offset_px = scalar<double>(n["grip_offset_px"], "grip_offset_px");
  if (const auto c = n["grip_offset_classes"]) {
    if (!c.IsSequence()) bad(c, "grip_offset_classes must be a list");
    for (const auto& v : c) m.grip_offset_classes.push_back(scalar<std::string>(v, "grip_offset_classes"));
  }
  if (n["seed"]) m.seed = scalar<std::uint64_t>(n["seed"], "seed");
  return m;
}

detail::ordered_json noise_json(const NoiseModel& m) {
  detail::ordered_json j;
  j["centroid_jitter_px"] = m.centroid_jitter_px;
  j["dropout_prob"] = m.dropout_prob;
  j["grip_offset_px"] = m.grip_offset_px;
  j["grip_offset_classes"] = m.grip_offset_classes;
  j["seed"] = m.seed;
  return j;
}

NoiseModel noise_from_json(const detail::ordered_json& j) {
  NoiseModel m;
  m.centroid_jitter_px = j.at("centroid_jitter_px").get<double>();
  m.dropout_prob = j.at("dropout_prob").get<double>();
  m.grip_offset_px = j.at("grip_offset_px").get<double>();
  m.grip_offset_classes = j.at("grip_offset_classes").get<std::vector<std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

void NoiseModel::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0; };
  if (!ok(centroid_jitter_px)) throw ValidationError("centroid_jitter_px must be finite and non-negative");
  if (!ok(grip_offset_px)) throw ValidationError("grip_offset_px must be finite and non-negative");
  if (!(dropout_prob >= 0 && dropout_prob <= 1)) throw ValidationError("dropout_prob must lie in [0, 1]");
}

Generated generate(const Scenario& scenario, const NoiseModel& noise, const Thresholds& thresholds) {
  noise.validate();
  Synth synth(scenario, thresholds);
  Generated g = synth.run();
  if (!noise.clean()) apply_noise(g.trace, synth.grips_out_, g.hand, noise);
  return g;
}

WorldState initial_world(const Scenario& scenario) {
  WorldState w;
  for (const auto& o : scenario.objects) w.objects[o.class_name] = {};
  for (const auto& st : scenario.script) {
    if (st.kind == StepKind::pour) {
      auto& c = w.objects[st.object].contains;
      if (c.empty()) c.push_back(st.object + "_contents");
    }
  }
  return w;
}

Goal goal_of(const Scenario& scenario) {
  Goal g;
  std::set<std::string> holding;
  for (const auto& st : scenario.script) {
    switch (st.kind) {
      case StepKind::pick:
        holding.insert(st.object);
        g.placed.erase(st.object);
        g.released.erase(st.object);
        break;
      case StepKind::pour:
        g.contains[st.target].insert(st.object + "_contents");
        break;
      case StepKind::place:
        holding.erase(st.object);
        (scenario.skip_table_check ? g.released : g.placed).insert(st.object);
        break;
      default:
        break;
    }
  }
  for (const auto& o : holding) g.released.insert(o);
  return g;
}

WorldState simulate_plan(const CommandPlan& plan, const Scenario& scenario) {
  return simulate_plan(plan, initial_world(scenario));
}

Scenario load_scenario(std::istream& in) { return scenario_of(parse_yaml(in)); }

Scenario load_scenario_string(const std::string& text) {
  std::istringstream in(text);
  return load_scenario(in);
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file '" + path + "'");
  return load_scenario(in);
}

std::string serialize_scenario(const Scenario& sc) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  auto flow = [&e](std::initializer_list<double> values) {
    e << YAML::Flow << YAML::BeginSeq;
    for (double v : values) e << v;
    e << YAML::EndSeq;
  };
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << sc.name;
  e << YAML::Key << "activity" << YAML::Value << sc.activity;
  e << YAML::Key << "image_size" << YAML::Value;
  flow({static_cast<double>(sc.image_size.width), static_cast<double>(sc.image_size.height)});
  e << YAML::Key << "table" << YAML::Value;
  flow({sc.table.x_t, sc.table.y_t, sc.table.x_b, sc.table.y_b});
  e << YAML::Key << "hand" << YAML::Value << sc.hand;
  if (sc.hand_start) {
    e << YAML::Key << "hand_start" << YAML::Value;
    flow({sc.hand_start->x, sc.hand_start->y});
  }
  e << YAML::Key << "skip_table_check" << YAML::Value << sc.skip_table_check;
  e << YAML::Key << "speed" << YAML::Value << sc.speed;
  e << YAML::Key << "frames" << YAML::Value << sc.frames;
  e << YAML::Key << "perturb_px" << YAML::Value << sc.perturb_px;
  e << YAML::Key << "seed" << YAML::Value << sc.seed;
  e << YAML::Key << "objects" << YAML::Value << YAML::BeginSeq;
  for (const auto& o : sc.objects) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "class" << YAML::Value << o.class_name;
    e << YAML::Key << "bbox" << YAML::Value;
    flow({o.bbox.x_t, o.bbox.y_t, o.bbox.x_b, o.bbox.y_b});
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "script" << YAML::Value << YAML::BeginSeq;
  for (const auto& st : sc.script) {
    e << YAML::Flow << YAML::BeginMap;
    switch (st.kind) {
      case StepKind::pick:
        e << YAML::Key << "pick" << YAML::Value << st.object;
        break;
      case StepKind::pour:
        e << YAML::Key << "pour" << YAML::Value << st.object << YAML::Key << "into" << YAML::Value << st.target;
        break;
      case StepKind::place:
        e << YAML::Key << "place" << YAML::Value << st.object;
        if (st.at) {
          e << YAML::Key << "at" << YAML::Value;
          flow({st.at->x, st.at->y});
        }
        break;
      case StepKind::touch:
        e << YAML::Key << "touch" << YAML::Value << st.object;
        break;
      case StepKind::idle:
        e << YAML::Key << "idle" << YAML::Value << st.frames;
        break;
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

Manifest plan_batch(const BatchSpec& spec) {
  if (spec.templates.empty()) throw InputError("a corpus needs at least one scenario template");
  if (spec.noise_grid.empty()) throw InputError("the noise grid is empty");
  spec.thresholds.validate();
  std::set<std::string> names;
  for (const auto& t : spec.templates) {
    if (!names.insert(t.name).second) throw ValidationError("duplicate template name '" + t.name + "'");
  }
  for (const auto& n : spec.noise_grid) n.validate();

  Manifest m;
  m.seed = spec.seed;
  m.count = spec.count;
  m.thresholds = spec.thresholds;
  m.templates = spec.templates;
  m.noise_grid = spec.noise_grid;
  std::mt19937_64 rng(spec.seed);
  for (std::size_t k = 0; k < spec.count; ++k) {
    const Scenario& t = spec.templates[k % spec.templates.size()];
    const std::uint64_t scenario_seed = rng();
    for (std::size_t g = 0; g < spec.noise_grid.size(); ++g) {
      ManifestEntry e;
      char dir[64];
      std::snprintf(dir, sizeof dir, "s%04zu_n%zu", k, g);
      e.dir = std::string(dir) + "_" + t.name;
      e.template_name = t.name;
      e.activity = t.activity;
      e.scenario_seed = scenario_seed;
      e.noise_index = g;
      e.noise = spec.noise_grid[g];
      e.noise.seed = rng();
      m.entries.push_back(std::move(e));
    }
  }
  return m;
}

void write_corpus(const Manifest& m, const std::string& out_dir) {
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error("cannot create '" + out_dir + "': " + ec.message());
  for (const auto& e : m.entries) {
    auto it = std::find_if(m.templates.begin(), m.templates.end(),
                           [&e](const Scenario& s) { return s.name == e.template_name; });
    if (it == m.templates.end()) throw InputError("manifest entry uses unknown template '" + e.template_name + "'");
    Scenario sc = *it;
    sc.seed = e.scenario_seed;
    const Generated g = generate(sc, e.noise, m.thresholds);
    const fs::path dir = root / e.dir;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create '" + dir.string() + "': " + ec.message());
    write_text(dir / "scenario.yaml", serialize_scenario(sc));
    write_text(dir / "trace.jsonl", serialize_trace(g.trace));
    write_text(dir / "labels.jsonl", serialize_timeline(g.labels));
    if (!g.releases.empty()) {
      Timeline rel{g.labels.source, g.labels.thresholds, g.releases};
      write_text(dir / "releases.jsonl", serialize_timeline(rel));
    }
  }
  write_text(root / "manifest.json", serialize_manifest(m));
}

Manifest batch(const BatchSpec& spec, const std::string& out_dir) {
  Manifest m = plan_batch(spec);
  write_corpus(m, out_dir);
  return m;
}

std::string serialize_manifest(const Manifest& m) {
  detail::ordered_json j;
  j["seed"] = m.seed;
  j["count"] = m.count;
  j["thresholds"] = detail::to_json(m.thresholds);
  j["templates"] = detail::ordered_json::array();
  for (const auto& t : m.templates) j["templates"].push_back(serialize_scenario(t));
  j["noise_grid"] = detail::ordered_json::array();
  for (const auto& n : m.noise_grid) j["noise_grid"].push_back(noise_json(n));
  j["entries"] = detail::ordered_json::array();
  for (const auto& e : m.entries) {
    detail::ordered_json x;
    x["dir"] = e.dir;
    x["template"] = e.template_name;
    x["activity"] = e.activity;
    x["scenario_seed"] = e.scenario_seed;
    x["noise_index"] = e.noise_index;
    x["noise"] = noise_json(e.noise);
    j["entries"].push_back(std::move(x));
  }
  return j.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& text) {
  try {
    const auto j = detail::ordered_json::parse(text);
    Manifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.count = j.at("count").get<std::size_t>();
    m.thresholds = detail::thresholds_from_json(j.at("thresholds"));
    for (const auto& t : j.at("templates")) m.templates.push_back(load_scenario_string(t.get<std::string>()));
    for (const auto& n : j.at("noise_grid")) m.noise_grid.push_back(noise_from_json(n));
    for (const auto& x : j.at("entries")) {
      ManifestEntry e;
      e.dir = x.at("dir").get<std::string>();
      e.template_name = x.at("template").get<std::string>();
      e.activity = x.at("activity").get<std::string>();
      e.scenario_seed = x.at("scenario_seed").get<std::uint64_t>();
      e.noise_index = x.at("noise_index").get<std::size_t>();
      e.noise = noise_from_json(x.at("noise"));
      if (e.dir.empty() || e.dir.find("..") != std::string::npos || e.dir.find('/') != std::string::npos) {
        throw InputError("manifest entry directory '" + e.dir + "' is not a plain name");
      }
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad manifest: ") + e.what(), 0);
  }
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

BatchSpec load_batch_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus spec '" + path + "'");
  const YAML::Node root = parse_yaml(in);
  if (!root.IsMap()) bad(root, "corpus spec must be a map");
  only_keys(root, {"count", "seed", "templates", "noise"}, "corpus spec");
  BatchSpec spec;
  if (!root["count"] || !root["templates"]) bad(root, "corpus spec needs count and templates");
  spec.count = scalar<std::size_t>(root["count"], "count");
  if (root["seed"]) spec.seed = scalar<std::uint64_t>(root["seed"], "seed");
  const fs::path base = fs::path(path).parent_path();
  const auto templates = root["templates"];
  if (!templates.IsSequence()) bad(templates, "templates must be a list of paths");
  for (const auto& t : templates) {
    spec.templates.push_back(load_scenario_file((base / scalar<std::string>(t, "template")).string()));
  }
  if (const auto noise = root["noise"]) {
    if (!noise.IsSequence()) bad(noise, "noise must be a list");
    spec.noise_grid.clear();
    for (const auto& n : noise) spec.noise_grid.push_back(noise_of(n));
  }
  return spec;
}

NoiseModel noise_from_yaml_string(const std::string& text) {
  std::istringstream in(text);
  return noise_of(parse_yaml(in));
}

}  // namespace actrec
