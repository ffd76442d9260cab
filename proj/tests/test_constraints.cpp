#include "doctest.h"

#include <chrono>
#include <random>

#include "actrec/constraints.hpp"
#include "actrec/error.hpp"
#include "actrec/scene.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace actrec;
using support::frame;

namespace {

const Ontology& kb() {
  static const Ontology o = load_ontology_string(oracle::kKitchenOntology);
  return o;
}

SceneState scene_of(const Trace& t) {
  SceneOptions opt;
  opt.init_window = 1;
  opt.lenient = true;
  return analyze_initial(t, kb(), opt);
}

Binding cup_right() { return Binding{"cup", "bowl", Hand::right, std::nullopt}; }

/// Values of `id` at every position of `t`.
std::vector<bool> series(const Trace& t, const Thresholds& th, ConstraintId id, Binding b = cup_right()) {
  const SceneState s = scene_of(t);
  EvalContext ctx(t, s, kb(), th);
  std::vector<bool> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ctx.advance(i);
    out.push_back(ctx.eval(id, b, i));
  }
  return out;
}

/// Hand at `offset` from a 20x20 cup centred on (100,100); bowl far away.
Frame contact(std::uint64_t index, std::optional<Point2> offset, bool cup_visible = true) {
  Frame f = frame(index, offset ? std::optional<Point2>(Point2{100 + offset->x, 100 + offset->y}) : std::nullopt,
                  {{"bowl", {400, 300, 500, 360}}});
  if (cup_visible) f.detections.push_back({"cup", {90, 90, 110, 110}, 1.0});
  return f;
}

Trace trace_of(std::vector<Frame> frames) {
  Trace t;
  t.image_size = {640, 480};
  t.frames = std::move(frames);
  return t;
}

Thresholds th10() {
  Thresholds th;
  th.th_d = 10;
  return th;
}

}  // namespace

TEST_CASE("C5 and C6 at and around th_d") {
  const Thresholds th = th10();
  CHECK(series(trace_of({contact(0, Point2{4, 3})}), th, ConstraintId::C5)[0]);
  CHECK_FALSE(series(trace_of({contact(0, Point2{4, 3})}), th, ConstraintId::C6)[0]);
  CHECK_FALSE(series(trace_of({contact(0, Point2{6, 8})}), th, ConstraintId::C5)[0]);
  CHECK_FALSE(series(trace_of({contact(0, Point2{6, 8})}), th, ConstraintId::C6)[0]);
  CHECK(series(trace_of({contact(0, Point2{6, 9})}), th, ConstraintId::C6)[0]);
}

TEST_CASE("C12 uses the image y convention") {
  Thresholds th;
  th.eps_col = 5;
  auto at = [&](Point2 a) -> bool {
    Frame f = frame(0, std::nullopt, {{"cup", box_around(a, 10, 10)}, {"bowl", box_around({50, 80}, 40, 20)}});
    return series(trace_of({f}), th, ConstraintId::C12)[0];
  };
  CHECK(at({50, 40}));
  CHECK_FALSE(at({50, 120}));
  CHECK(at({55, 40}));
  CHECK_FALSE(at({55.5, 40}));
}

TEST_CASE("C12 default column tolerance is a quarter of the passive width") {
  auto at = [&](double x) -> bool {
    Frame f = frame(0, std::nullopt, {{"cup", box_around({x, 40}, 10, 10)}, {"bowl", box_around({50, 80}, 40, 20)}});
    return series(trace_of({f}), Thresholds{}, ConstraintId::C12)[0];
  };
  CHECK(at(60));
  CHECK_FALSE(at(60.5));
}

TEST_CASE("C10 angle change") {
  Thresholds th;
  th.eps_rot = 0.1;
  const Trace t = trace_of({frame(0, std::nullopt, {{"cup", {0, 0, 40, 80}}}), frame(1, std::nullopt, {{"cup", {0, 0, 80, 40}}}),
                            frame(2, std::nullopt, {{"cup", {10, 10, 90, 50}}})});
  const auto v = series(t, th, ConstraintId::C10);
  CHECK_FALSE(v[0]);
  CHECK(v[1]);
  CHECK_FALSE(v[2]);
  CHECK(std::abs(std::atan2(40.0, 80.0) - std::atan2(80.0, 40.0)) == doctest::Approx(0.6435).epsilon(0.001));
}

TEST_CASE("C11 over the table region") {
  auto at = [](Point2 p) -> bool {
    Frame f = frame(0, std::nullopt, {{"cup", box_around(p, 10, 10)}});
    return series(trace_of({f}), Thresholds{}, ConstraintId::C11)[0];
  };
  CHECK(at({300, 300}));
  CHECK_FALSE(at({300, 100}));
}

TEST_CASE("static constraints read the ontology") {
  const Trace t = trace_of({contact(0, Point2{0, 0})});
  const SceneState s = scene_of(t);
  EvalContext ctx(t, s, kb(), Thresholds{});
  ctx.advance(0);
  CHECK(ctx.eval(ConstraintId::C1, Binding{"cup", {}, {}, {}}, 0));
  CHECK_FALSE(ctx.eval(ConstraintId::C1, Binding{"bowl", {}, {}, {}}, 0));
  CHECK(ctx.eval(ConstraintId::C2, Binding{{}, "bowl", {}, {}}, 0));
  CHECK(ctx.eval(ConstraintId::C3, Binding{"cup", {}, {}, "pour"}, 0));
  CHECK_FALSE(ctx.eval(ConstraintId::C3, Binding{"mug", {}, {}, "pour"}, 0));
  CHECK(ctx.eval(ConstraintId::C4, Binding{{}, "bowl", {}, "accept_pouring"}, 0));
  CHECK(is_static(ConstraintId::C4));
  CHECK_FALSE(is_static(ConstraintId::C5));
}

TEST_CASE("C7 after five contact frames") {
  Thresholds th = th10();
  th.th_n = 5;
  std::vector<Frame> fs;
  for (std::uint64_t i = 0; i < 6; ++i) fs.push_back(contact(i, Point2{1, 1}));
  CHECK(series(trace_of(fs), th, ConstraintId::C7) == std::vector<bool>{false, false, false, false, true, true});
}

TEST_CASE("C7 resets on a false frame") {
  Thresholds th = th10();
  th.th_n = 4;
  th.k_miss = 0;
  const Trace t = trace_of({contact(0, Point2{1, 1}), contact(1, Point2{1, 1}), contact(2, Point2{50, 50}),
                            contact(3, Point2{1, 1}), contact(4, Point2{1, 1})});
  CHECK(series(t, th, ConstraintId::C7) == std::vector<bool>(5, false));
}

TEST_CASE("C7 coasts over a short dropout") {
  Thresholds th = th10();
  th.th_n = 4;
  th.k_miss = 1;
  const Trace t = trace_of({contact(0, Point2{1, 1}), contact(1, Point2{1, 1}), contact(2, Point2{1, 1}, false),
                            contact(3, Point2{1, 1}), contact(4, Point2{1, 1})});
  const auto v = series(t, th, ConstraintId::C7);
  CHECK(v.back());
  CHECK_FALSE(v[3]);
}

TEST_CASE("a dropout longer than k_miss resets the run") {
  Thresholds th = th10();
  th.th_n = 4;
  th.k_miss = 1;
  const Trace t = trace_of({contact(0, Point2{1, 1}), contact(1, Point2{1, 1}), contact(2, Point2{1, 1}, false),
                            contact(3, Point2{1, 1}, false), contact(4, Point2{1, 1}), contact(5, Point2{1, 1})});
  CHECK(series(t, th, ConstraintId::C7) == std::vector<bool>(6, false));
}

TEST_CASE("missing operands make a constraint false") {
  Thresholds th = th10();
  th.k_miss = 0;
  const Trace t = trace_of({contact(0, Point2{1, 1}), contact(1, std::nullopt), contact(2, Point2{1, 1}, false)});
  const auto c5 = series(t, th, ConstraintId::C5);
  const auto c6 = series(t, th, ConstraintId::C6);
  CHECK(c5 == std::vector<bool>{true, false, false});
  CHECK(c6 == std::vector<bool>{false, false, false});
}

TEST_CASE("coasted operands reuse the last observation") {
  Thresholds th = th10();
  th.k_miss = 2;
  const Trace t = trace_of({contact(0, Point2{1, 1}), contact(1, std::nullopt), contact(2, std::nullopt),
                            contact(3, std::nullopt)});
  const SceneState s = scene_of(t);
  EvalContext ctx(t, s, kb(), th);
  std::vector<Observation> status;
  std::vector<bool> value;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ctx.advance(i);
    const Evaluation e = ctx.evaluate(ConstraintId::C5, cup_right());
    status.push_back(e.status);
    value.push_back(e.value);
  }
  CHECK(status == std::vector<Observation>{Observation::observed, Observation::coasted, Observation::coasted,
                                           Observation::missing});
  CHECK(value == std::vector<bool>{true, true, true, false});
}

TEST_CASE("C9 needs matched movement above sigma") {
  Thresholds th = th10();
  th.sigma_pos = 3;
  auto pair = [&](Point2 dcup, Point2 dhand, C9Mode mode) {
    th.c9_mode = mode;
    Frame a = frame(0, Point2{100, 100}, {{"cup", {90, 90, 110, 110}}});
    Frame b = frame(1, Point2{100 + dhand.x, 100 + dhand.y},
                    {{"cup", {90 + dcup.x, 90 + dcup.y, 110 + dcup.x, 110 + dcup.y}}});
    return series(trace_of({a, b}), th, ConstraintId::C9, Binding{"cup", {}, Hand::right, {}});
  };
  CHECK(pair({10, 0}, {10, 0}, C9Mode::magnitude) == std::vector<bool>{false, true});
  CHECK(pair({2, 0}, {2, 0}, C9Mode::magnitude)[1] == false);
  CHECK(pair({10, 0}, {0, 10}, C9Mode::magnitude)[1] == true);
  CHECK(pair({10, 0}, {0, 10}, C9Mode::vector)[1] == false);
  CHECK(pair({10, 0}, {14, 0}, C9Mode::magnitude)[1] == false);
  CHECK(pair({10, 0}, {12, 1}, C9Mode::vector)[1] == true);
}

TEST_CASE("bind_hand") {
  auto bound = [](std::optional<Point2> right, std::optional<Point2> left) {
    const Trace t = trace_of({frame(0, right, {{"cup", {90, 90, 110, 110}}}, left)});
    const SceneState s = scene_of(t);
    EvalContext ctx(t, s, kb(), Thresholds{});
    ctx.advance(0);
    return ctx.bind_hand("cup");
  };
  CHECK(bound(Point2{105, 100}, Point2{180, 100}) == Hand::right);
  CHECK(bound(Point2{180, 100}, Point2{105, 100}) == Hand::left);
  CHECK(bound(std::nullopt, Point2{300, 300}) == Hand::left);
  CHECK(bound(Point2{110, 100}, Point2{90, 100}) == Hand::right);
  CHECK_FALSE(bound(std::nullopt, std::nullopt).has_value());
}

TEST_CASE("arity is checked") {
  CHECK_THROWS_AS(check_arity(ConstraintId::C12, Binding{"cup", {}, {}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(check_arity(ConstraintId::C5, Binding{"cup", {}, {}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(check_arity(ConstraintId::C3, Binding{"cup", {}, {}, {}}), std::invalid_argument);
  CHECK_NOTHROW(check_arity(ConstraintId::C5, Binding{"cup", {}, Hand::left, {}}));
  CHECK(signature(ConstraintId::C12) == std::vector<OperandKind>{OperandKind::active, OperandKind::passive});
}

TEST_CASE("advance must go forward one step at a time") {
  const Trace t = trace_of({contact(0, Point2{1, 1}), contact(1, Point2{1, 1}), contact(2, Point2{1, 1})});
  const SceneState s = scene_of(t);
  EvalContext ctx(t, s, kb(), Thresholds{});
  CHECK_THROWS(ctx.advance(1));
  ctx.advance(0);
  CHECK_THROWS(ctx.advance(2));
  ctx.advance(1);
  CHECK(ctx.position() == 1u);
  CHECK_THROWS(ctx.eval(ConstraintId::C5, cup_right(), 0));
}

TEST_CASE("threshold validation") {
  Thresholds th;
  CHECK_NOTHROW(th.validate());
  th.th_n = 0;
  CHECK_THROWS_AS(th.validate(), ValidationError);
  th = Thresholds{};
  th.th_d = -1;
  CHECK_THROWS_AS(th.validate(), ValidationError);
  th = Thresholds{};
  th.k_miss = 0;
  CHECK_NOTHROW(th.validate());
  th.k_miss = -1;
  CHECK_THROWS_AS(th.validate(), ValidationError);
  CHECK(Thresholds{}.distance_threshold({640, 480}) == doctest::Approx(40));
}

TEST_CASE("random traces agree with the brute-force oracle") {
  std::mt19937_64 rng(2024);
  oracle::Comparison cmp;
  SceneOptions opt;
  opt.init_window = 3;
  opt.lenient = true;
  for (int k = 0; k < 20; ++k) {
    const Trace t = oracle::random_trace(rng, 50);
    const Thresholds th = oracle::random_thresholds(rng);
    const SceneState s = analyze_initial(t, kb(), opt);
    oracle::compare(t, s, kb(), th, cmp);
  }
  CHECK(cmp.frames == 1000);
  CHECK_MESSAGE(cmp.mismatches == 0, cmp.first_mismatch);
}

TEST_CASE("C5 and C6 never hold together and C7 holds until its run breaks") {
  std::mt19937_64 rng(99);
  SceneOptions opt;
  opt.init_window = 3;
  opt.lenient = true;
  for (int k = 0; k < 10; ++k) {
    const Trace t = oracle::random_trace(rng, 60);
    const Thresholds th = oracle::random_thresholds(rng);
    const SceneState s = analyze_initial(t, kb(), opt);
    EvalContext ctx(t, s, kb(), th);
    for (Hand h : {Hand::left, Hand::right}) {
      EvalContext c(t, s, kb(), th);
      bool c7_prev = false;
      for (std::size_t i = 0; i < t.size(); ++i) {
        c.advance(i);
        const Binding b{"cup", {}, h, {}};
        const Evaluation e5 = c.evaluate(ConstraintId::C5, b);
        const bool c6 = c.eval(ConstraintId::C6, b, i);
        const bool c7 = c.eval(ConstraintId::C7, b, i);
        CHECK_FALSE((e5.value && c6));
        if (c7_prev && e5.value && e5.status == Observation::observed) CHECK(c7);
        c7_prev = c7;
      }
    }
  }
}

namespace {

Trace transform(const Trace& t, double scale, Point2 shift) {
  Trace out = t;
  auto p = [&](Point2 q) { return Point2{q.x * scale + shift.x, q.y * scale + shift.y}; };
  auto b = [&](BBox x) {
    const Point2 tl = p(x.top_left()), br = p(x.bottom_right());
    return BBox{tl.x, tl.y, br.x, br.y};
  };
  out.image_size = {static_cast<int>(t.image_size.width * scale), static_cast<int>(t.image_size.height * scale)};
  for (auto& f : out.frames) {
    if (f.hands.left) f.hands.left = p(*f.hands.left);
    if (f.hands.right) f.hands.right = p(*f.hands.right);
    if (f.table) f.table = b(*f.table);
    for (auto& d : f.detections) d.bbox = b(d.bbox);
  }
  return out;
}

std::vector<bool> stream(const Trace& t, const Thresholds& th) {
  SceneOptions opt;
  opt.init_window = 3;
  opt.lenient = true;
  const SceneState s = analyze_initial(t, kb(), opt);
  EvalContext ctx(t, s, kb(), th);
  std::vector<bool> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    ctx.advance(i);
    for (Hand h : {Hand::left, Hand::right}) {
      for (const char* a : {"cup", "mug"}) {
        for (const char* p : {"bowl", "plant"}) {
          for (int k = 5; k <= 12; ++k) out.push_back(ctx.eval(static_cast<ConstraintId>(k), Binding{a, p, h, {}}, i));
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("whole-trace translation and scaling preserve every value") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const Trace t = oracle::random_trace(rng, 40);
    Thresholds th = oracle::random_thresholds(rng);
    th.th_d = 30;
    const auto base = stream(t, th);
    CHECK(stream(transform(t, 1.0, {37, -21}), th) == base);
    Thresholds scaled = th;
    scaled.th_d = *th.th_d * 2;
    scaled.sigma_pos = th.sigma_pos * 2;
    if (th.eps_col) scaled.eps_col = *th.eps_col * 2;
    CHECK(stream(transform(t, 2.0, {0, 0}), scaled) == base);
    CHECK(stream(t, th) == base);
  }
}

TEST_CASE("oracle comparison over 1000 frames is fast") {
  std::mt19937_64 rng(1);
  SceneOptions opt;
  opt.init_window = 3;
  opt.lenient = true;
  const auto t0 = std::chrono::steady_clock::now();
  oracle::Comparison cmp;
  for (int k = 0; k < 10; ++k) {
    const Trace t = oracle::random_trace(rng, 100);
    const Thresholds th = oracle::random_thresholds(rng);
    oracle::compare(t, analyze_initial(t, kb(), opt), kb(), th, cmp);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(cmp.mismatches == 0);
  CHECK(secs < 5.0);
}
