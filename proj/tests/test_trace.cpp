#include "doctest.h"

#include <random>

#include "actrec/error.hpp"
#include "actrec/synthgen.hpp"
#include "actrec/trace.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace actrec;

namespace {

const char* kHeader = "{\"image_size\": [640, 480]}\n";

std::string three_frames() {
  return std::string(kHeader) +
         "{\"frame\": 0, \"t\": 0.0, \"hands\": {\"right\": [100, 100]}, \"objects\": "
         "[{\"class\": \"cup\", \"bbox\": [90, 90, 110, 120]}], \"table\": [0, 200, 640, 480]}\n"
         "{\"frame\": 1, \"t\": 0.033, \"hands\": {\"left\": [10, 20], \"right\": null}, \"objects\": []}\n"
         "{\"frame\": 4, \"objects\": [{\"class\": \"bowl\", \"bbox\": [1, 2, 3, 4], \"conf\": 0.5}]}\n";
}

}  // namespace

TEST_CASE("three valid lines parse in order") {
  const Trace t = parse_trace_string(three_frames());
  REQUIRE(t.size() == 3);
  CHECK(t.image_size == ImageSize{640, 480});
  CHECK(t.frames[0].index == 0);
  CHECK(t.frames[1].index == 1);
  CHECK(t.frames[2].index == 4);
  CHECK(t.frames[0].hands.right == Point2{100, 100});
  CHECK_FALSE(t.frames[0].hands.left.has_value());
  CHECK(t.frames[1].hands.left == Point2{10, 20});
  CHECK_FALSE(t.frames[1].hands.right.has_value());
  CHECK(t.frames[0].table == BBox{0, 200, 640, 480});
  CHECK_FALSE(t.frames[1].table.has_value());
  CHECK(t.frames[2].detections[0].confidence == doctest::Approx(0.5));
  CHECK(t.frames[0].detections[0].confidence == 1.0);
  CHECK_FALSE(t.frames[2].timestamp.has_value());
}

TEST_CASE("inverted box is reported at its line") {
  const std::string text = std::string(kHeader) + "{\"frame\": 0}\n" +
                           "{\"frame\": 1, \"objects\": [{\"class\": \"cup\", \"bbox\": [50, 0, 10, 10]}]}\n";
  try {
    parse_trace_string(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("malformed records") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_trace_string(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("{\"frame\": 0}\n") == 1);
  CHECK(line_of(std::string(kHeader) + "{\"frame\": 0}\n{not json\n") == 3);
  CHECK(line_of(std::string(kHeader) + "{\"frame\": 2}\n{\"frame\": 2}\n") == 3);
  CHECK(line_of(std::string(kHeader) + "{\"frame\": -1}\n") == 2);
  CHECK(line_of(std::string(kHeader) + "{\"frame\": 0, \"t\": 1.0}\n{\"frame\": 1, \"t\": 0.5}\n") == 3);
  CHECK(line_of(std::string(kHeader) + "{\"frame\": 0, \"hands\": {\"right\": [1]}}\n") == 2);
  CHECK(line_of(std::string(kHeader) + "{\"frame\": 0, \"objects\": [{\"bbox\": [0, 0, 1, 1]}]}\n") == 2);
}

TEST_CASE("empty stream gives an empty trace") {
  CHECK(parse_trace_string("").empty());
  CHECK(parse_trace_string("\n\n").empty());
}

TEST_CASE("header only serialization of an empty trace") {
  Trace t;
  t.image_size = {640, 480};
  const std::string text = serialize_trace(t);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(parse_trace_string(text) == t);
}

TEST_CASE("centroid and local changes") {
  CHECK(centroid(BBox{10, 20, 50, 100}) == Point2{30, 60});
  CHECK(centroid(BBox{5, 5, 5, 5}) == Point2{5, 5});
  CHECK(centroid(BBox{0, 0, 640, 480}) == Point2{320, 240});
  CHECK(local_changes(BBox{10, 20, 50, 100}) == Point2{40, 80});
  CHECK(local_changes(BBox{5, 5, 5, 5}) == Point2{0, 0});
  CHECK(local_changes(BBox{0, 0, 640, 480}) == Point2{640, 480});
}

TEST_CASE("centroid lies inside and local changes are non-negative") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1000, 1000), s(0, 300);
  for (int k = 0; k < 2000; ++k) {
    const double x = u(rng), y = u(rng);
    const BBox b{x, y, x + s(rng), y + s(rng)};
    const Point2 c = centroid(b);
    CHECK(c.x >= b.x_t);
    CHECK(c.x <= b.x_b);
    CHECK(c.y >= b.y_t);
    CHECK(c.y <= b.y_b);
    const Point2 v = local_changes(b);
    CHECK(v.x >= 0);
    CHECK(v.y >= 0);
  }
}

TEST_CASE("parse of serialize is identity on random traces") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    Trace t = oracle::random_trace(rng, 40);
    for (std::size_t i = 0; i < t.frames.size(); i += 3) t.frames[i].timestamp = static_cast<double>(i) / 30.0;
    CHECK(parse_trace_string(serialize_trace(t)) == t);
  }
}

TEST_CASE("fractional coordinates survive a round-trip") {
  Trace t;
  t.image_size = {640, 480};
  Frame f;
  f.index = 3;
  f.timestamp = 0.1;
  f.hands.right = Point2{0.1 + 0.2, 1.0 / 3.0};
  f.detections.push_back({"cup", BBox{1e-3, 2.5, 100.125, 333.3333333}, 0.875});
  t.frames.push_back(f);
  CHECK(parse_trace_string(serialize_trace(t)) == t);
}

TEST_CASE("600-frame generated trace re-serializes byte for byte") {
  const Scenario sc = support::scenario("cup_bowl");
  const Generated g = generate(sc);
  REQUIRE(g.trace.size() == 600);
  const std::string once = serialize_trace(g.trace);
  CHECK(serialize_trace(parse_trace_string(once)) == once);
}

TEST_CASE("file round-trip and missing file") {
  support::TempDir dir("trace");
  const Trace t = parse_trace_string(three_frames());
  save_trace_file(t, dir.str("t.jsonl"));
  CHECK(load_trace_file(dir.str("t.jsonl")) == t);
  CHECK_THROWS_AS(load_trace_file(dir.str("missing.jsonl")), InputError);
}

TEST_CASE("find picks the most confident detection, first on ties") {
  Frame f;
  f.detections = {{"cup", BBox{0, 0, 1, 1}, 0.5}, {"cup", BBox{1, 1, 2, 2}, 0.9}, {"cup", BBox{2, 2, 3, 3}, 0.9}};
  REQUIRE(f.find("cup") != nullptr);
  CHECK(f.find("cup")->bbox == BBox{1, 1, 2, 2});
  CHECK(f.find("bowl") == nullptr);
}

TEST_CASE("out of image detections are a lint warning only") {
  const std::string text =
      std::string(kHeader) + "{\"frame\": 0, \"objects\": [{\"class\": \"cup\", \"bbox\": [600, 400, 700, 500]}]}\n";
  const Trace t = parse_trace_string(text);
  CHECK_FALSE(lint_trace(t).empty());
  CHECK(lint_trace(parse_trace_string(three_frames())).empty());
}
