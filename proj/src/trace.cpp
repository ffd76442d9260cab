#include "actrec/trace.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "actrec/error.hpp"

namespace actrec {

using nlohmann::ordered_json;

std::string_view to_string(Hand hand) { return hand == Hand::left ? "left" : "right"; }

std::optional<Hand> hand_from_string(std::string_view name) {
  if (name == "left") return Hand::left;
  if (name == "right") return Hand::right;
  return std::nullopt;
}

const Detection* Frame::find(std::string_view class_name) const {
  const Detection* best = nullptr;
  for (const auto& d : detections) {
    if (d.class_name == class_name && (best == nullptr || d.confidence > best->confidence)) best = &d;
  }
  return best;
}

double ImageSize::diagonal() const { return std::hypot(static_cast<double>(width), static_cast<double>(height)); }

namespace {

struct LineReader {
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line); }

  double number(const ordered_json& j, std::string_view what) const {
    if (!j.is_number()) fail(std::string(what) + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(std::string(what) + " must be finite");
    return v;
  }

  Point2 point(const ordered_json& j, std::string_view what) const {
    if (!j.is_array() || j.size() != 2) fail(std::string(what) + " must be [x, y]");
    return {number(j[0], what), number(j[1], what)};
  }

  BBox bbox(const ordered_json& j, std::string_view what) const {
    if (!j.is_array() || j.size() != 4) fail(std::string(what) + " must be [x_t, y_t, x_b, y_b]");
    BBox b{number(j[0], what), number(j[1], what), number(j[2], what), number(j[3], what)};
    if (b.x_t > b.x_b || b.y_t > b.y_b) fail(std::string(what) + " has top-left corner past bottom-right corner");
    return b;
  }

  Frame frame(const ordered_json& j) const {
    if (!j.is_object()) fail("frame record must be a JSON object");
    Frame f;
    const auto idx = j.find("frame");
    if (idx == j.end() || !idx->is_number_integer() || idx->get<std::int64_t>() < 0) {
      fail("'frame' must be a non-negative integer");
    }
    f.index = idx->get<std::uint64_t>();
    if (auto t = j.find("t"); t != j.end() && !t->is_null()) f.timestamp = number(*t, "'t'");
    if (auto hands = j.find("hands"); hands != j.end() && !hands->is_null()) {
      if (!hands->is_object()) fail("'hands' must be an object");
      if (auto l = hands->find("left"); l != hands->end() && !l->is_null()) f.hands.left = point(*l, "hands.left");
      if (auto r = hands->find("right"); r != hands->end() && !r->is_null()) f.hands.right = point(*r, "hands.right");
    }
    if (auto objects = j.find("objects"); objects != j.end() && !objects->is_null()) {
      if (!objects->is_array()) fail("'objects' must be a list");
      for (const auto& o : *objects) {
        if (!o.is_object()) fail("object entry must be a JSON object");
        Detection d;
        auto cls = o.find("class");
        if (cls == o.end() || !cls->is_string() || cls->get<std::string>().empty()) {
          fail("object entry needs a non-empty 'class'");
        }
        d.class_name = cls->get<std::string>();
        auto box = o.find("bbox");
        if (box == o.end()) fail("object entry needs 'bbox'");
        d.bbox = bbox(*box, "bbox");
        if (auto conf = o.find("conf"); conf != o.end()) {
          d.confidence = number(*conf, "'conf'");
          if (d.confidence < 0.0 || d.confidence > 1.0) fail("'conf' must lie in [0, 1]");
        }
        f.detections.push_back(std::move(d));
      }
    }
    if (auto table = j.find("table"); table != j.end() && !table->is_null()) f.table = bbox(*table, "table");
    return f;
  }
};

ordered_json point_json(Point2 p) { return ordered_json::array({p.x, p.y}); }

ordered_json bbox_json(const BBox& b) { return ordered_json::array({b.x_t, b.y_t, b.x_b, b.y_b}); }

void require_finite(double v) {
  if (!std::isfinite(v)) throw ValidationError("refusing to serialize a non-finite coordinate");
}

void require_finite(const BBox& b) {
  require_finite(b.x_t);
  require_finite(b.y_t);
  require_finite(b.x_b);
  require_finite(b.y_b);
}

}  // namespace

Trace parse_trace(std::istream& source) {
  Trace trace;
  bool have_header = false;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(source, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const LineReader reader{line_no};
    ordered_json j;
    try {
      j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON record: ") + e.what(), line_no, e.byte);
    }
    if (!have_header) {
      auto size = j.is_object() ? j.find("image_size") : j.end();
      if (size == j.end()) reader.fail("first record must be the header carrying 'image_size'");
      if (!size->is_array() || size->size() != 2 || !(*size)[0].is_number_integer() ||
          !(*size)[1].is_number_integer() || (*size)[0].get<int>() <= 0 || (*size)[1].get<int>() <= 0) {
        reader.fail("'image_size' must be [width, height] in positive integer pixels");
      }
      trace.image_size = {(*size)[0].get<int>(), (*size)[1].get<int>()};
      have_header = true;
      continue;
    }
    Frame f = reader.frame(j);
    if (!trace.frames.empty()) {
      const Frame& prev = trace.frames.back();
      if (f.index <= prev.index) reader.fail("frame index " + std::to_string(f.index) + " is not increasing");
      if (f.timestamp && prev.timestamp && *f.timestamp < *prev.timestamp) reader.fail("timestamp decreases");
    }
    trace.frames.push_back(std::move(f));
  }
  return trace;
}

Trace parse_trace_string(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

Trace load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace file '" + path + "'");
  try {
    return parse_trace(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void serialize_trace(const Trace& trace, std::ostream& out) {
  ordered_json header;
  header["image_size"] = {trace.image_size.width, trace.image_size.height};
  out << header.dump() << '\n';
  for (const auto& f : trace.frames) {
    ordered_json j;
    j["frame"] = f.index;
    if (f.timestamp) {
      require_finite(*f.timestamp);
      j["t"] = *f.timestamp;
    }
    ordered_json hands = ordered_json::object();
    for (Hand h : {Hand::left, Hand::right}) {
      if (const auto& p = f.hands.get(h)) {
        require_finite(p->x);
        require_finite(p->y);
        hands[std::string(to_string(h))] = point_json(*p);
      }
    }
    j["hands"] = std::move(hands);
    ordered_json objects = ordered_json::array();
    for (const auto& d : f.detections) {
      require_finite(d.bbox);
      ordered_json o;
      o["class"] = d.class_name;
      o["bbox"] = bbox_json(d.bbox);
      if (d.confidence != 1.0) o["conf"] = d.confidence;
      objects.push_back(std::move(o));
    }
    j["objects"] = std::move(objects);
    if (f.table) {
      require_finite(*f.table);
      j["table"] = bbox_json(*f.table);
    }
    out << j.dump() << '\n';
  }
}

std::string serialize_trace(const Trace& trace) {
  std::ostringstream out;
  serialize_trace(trace, out);
  return out.str();
}

void save_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace file '" + path + "'");
  serialize_trace(trace, out);
}

std::vector<std::string> lint_trace(const Trace& trace) {
  std::vector<std::string> warnings;
  const double w = trace.image_size.width;
  const double h = trace.image_size.height;
  for (const auto& f : trace.frames) {
    for (const auto& d : f.detections) {
      if (d.bbox.x_t < 0 || d.bbox.y_t < 0 || d.bbox.x_b > w || d.bbox.y_b > h) {
        warnings.push_back("frame " + std::to_string(f.index) + ": '" + d.class_name + "' box leaves the image");
      }
    }
  }
  return warnings;
}

}  // namespace actrec
