#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "actrec/geometry.hpp"

namespace actrec {

enum class Hand { left, right };

std::string_view to_string(Hand hand);
std::optional<Hand> hand_from_string(std::string_view name);

struct Detection {
  std::string class_name;
  BBox bbox;
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Wrist positions; either may be missing on a frame (occlusion).
struct HandSet {
  std::optional<Point2> left;
  std::optional<Point2> right;

  const std::optional<Point2>& get(Hand hand) const { return hand == Hand::left ? left : right; }
  std::optional<Point2>& get(Hand hand) { return hand == Hand::left ? left : right; }

  friend bool operator==(const HandSet&, const HandSet&) = default;
};

/// One synchronized observation.
struct Frame {
  std::uint64_t index = 0;
  std::optional<double> timestamp;
  HandSet hands;
  std::vector<Detection> detections;
  std::optional<BBox> table;

  /// Highest-confidence detection of `class_name`; the first one wins ties.
  const Detection* find(std::string_view class_name) const;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;

  double diagonal() const;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct Trace {
  ImageSize image_size;
  std::vector<Frame> frames;

  bool empty() const { return frames.empty(); }
  std::size_t size() const { return frames.size(); }

  friend bool operator==(const Trace&, const Trace&) = default;
};

/// Line-delimited JSON: one header line with `image_size`, then one record
/// per frame. An empty stream yields an empty trace.
///
/// Throws ParseError carrying the 1-based line number.
Trace parse_trace(std::istream& source);
Trace parse_trace_string(const std::string& text);
Trace load_trace_file(const std::string& path);

void serialize_trace(const Trace& trace, std::ostream& out);
std::string serialize_trace(const Trace& trace);
void save_trace_file(const Trace& trace, const std::string& path);

/// Non-fatal findings, such as detections that leave the image.
std::vector<std::string> lint_trace(const Trace& trace);

}  // namespace actrec
