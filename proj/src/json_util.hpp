#pragma once

// Shared JSON helpers for the line-delimited file formats.

#include <json.hpp>
#include <string>

#include "actrec/constraints.hpp"
#include "actrec/error.hpp"

namespace actrec::detail {

using nlohmann::ordered_json;

inline ordered_json to_json(const Thresholds& t) {
  ordered_json j;
  j["th_d"] = t.th_d ? ordered_json(*t.th_d) : ordered_json(nullptr);
  j["th_n"] = t.th_n;
  j["sigma_pos"] = t.sigma_pos;
  j["eps_rot"] = t.eps_rot;
  j["eps_col"] = t.eps_col ? ordered_json(*t.eps_col) : ordered_json(nullptr);
  j["k_miss"] = t.k_miss;
  j["c9_mode"] = t.c9_mode == C9Mode::magnitude ? "magnitude" : "vector";
  return j;
}

inline Thresholds thresholds_from_json(const ordered_json& j) {
  if (!j.is_object()) throw InputError("thresholds must be an object");
  Thresholds t;
  auto opt = [&j](const char* key) -> std::optional<double> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
  };
  t.th_d = opt("th_d");
  t.eps_col = opt("eps_col");
  if (j.contains("th_n")) t.th_n = j.at("th_n").get<int>();
  if (j.contains("sigma_pos")) t.sigma_pos = j.at("sigma_pos").get<double>();
  if (j.contains("eps_rot")) t.eps_rot = j.at("eps_rot").get<double>();
  if (j.contains("k_miss")) t.k_miss = j.at("k_miss").get<int>();
  if (j.contains("c9_mode")) {
    const auto mode = j.at("c9_mode").get<std::string>();
    if (mode == "magnitude") {
      t.c9_mode = C9Mode::magnitude;
    } else if (mode == "vector") {
      t.c9_mode = C9Mode::vector;
    } else {
      throw InputError("unknown c9_mode '" + mode + "'");
    }
  }
  return t;
}

inline ordered_json to_json(const Binding& b) {
  ordered_json j = ordered_json::object();
  if (b.active_object) j["active"] = *b.active_object;
  if (b.hand) j["hand"] = std::string(to_string(*b.hand));
  if (b.passive_object) j["passive"] = *b.passive_object;
  return j;
}

inline Binding binding_from_json(const ordered_json& j) {
  if (!j.is_object()) throw InputError("bindings must be an object");
  Binding b;
  for (const auto& [key, value] : j.items()) {
    if (key == "active") {
      b.active_object = value.get<std::string>();
    } else if (key == "passive") {
      b.passive_object = value.get<std::string>();
    } else if (key == "hand") {
      const auto h = hand_from_string(value.get<std::string>());
      if (!h) throw InputError("hand must be 'left' or 'right'");
      b.hand = *h;
    } else {
      throw InputError("unknown binding role '" + key + "'");
    }
  }
  return b;
}

}  // namespace actrec::detail
