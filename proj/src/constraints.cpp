#include "actrec/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "actrec/error.hpp"

namespace actrec {

namespace {

Observation worst(Observation a, Observation b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

std::size_t hand_slot(Hand h) { return h == Hand::left ? 0 : 1; }

}  // namespace

std::string to_string(ConstraintId id) { return "C" + std::to_string(static_cast<int>(id)); }

std::optional<ConstraintId> constraint_from_string(std::string_view name) {
  if (name.size() < 2 || name.size() > 3 || name[0] != 'C') return std::nullopt;
  int n = 0;
  for (char c : name.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    n = n * 10 + (c - '0');
  }
  if (name[1] == '0' || n < 1 || n > 12) return std::nullopt;
  return static_cast<ConstraintId>(n);
}

bool is_static(ConstraintId id) { return static_cast<int>(id) <= 4; }

bool is_per_frame(ConstraintId id) {
  return !is_static(id) && id != ConstraintId::C7 && id != ConstraintId::C8;
}

const std::vector<OperandKind>& signature(ConstraintId id) {
  using K = OperandKind;
  static const std::array<std::vector<OperandKind>, 12> table{{
      {K::active},                  // C1
      {K::passive},                 // C2
      {K::active, K::affordance},   // C3
      {K::passive, K::affordance},  // C4
      {K::active, K::hand},         // C5
      {K::active, K::hand},         // C6
      {K::active, K::hand},         // C7
      {K::active, K::hand},         // C8
      {K::active, K::hand},         // C9
      {K::active},                  // C10
      {K::active},                  // C11
      {K::active, K::passive},      // C12
  }};
  return table[static_cast<std::size_t>(id) - 1];
}

void Thresholds::validate() const {
  if (th_d && !(*th_d > 0.0)) throw ValidationError("th_d must be positive");
  if (th_n < 1) throw ValidationError("th_n must be at least 1");
  if (!(sigma_pos > 0.0)) throw ValidationError("sigma_pos must be positive");
  if (!(eps_rot > 0.0)) throw ValidationError("eps_rot must be positive");
  if (eps_col && !(*eps_col > 0.0)) throw ValidationError("eps_col must be positive");
  if (k_miss < 0) throw ValidationError("k_miss must not be negative");
}

double Thresholds::distance_threshold(const ImageSize& image) const {
  return th_d ? *th_d : 0.05 * image.diagonal();
}

std::string describe(const Binding& b) {
  std::string out = "(";
  auto add = [&out](std::string_view key, std::string_view value) {
    if (out.size() > 1) out += ", ";
    out += std::string(key) + "=" + std::string(value);
  };
  if (b.active_object) add("active", *b.active_object);
  if (b.hand) add("hand", to_string(*b.hand));
  if (b.passive_object) add("passive", *b.passive_object);
  if (b.affordance) add("affordance", *b.affordance);
  return out + ")";
}

void check_arity(ConstraintId id, const Binding& b) {
  for (OperandKind k : signature(id)) {
    const bool present = (k == OperandKind::active && b.active_object) ||
                         (k == OperandKind::passive && b.passive_object) || (k == OperandKind::hand && b.hand) ||
                         (k == OperandKind::affordance && b.affordance);
    if (!present) throw std::invalid_argument(to_string(id) + " is missing an operand in binding " + describe(b));
  }
}

EvalContext::EvalContext(const Trace& trace, const SceneState& scene, const Ontology& ontology, Thresholds thresholds)
    : trace_(&trace), scene_(&scene), ontology_(&ontology), thresholds_(std::move(thresholds)) {
  thresholds_.validate();
  th_d_ = thresholds_.distance_threshold(trace.image_size);
  for (const auto& [cls, role] : scene.assignments) {
    objects_.emplace(cls, Track<BBox>{});
    if (role == Role::active) {
      for (Hand h : {Hand::left, Hand::right}) counters_[{cls, h}] = {};
    }
  }
}

template <typename T>
void EvalContext::step(Track<T>& track, const std::optional<T>& observed) {
  const std::size_t i = *position_;
  track.previous = track.current;
  if (observed) {
    track.last = observed;
    track.last_seen = i;
    track.current = {*observed, Observation::observed};
  } else if (track.last && i - track.last_seen <= static_cast<std::size_t>(thresholds_.k_miss)) {
    track.current = {*track.last, Observation::coasted};
  } else {
    track.current = {T{}, Observation::missing};
  }
}

void EvalContext::step_counter(Counter& c, const Evaluation& e) {
  if (e.status == Observation::observed) {
    c.dropouts = 0;
    c.run = e.value ? c.run + 1 : 0;
  } else if (++c.dropouts > thresholds_.k_miss) {
    c.run = 0;
  }
}

void EvalContext::advance(std::size_t position) {
  const std::size_t expected = position_ ? *position_ + 1 : 0;
  if (position != expected) {
    throw std::invalid_argument("EvalContext::advance: expected position " + std::to_string(expected) + ", got " +
                                std::to_string(position));
  }
  if (position >= trace_->frames.size()) throw std::out_of_range("EvalContext::advance: past end of trace");
  position_ = position;
  const Frame& f = trace_->frames[position];
  for (auto& [cls, track] : objects_) {
    const Detection* d = f.find(cls);
    step(track, d ? std::optional<BBox>(d->bbox) : std::nullopt);
  }
  for (Hand h : {Hand::left, Hand::right}) step(hands_[hand_slot(h)], f.hands.get(h));

  for (auto& [key, pair] : counters_) {
    Binding b;
    b.active_object = key.first;
    b.hand = key.second;
    step_counter(pair[0], distance_check(b, true));
    step_counter(pair[1], distance_check(b, false));
  }
}

const EvalContext::Sample<BBox>& EvalContext::object_sample(const std::string& cls, bool previous) const {
  auto it = objects_.find(cls);
  if (it == objects_.end()) throw UnknownClassError(cls, "object class not in the scene:");
  return previous ? it->second.previous : it->second.current;
}

const EvalContext::Sample<Point2>& EvalContext::hand_sample(Hand hand, bool previous) const {
  const auto& track = hands_[hand_slot(hand)];
  return previous ? track.previous : track.current;
}

Evaluation EvalContext::distance_check(const Binding& b, bool within) const {
  const auto& obj = object_sample(*b.active_object);
  const auto& hand = hand_sample(*b.hand);
  const Observation status = worst(obj.status, hand.status);
  if (status == Observation::missing) return {false, status};
  const double d = distance(centroid(obj.value), hand.value);
  return {within ? d < th_d_ : d > th_d_, status};
}

Evaluation EvalContext::evaluate(ConstraintId id, const Binding& b) const {
  check_arity(id, b);
  if (!position_) throw std::logic_error("EvalContext::evaluate before the first advance()");
  const std::size_t i = *position_;
  using C = ConstraintId;
  switch (id) {
    case C::C1:
      return {ontology_->g_m(*b.active_object), Observation::observed};
    case C::C2:
      return {!ontology_->g_m(*b.passive_object), Observation::observed};
    case C::C3:
      return {ontology_->g_a(*b.active_object, *b.affordance), Observation::observed};
    case C::C4:
      return {ontology_->g_a(*b.passive_object, *b.affordance), Observation::observed};
    case C::C5:
      return distance_check(b, true);
    case C::C6:
      return distance_check(b, false);
    case C::C7:
    case C::C8:
      return {counter(id == C::C7 ? C::C5 : C::C6, *b.active_object, *b.hand) >= thresholds_.th_n,
              Observation::observed};
    case C::C9: {
      if (i == 0) return {false, Observation::missing};
      const auto& o1 = object_sample(*b.active_object);
      const auto& o0 = object_sample(*b.active_object, true);
      const auto& h1 = hand_sample(*b.hand);
      const auto& h0 = hand_sample(*b.hand, true);
      const Observation status = worst(worst(o0.status, o1.status), worst(h0.status, h1.status));
      if (status == Observation::missing) return {false, status};
      const Point2 dp = centroid(o1.value) - centroid(o0.value);
      const Point2 dh = h1.value - h0.value;
      const double sigma = thresholds_.sigma_pos;
      const bool moving = norm(dp) > sigma && norm(dh) > sigma;
      const bool together =
          thresholds_.c9_mode == C9Mode::magnitude ? std::abs(norm(dp) - norm(dh)) <= sigma : norm(dp - dh) <= sigma;
      return {moving && together, status};
    }
    case C::C10: {
      const auto& now = object_sample(*b.active_object);
      Observation status = now.status;
      Point2 before;
      if (i == 0) {
        auto base = scene_->rotation_baseline.find(*b.active_object);
        if (base == scene_->rotation_baseline.end()) return {false, Observation::missing};
        before = base->second;
      } else {
        const auto& prev = object_sample(*b.active_object, true);
        status = worst(status, prev.status);
        before = local_changes(prev.value);
      }
      if (status == Observation::missing) return {false, status};
      return {std::abs(angle(local_changes(now.value)) - angle(before)) > thresholds_.eps_rot, status};
    }
    case C::C11: {
      const auto& obj = object_sample(*b.active_object);
      if (obj.status == Observation::missing) return {false, obj.status};
      const Point2 p = centroid(obj.value);
      const BBox& t = scene_->table;
      return {t.x_t < p.x && p.x < t.x_b && t.y_t < p.y && p.y < t.y_b, obj.status};
    }
    case C::C12: {
      const auto& a = object_sample(*b.active_object);
      const auto& p = object_sample(*b.passive_object);
      const Observation status = worst(a.status, p.status);
      if (status == Observation::missing) return {false, status};
      const Point2 pa = centroid(a.value);
      const Point2 pp = centroid(p.value);
      const double eps = thresholds_.eps_col ? *thresholds_.eps_col : 0.25 * p.value.width();
      return {std::abs(pa.x - pp.x) <= eps && pa.y < pp.y, status};
    }
  }
  throw std::logic_error("unhandled constraint id");
}

bool EvalContext::eval(ConstraintId id, const Binding& binding, std::size_t position) const {
  if (!position_ || position != *position_) {
    throw std::invalid_argument("EvalContext::eval: position " + std::to_string(position) + " is not current");
  }
  return evaluate(id, binding).value;
}

int EvalContext::counter(ConstraintId id, const std::string& object, Hand hand) const {
  if (id != ConstraintId::C5 && id != ConstraintId::C6) {
    throw std::invalid_argument("counters exist only for C5 and C6");
  }
  auto it = counters_.find({object, hand});
  if (it == counters_.end()) throw UnknownClassError(object, "not an active object in the scene:");
  return it->second[id == ConstraintId::C5 ? 0 : 1].run;
}

std::optional<Hand> EvalContext::bind_hand(const std::string& object) const {
  const auto& obj = object_sample(object);
  if (obj.status == Observation::missing) return std::nullopt;
  const Point2 c = centroid(obj.value);
  std::optional<Hand> best;
  double best_d = 0.0;
  for (Hand h : {Hand::right, Hand::left}) {
    const auto& s = hand_sample(h);
    if (s.status == Observation::missing) continue;
    const double d = distance(c, s.value);
    if (!best || d < best_d) {
      best = h;
      best_d = d;
    }
  }
  return best;
}

}  // namespace actrec
