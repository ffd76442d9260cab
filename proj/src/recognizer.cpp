#include "actrec/recognizer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "actrec/error.hpp"
#include "json_util.hpp"

namespace actrec {

namespace {

enum class Tri { yes, no, dropout };

Binding with_affordance(const Binding& b, const ConstraintTerm& t) {
  Binding out = b;
  out.affordance = t.affordance;
  return out;
}

/// Restricts `b` to the role kinds `def` declares.
Binding project(const Binding& b, const ActionDefinition& def) {
  Binding out;
  if (def.role_of_kind(RoleKind::active)) out.active_object = b.active_object;
  if (def.role_of_kind(RoleKind::passive)) out.passive_object = b.passive_object;
  if (def.role_of_kind(RoleKind::hand)) out.hand = b.hand;
  return out;
}

bool static_holds(const ConstraintTerm& t, const Binding& b, const Ontology& ontology) {
  switch (t.id) {
    case ConstraintId::C1:
      return ontology.g_m(*b.active_object);
    case ConstraintId::C2:
      return !ontology.g_m(*b.passive_object);
    case ConstraintId::C3:
      return ontology.g_a(*b.active_object, *t.affordance);
    case ConstraintId::C4:
      return ontology.g_a(*b.passive_object, *t.affordance);
    default:
      return false;
  }
}

std::vector<Binding> candidate_bindings(const ActionDefinition& def, const SceneState& scene,
                                        const Ontology& ontology) {
  std::vector<std::optional<std::string>> actives{std::nullopt}, passives{std::nullopt};
  std::vector<std::optional<Hand>> hands{std::nullopt};
  if (def.role_of_kind(RoleKind::active)) {
    actives.clear();
    for (const auto& [cls, role] : scene.assignments) {
      if (role == Role::active) actives.emplace_back(cls);
    }
  }
  if (def.role_of_kind(RoleKind::passive)) {
    passives.clear();
    for (const auto& [cls, role] : scene.assignments) {
      if (role == Role::passive) passives.emplace_back(cls);
    }
  }
  if (def.role_of_kind(RoleKind::hand)) hands = {Hand::left, Hand::right};

  std::vector<Binding> out;
  for (const auto& a : actives) {
    for (const auto& p : passives) {
      for (const auto& h : hands) {
        Binding b{a, p, h, std::nullopt};
        const bool ok = std::all_of(def.static_constraints.begin(), def.static_constraints.end(),
                                    [&](const ConstraintTerm& t) { return static_holds(t, b, ontology); });
        if (ok) out.push_back(std::move(b));
      }
    }
  }
  return out;
}

Tri conjunction(const EvalContext& ctx, const Phase& phase, const Binding& b) {
  bool dropout = false;
  for (const auto& term : phase.terms) {
    const Evaluation e = ctx.evaluate(term.id, with_affordance(b, term));
    const bool value = term.negated ? !e.value : e.value;
    if (e.status == Observation::observed) {
      if (!value) return Tri::no;
    } else {
      dropout = true;
    }
  }
  return dropout ? Tri::dropout : Tri::yes;
}

struct Machine {
  Binding binding;
  std::size_t phase = 0;
  int run = 0;
  int dropouts = 0;
  int wait_dropouts = 0;
  std::size_t start_pos = 0;
  std::vector<std::size_t> children;
  bool latched = false;
  int latch_false = 0;
  std::optional<std::uint64_t> last_end;

  void reset() {
    phase = 0;
    run = 0;
    dropouts = 0;
    wait_dropouts = 0;
    children.clear();
  }
};

class Matcher {
 public:
  Matcher(const Trace& trace, const SceneState& scene, const Ontology& ontology, const Thresholds& thresholds,
          const std::vector<ActionDefinition>& defs)
      : trace_(trace), scene_(scene), ontology_(ontology), thresholds_(thresholds), defs_(defs) {
    for (std::size_t k = 0; k < defs.size(); ++k) by_name_[defs[k].name] = k;
  }

  std::vector<ActionInstance> run() {
    for (std::size_t k : dependency_order(defs_)) {
      const auto& def = defs_[k];
      if (def.composed()) {
        assemble(def);
      } else {
        scan(def);
      }
    }
    return std::move(instances_);
  }

 private:
  std::uint64_t frame_index(std::size_t pos) const { return trace_.frames[pos].index; }

  const std::vector<std::size_t>& instances_of(const std::string& action) { return per_action_[action]; }

  void emit(const ActionDefinition& def, const Binding& b, std::uint64_t start, std::uint64_t end,
            std::vector<std::size_t> children) {
    ActionInstance inst;
    inst.id = instances_.size();
    inst.action = def.name;
    inst.binding = b;
    inst.start = start;
    inst.end = end;
    inst.children = std::move(children);
    per_action_[def.name].push_back(inst.id);
    instances_.push_back(std::move(inst));
  }

  /// Children for a run of `def` starting at frame `at`, or nullopt when a
  /// sub-action has not completed yet.
  std::optional<std::vector<std::size_t>> gate(const ActionDefinition& def, const Machine& m, std::uint64_t at) {
    std::vector<std::size_t> children;
    for (const auto* list : {&def.after, &def.requires_}) {
      for (const auto& ref : *list) {
        const auto& sub = defs_[by_name_.at(ref.action)];
        const Binding want = project(m.binding, sub);
        std::optional<std::size_t> best;
        for (std::size_t id : instances_of(sub.name)) {
          const auto& c = instances_[id];
          if (c.binding != want || c.end > at) continue;
          if (m.last_end && c.start <= *m.last_end) continue;
          if (!best || std::tie(c.end, c.start) > std::tie(instances_[*best].end, instances_[*best].start)) best = id;
        }
        if (!best) return std::nullopt;
        if (list == &def.after) children.push_back(*best);
      }
    }
    return children;
  }

  bool hand_allowed(const EvalContext& ctx, const Phase& phase, const Binding& b) const {
    for (const auto& t : phase.terms) {
      if (t.id == ConstraintId::C5 && !t.negated && b.hand) {
        if (ctx.bind_hand(*b.active_object) != b.hand) return false;
      }
    }
    return true;
  }

  void complete_if_held(const ActionDefinition& def, Machine& m, std::size_t i) {
    if (m.run < def.phases[m.phase].duration(thresholds_)) return;
    if (m.phase + 1 < def.phases.size()) {
      ++m.phase;
      m.run = 0;
      m.dropouts = 0;
      m.wait_dropouts = 0;
      return;
    }
    std::uint64_t start = frame_index(m.start_pos);
    for (std::size_t c : m.children) start = std::min(start, instances_[c].start);
    const std::uint64_t end = frame_index(i);
    emit(def, m.binding, start, end, m.children);
    m.reset();
    m.latched = true;
    m.latch_false = 0;
    m.last_end = end;
  }

  void try_start(const EvalContext& ctx, const ActionDefinition& def, Machine& m, std::size_t i) {
    const Phase& first = def.phases.front();
    if (conjunction(ctx, first, m.binding) != Tri::yes) return;
    if (!hand_allowed(ctx, first, m.binding)) return;
    auto children = gate(def, m, frame_index(i));
    if (!children) return;
    m.children = std::move(*children);
    m.start_pos = i;
    m.run = 1;
    m.dropouts = 0;
    complete_if_held(def, m, i);
  }

  void step(const EvalContext& ctx, const ActionDefinition& def, Machine& m, std::size_t i) {
    const int k_miss = thresholds_.k_miss;
    if (m.latched) {
      // After an emission, the first phase must be broken before re-arming.
      const Tri s = conjunction(ctx, def.phases.front(), m.binding);
      if (s == Tri::no) {
        if (++m.latch_false > k_miss) m.latched = false;
      } else if (s == Tri::yes) {
        m.latch_false = 0;
      }
      return;
    }
    if (m.run == 0 && m.phase == 0) {
      try_start(ctx, def, m, i);
      return;
    }
    const Tri s = conjunction(ctx, def.phases[m.phase], m.binding);
    if (m.run == 0) {
      // Waiting for the next phase: the previous one has to keep holding.
      if (s == Tri::yes) {
        m.run = 1;
        m.dropouts = 0;
        complete_if_held(def, m, i);
        return;
      }
      const Tri prev = conjunction(ctx, def.phases[m.phase - 1], m.binding);
      if (prev == Tri::no) {
        m.reset();
        try_start(ctx, def, m, i);
      } else if (prev == Tri::dropout) {
        if (++m.wait_dropouts > k_miss) m.reset();
      } else {
        m.wait_dropouts = 0;
      }
      return;
    }
    if (s == Tri::yes) {
      ++m.run;
      m.dropouts = 0;
      complete_if_held(def, m, i);
      return;
    }
    if (s == Tri::dropout && ++m.dropouts <= k_miss) return;
    m.run = 0;
    m.dropouts = 0;
    m.wait_dropouts = 0;
    if (m.phase == 0) m.children.clear();
  }

  void scan(const ActionDefinition& def) {
    std::vector<Machine> machines;
    for (auto& b : candidate_bindings(def, scene_, ontology_)) {
      Machine m;
      m.binding = std::move(b);
      machines.push_back(std::move(m));
    }
    if (machines.empty()) return;
    EvalContext ctx(trace_, scene_, ontology_, thresholds_);
    for (std::size_t i = 0; i < trace_.frames.size(); ++i) {
      ctx.advance(i);
      for (auto& m : machines) step(ctx, def, m, i);
    }
  }

  /// Chains completed `after` sub-actions in order: each link must be the
  /// first instance of its kind following the previous link.
  void assemble(const ActionDefinition& def) {
    for (const auto& b : candidate_bindings(def, scene_, ontology_)) {
      std::vector<std::vector<std::size_t>> lists;
      for (const auto& ref : def.after) {
        const auto& sub = defs_[by_name_.at(ref.action)];
        const Binding want = project(b, sub);
        std::vector<std::size_t> ids;
        for (std::size_t id : instances_of(sub.name)) {
          if (instances_[id].binding == want) ids.push_back(id);
        }
        std::sort(ids.begin(), ids.end(), [this](std::size_t x, std::size_t y) {
          return std::tie(instances_[x].start, instances_[x].end) < std::tie(instances_[y].start, instances_[y].end);
        });
        lists.push_back(std::move(ids));
      }
      const std::size_t n = lists.size();
      std::vector<std::vector<bool>> used(n);
      for (std::size_t k = 0; k < n; ++k) used[k].assign(lists[k].size(), false);
      std::optional<std::uint64_t> last_end;

      for (std::size_t li = 0; li < lists[n - 1].size(); ++li) {
        const auto& tail = instances_[lists[n - 1][li]];
        if (used[n - 1][li] || (last_end && tail.start <= *last_end)) continue;
        std::vector<std::size_t> chain_pos(n);
        chain_pos[n - 1] = li;
        bool ok = true;
        for (std::size_t k = n - 1; k-- > 0;) {
          const auto& cur = instances_[lists[k + 1][chain_pos[k + 1]]];
          std::optional<std::size_t> best;
          for (std::size_t c = 0; c < lists[k].size(); ++c) {
            const auto& y = instances_[lists[k][c]];
            if (used[k][c] || y.end > cur.start || (last_end && y.start <= *last_end)) continue;
            if (!best || std::tie(y.end, y.start) > std::tie(instances_[lists[k][*best]].end,
                                                            instances_[lists[k][*best]].start)) {
              best = c;
            }
          }
          if (!best) {
            ok = false;
            break;
          }
          const auto& y = instances_[lists[k][*best]];
          const bool interrupted =
              std::any_of(lists[k + 1].begin(), lists[k + 1].end(), [&](std::size_t z) {
                const auto& zi = instances_[z];
                return &zi != &cur && zi.start >= y.end && zi.start < cur.start;
              });
          if (interrupted) {
            ok = false;
            break;
          }
          chain_pos[k] = *best;
        }
        if (!ok) continue;
        std::vector<std::size_t> children;
        std::uint64_t start = UINT64_MAX, end = 0;
        for (std::size_t k = 0; k < n; ++k) {
          used[k][chain_pos[k]] = true;
          const std::size_t id = lists[k][chain_pos[k]];
          children.push_back(id);
          start = std::min(start, instances_[id].start);
          end = std::max(end, instances_[id].end);
        }
        emit(def, b, start, end, std::move(children));
        last_end = end;
      }
    }
  }

  const Trace& trace_;
  const SceneState& scene_;
  const Ontology& ontology_;
  const Thresholds& thresholds_;
  const std::vector<ActionDefinition>& defs_;
  std::map<std::string, std::size_t> by_name_;
  std::map<std::string, std::vector<std::size_t>> per_action_;
  std::vector<ActionInstance> instances_;
};

}  // namespace

void normalize(Timeline& timeline) {
  auto& v = timeline.instances;
  std::vector<std::size_t> order(v.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) {
    return std::tie(v[a].start, v[a].end, v[a].action, v[a].binding) <
           std::tie(v[b].start, v[b].end, v[b].action, v[b].binding);
  });
  std::map<std::size_t, std::size_t> remap;
  for (std::size_t k = 0; k < order.size(); ++k) remap[v[order[k]].id] = k;
  std::vector<ActionInstance> sorted;
  sorted.reserve(v.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    ActionInstance inst = v[order[k]];
    inst.id = k;
    for (auto& c : inst.children) c = remap.at(c);
    std::sort(inst.children.begin(), inst.children.end());
    sorted.push_back(std::move(inst));
  }
  v = std::move(sorted);
}

std::optional<Hand> bind_hand(const EvalContext& ctx, const std::string& object) { return ctx.bind_hand(object); }

Timeline match(const Trace& trace, const SceneState& scene, const Ontology& ontology, const Thresholds& thresholds,
               const std::vector<ActionDefinition>& definitions, std::string source) {
  if (trace.empty()) throw InputError("cannot recognize actions in an empty trace");
  thresholds.validate();
  for (const auto& def : definitions) {
    for (const auto& t : def.static_constraints) {
      if (t.affordance && !ontology.has_affordance(*t.affordance)) {
        throw ValidationError("action '" + def.name + "' uses affordance '" + *t.affordance +
                              "' which the ontology does not declare");
      }
    }
  }
  Timeline timeline;
  timeline.source = std::move(source);
  timeline.thresholds = thresholds;
  timeline.instances = Matcher(trace, scene, ontology, thresholds, definitions).run();
  normalize(timeline);
  return timeline;
}

Recognition recognize(const Trace& trace, const Ontology& ontology, const std::vector<ActionDefinition>& definitions,
                      const RecognizeOptions& options) {
  if (trace.empty()) throw InputError("cannot recognize actions in an empty trace");
  Recognition r;
  r.scene = analyze_initial(trace, ontology, options.scene);
  r.timeline = match(trace, r.scene, ontology, options.thresholds, definitions, options.source);
  return r;
}

void write_timeline(const Timeline& timeline, std::ostream& out) {
  detail::ordered_json header;
  header["source"] = timeline.source;
  header["thresholds"] = detail::to_json(timeline.thresholds);
  out << header.dump() << '\n';
  for (const auto& inst : timeline.instances) {
    detail::ordered_json j;
    j["id"] = inst.id;
    j["action"] = inst.action;
    j["bindings"] = detail::to_json(inst.binding);
    j["start"] = inst.start;
    j["end"] = inst.end;
    j["children"] = inst.children;
    out << j.dump() << '\n';
  }
}

std::string serialize_timeline(const Timeline& timeline) {
  std::ostringstream out;
  write_timeline(timeline, out);
  return out.str();
}

Timeline read_timeline(std::istream& in) {
  Timeline t;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = detail::ordered_json::parse(line);
      if (!header) {
        t.source = j.at("source").get<std::string>();
        t.thresholds = detail::thresholds_from_json(j.at("thresholds"));
        header = true;
        continue;
      }
      ActionInstance inst;
      inst.id = j.at("id").get<std::size_t>();
      inst.action = j.at("action").get<std::string>();
      inst.binding = detail::binding_from_json(j.at("bindings"));
      inst.start = j.at("start").get<std::uint64_t>();
      inst.end = j.at("end").get<std::uint64_t>();
      inst.children = j.at("children").get<std::vector<std::size_t>>();
      if (inst.start > inst.end) throw ParseError("instance starts after it ends", line_no);
      t.instances.push_back(std::move(inst));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad timeline record: ") + e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!header) throw ParseError("timeline file has no header record", line_no);
  for (std::size_t k = 0; k < t.instances.size(); ++k) {
    if (t.instances[k].id != k) throw ParseError("timeline ids must equal record positions", 0);
    for (std::size_t c : t.instances[k].children) {
      if (c >= t.instances.size()) throw ParseError("child id " + std::to_string(c) + " does not exist", 0);
    }
  }
  return t;
}

Timeline parse_timeline_string(const std::string& text) {
  std::istringstream in(text);
  return read_timeline(in);
}

Timeline load_timeline_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open timeline file '" + path + "'");
  return read_timeline(in);
}

void save_timeline_file(const Timeline& timeline, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write timeline file '" + path + "'");
  write_timeline(timeline, out);
}

}  // namespace actrec
