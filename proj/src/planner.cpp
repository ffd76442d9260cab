#include "actrec/planner.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json_util.hpp"

namespace actrec {

namespace {

constexpr std::array<std::pair<Verb, std::string_view>, 5> kVerbs{{
    {Verb::grasp, "grasp"},
    {Verb::move_over, "move_over"},
    {Verb::pour_into, "pour_into"},
    {Verb::place_on_table, "place_on_table"},
    {Verb::release, "release"},
}};

[[noreturn]] void violation(const std::string& what) {
  throw PlanError(PlanError::Kind::affordance_violation, what);
}

void require_affordance(const Ontology& ontology, const std::string& object, const std::string& affordance,
                        Verb verb, const ActionInstance& source) {
  if (!ontology.has_affordance(affordance) || !ontology.g_a(object, affordance)) {
    violation(std::string(to_string(verb)) + " needs '" + object + "' to afford " + affordance + " (instance " +
              std::to_string(source.id) + ", " + source.action + ")");
  }
}

const std::string& role(const ActionInstance& inst, const std::optional<std::string>& value, const char* name) {
  if (!value) {
    throw PlanError(PlanError::Kind::dangling_manipulation,
                    inst.action + " instance " + std::to_string(inst.id) + " has no " + name + " object");
  }
  return *value;
}

nlohmann::ordered_json point_json(Point2 p) { return nlohmann::ordered_json::array({p.x, p.y}); }

Point2 point_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

[[noreturn]] void precondition(const std::string& what) {
  throw PlanError(PlanError::Kind::precondition_failure, what);
}

}  // namespace

std::string_view to_string(Verb verb) {
  for (const auto& [v, name] : kVerbs) {
    if (v == verb) return name;
  }
  return "?";
}

std::optional<Verb> verb_from_string(std::string_view name) {
  for (const auto& [v, n] : kVerbs) {
    if (n == name) return v;
  }
  return std::nullopt;
}

std::size_t arity(Verb verb) { return verb == Verb::move_over || verb == Verb::pour_into ? 2 : 1; }

std::string_view to_string(Location location) {
  switch (location) {
    case Location::resting:
      return "resting";
    case Location::held:
      return "held";
    case Location::on_table:
      return "on_table";
    case Location::released:
      return "released";
  }
  return "?";
}

CommandPlan plan(const Timeline& timeline, const Ontology& ontology, const SceneState* scene) {
  std::vector<const ActionInstance*> primitives;
  for (const auto& inst : timeline.instances) {
    if (inst.action == "Pick" || inst.action == "Pour" || inst.action == "Place") primitives.push_back(&inst);
  }
  std::stable_sort(primitives.begin(), primitives.end(), [](const ActionInstance* a, const ActionInstance* b) {
    return std::tie(a->start, a->end) < std::tie(b->start, b->end);
  });

  CommandPlan out;
  out.source = timeline.source;
  std::optional<std::string> held;

  auto push = [&out](Verb verb, std::vector<std::string> args, const ActionInstance* src) {
    Command c;
    c.verb = verb;
    c.args = std::move(args);
    if (src) {
      c.source_action = src->action;
      c.source_id = src->id;
      c.source_interval = std::make_pair(src->start, src->end);
    }
    out.commands.push_back(std::move(c));
    return &out.commands.back();
  };
  auto require_held = [&held](const ActionInstance& inst, const std::string& o) {
    if (held != o) {
      throw PlanError(PlanError::Kind::dangling_manipulation,
                      inst.action + " instance " + std::to_string(inst.id) + " manipulates '" + o +
                          "' which is not grasped");
    }
  };

  for (const ActionInstance* inst : primitives) {
    const std::string& o = role(*inst, inst->binding.active_object, "active");
    if (inst->action == "Pick") {
      require_affordance(ontology, o, "pick", Verb::grasp, *inst);
      if (held == o) continue;
      if (held) push(Verb::release, {*held}, nullptr);
      push(Verb::grasp, {o}, inst);
      held = o;
    } else if (inst->action == "Pour") {
      const std::string& p = role(*inst, inst->binding.passive_object, "passive");
      require_affordance(ontology, o, "pour", Verb::pour_into, *inst);
      require_affordance(ontology, p, "accept_pouring", Verb::pour_into, *inst);
      require_held(*inst, o);
      push(Verb::move_over, {o, p}, inst);
      push(Verb::pour_into, {o, p}, inst);
    } else {
      require_affordance(ontology, o, "place", Verb::place_on_table, *inst);
      require_held(*inst, o);
      Command* c = push(Verb::place_on_table, {o}, inst);
      if (scene) {
        c->target = centroid(scene->table);
        if (auto it = scene->initial_centroids.find(o); it != scene->initial_centroids.end()) {
          c->initial_position = it->second;
        }
      }
      held.reset();
    }
  }
  if (held) push(Verb::release, {*held}, nullptr);
  return out;
}

void write_plan(const CommandPlan& plan, std::ostream& out) {
  detail::ordered_json header;
  header["source"] = plan.source;
  out << header.dump() << '\n';
  for (const auto& c : plan.commands) {
    detail::ordered_json j;
    j["verb"] = std::string(to_string(c.verb));
    j["args"] = c.args;
    j["source_action"] = c.source_action ? detail::ordered_json(*c.source_action) : detail::ordered_json(nullptr);
    j["source_id"] = c.source_id ? detail::ordered_json(*c.source_id) : detail::ordered_json(nullptr);
    j["source_interval"] = c.source_interval
                               ? detail::ordered_json::array({c.source_interval->first, c.source_interval->second})
                               : detail::ordered_json(nullptr);
    if (c.target) j["target"] = point_json(*c.target);
    if (c.initial_position) j["initial_position"] = point_json(*c.initial_position);
    out << j.dump() << '\n';
  }
}

std::string serialize_plan(const CommandPlan& plan) {
  std::ostringstream out;
  write_plan(plan, out);
  return out.str();
}

CommandPlan read_plan(std::istream& in) {
  CommandPlan plan;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = detail::ordered_json::parse(line);
      if (!header) {
        plan.source = j.at("source").get<std::string>();
        header = true;
        continue;
      }
      Command c;
      const auto verb = verb_from_string(j.at("verb").get<std::string>());
      if (!verb) throw ParseError("unknown verb '" + j.at("verb").get<std::string>() + "'", line_no);
      c.verb = *verb;
      c.args = j.at("args").get<std::vector<std::string>>();
      if (c.args.size() != arity(c.verb)) {
        throw ParseError(std::string(to_string(c.verb)) + " takes " + std::to_string(arity(c.verb)) + " arguments",
                         line_no);
      }
      if (const auto& v = j.at("source_action"); !v.is_null()) c.source_action = v.get<std::string>();
      if (const auto& v = j.at("source_id"); !v.is_null()) c.source_id = v.get<std::size_t>();
      if (const auto& v = j.at("source_interval"); !v.is_null()) {
        c.source_interval = std::make_pair(v.at(0).get<std::uint64_t>(), v.at(1).get<std::uint64_t>());
      }
      if (j.contains("target")) c.target = point_from_json(j.at("target"));
      if (j.contains("initial_position")) c.initial_position = point_from_json(j.at("initial_position"));
      plan.commands.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad plan record: ") + e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!header) throw ParseError("plan file has no header record", line_no);
  return plan;
}

CommandPlan parse_plan_string(const std::string& text) {
  std::istringstream in(text);
  return read_plan(in);
}

CommandPlan load_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open plan file '" + path + "'");
  return read_plan(in);
}

void save_plan_file(const CommandPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write plan file '" + path + "'");
  write_plan(plan, out);
}

WorldState initial_world(const SceneState& scene, const Ontology& ontology) {
  WorldState w;
  for (const auto& [cls, r] : scene.assignments) {
    ObjectState s;
    if (r == Role::active && ontology.has_affordance("pour") && ontology.g_a(cls, "pour")) {
      s.contains.push_back(cls + "_contents");
    }
    w.objects.emplace(cls, std::move(s));
  }
  return w;
}

WorldState simulate_plan(const CommandPlan& plan, WorldState w) {
  std::size_t step = 0;
  auto object = [&w, &step](const std::string& name) -> ObjectState& {
    auto it = w.objects.find(name);
    if (it == w.objects.end()) precondition("step " + std::to_string(step) + ": no object '" + name + "' in the world");
    return it->second;
  };
  auto holding = [&w, &step](const Command& c) {
    if (w.held != c.args[0]) {
      precondition("step " + std::to_string(step) + ": " + std::string(to_string(c.verb)) + " needs '" + c.args[0] +
                   "' in hand");
    }
  };

  for (const auto& c : plan.commands) {
    if (c.args.size() != arity(c.verb)) precondition("step " + std::to_string(step) + ": wrong argument count");
    switch (c.verb) {
      case Verb::grasp: {
        if (w.held) precondition("step " + std::to_string(step) + ": grasp while holding '" + *w.held + "'");
        object(c.args[0]).location = Location::held;
        w.held = c.args[0];
        w.over.reset();
        break;
      }
      case Verb::move_over:
        holding(c);
        object(c.args[1]);
        w.over = c.args[1];
        break;
      case Verb::pour_into: {
        holding(c);
        if (w.over != c.args[1]) {
          precondition("step " + std::to_string(step) + ": pour_into '" + c.args[1] + "' while not over it");
        }
        auto& src = object(c.args[0]);
        auto& dst = object(c.args[1]);
        dst.contains.insert(dst.contains.end(), src.contains.begin(), src.contains.end());
        src.contains.clear();
        break;
      }
      case Verb::place_on_table:
      case Verb::release:
        holding(c);
        object(c.args[0]).location = c.verb == Verb::release ? Location::released : Location::on_table;
        w.held.reset();
        w.over.reset();
        break;
    }
    ++step;
  }
  return w;
}

std::vector<std::string> unmet(const WorldState& world, const Goal& goal) {
  std::vector<std::string> out;
  auto find = [&world](const std::string& name) -> const ObjectState* {
    auto it = world.objects.find(name);
    return it == world.objects.end() ? nullptr : &it->second;
  };
  for (const auto& [target, items] : goal.contains) {
    const ObjectState* s = find(target);
    for (const auto& item : items) {
      if (!s || std::find(s->contains.begin(), s->contains.end(), item) == s->contains.end()) {
        out.push_back("'" + target + "' does not contain '" + item + "'");
      }
    }
  }
  for (const auto& o : goal.placed) {
    const ObjectState* s = find(o);
    if (!s || s->location != Location::on_table) out.push_back("'" + o + "' is not on the table");
  }
  for (const auto& o : goal.released) {
    const ObjectState* s = find(o);
    if (!s || s->location != Location::released) out.push_back("'" + o + "' was not released");
  }
  if (world.held) out.push_back("still holding '" + *world.held + "'");
  return out;
}

}  // namespace actrec
