#include "actrec/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "actrec/action_dsl.hpp"
#include "actrec/error.hpp"
#include "actrec/planner.hpp"
#include "actrec/recognizer.hpp"
#include "actrec/report.hpp"
#include "actrec/synthgen.hpp"

namespace actrec {

namespace {

using nlohmann::ordered_json;

template <typename T>
void read_opt(const YAML::Node& n, const char* key, std::optional<T>& into) {
  if (const auto v = n[key]) {
    try {
      into = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ParseError(std::string("config key '") + key + "' has the wrong type",
                       static_cast<std::size_t>(v.Mark().line + 1), static_cast<std::size_t>(v.Mark().column + 1));
    }
  }
}

/// Flags shared by every command that evaluates constraints.
struct ThresholdFlags {
  std::optional<double> th_d, sigma_pos, eps_rot, eps_col;
  std::optional<int> th_n, k_miss;
  bool c9_vector = false;

  void add(CLI::App* app) {
    app->add_option("--th-d", th_d, "hand-object distance threshold in pixels");
    app->add_option("--th-n", th_n, "frames a relation must hold");
    app->add_option("--sigma-pos", sigma_pos, "displacement tolerance in pixels");
    app->add_option("--eps-rot", eps_rot, "rotation threshold in radians");
    app->add_option("--eps-col", eps_col, "column tolerance in pixels");
    app->add_option("--k-miss", k_miss, "frames an operand may go unobserved");
    app->add_flag("--c9-vector", c9_vector, "compare displacement vectors instead of magnitudes");
  }

  bool any() const { return th_d || sigma_pos || eps_rot || eps_col || th_n || k_miss || c9_vector; }

  void apply(Thresholds& t, const RunConfig& cfg) const {
    auto pick = [](auto& dst, const auto& flag, const auto& conf) {
      if (flag) {
        dst = *flag;
      } else if (conf) {
        dst = *conf;
      }
    };
    pick(t.th_d, th_d, cfg.th_d);
    pick(t.th_n, th_n, cfg.th_n);
    pick(t.sigma_pos, sigma_pos, cfg.sigma_pos);
    pick(t.eps_rot, eps_rot, cfg.eps_rot);
    pick(t.eps_col, eps_col, cfg.eps_col);
    pick(t.k_miss, k_miss, cfg.k_miss);
    if (c9_vector || cfg.c9_vector.value_or(false)) t.c9_mode = C9Mode::vector;
    t.validate();
  }
};

std::string need(const std::string& flag_value, const std::optional<std::string>& config_value, const char* name) {
  if (!flag_value.empty()) return flag_value;
  if (config_value) return *config_value;
  throw InputError(std::string("missing --") + name);
}

std::vector<ActionDefinition> load_definitions(const std::string& path, bool co_movement) {
  if (!path.empty()) return load_actions_file(path);
  return builtin_actions(co_movement ? Library::co_movement : Library::standard);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1), static_cast<std::size_t>(e.mark.column + 1));
  }
  RunConfig c;
  if (root.IsNull()) return c;
  if (!root.IsMap()) throw ParseError("config must be a map", 1);
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    static const std::vector<std::string> known{"ontology", "actions", "thresholds", "c9_vector", "strict_pour",
                                                "init_window", "lenient", "report"};
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParseError("unknown config key '" + key + "'", static_cast<std::size_t>(kv.first.Mark().line + 1),
                       static_cast<std::size_t>(kv.first.Mark().column + 1));
    }
  }
  const auto base = std::filesystem::path(path).parent_path();
  auto relative = [&base](std::optional<std::string>& p) {
    if (p && std::filesystem::path(*p).is_relative()) p = (base / *p).string();
  };
  read_opt(root, "ontology", c.ontology);
  read_opt(root, "actions", c.actions);
  relative(c.ontology);
  relative(c.actions);
  read_opt(root, "c9_vector", c.c9_vector);
  read_opt(root, "strict_pour", c.strict_pour);
  read_opt(root, "init_window", c.init_window);
  read_opt(root, "lenient", c.lenient);
  if (const auto t = root["thresholds"]) {
    read_opt(t, "th_d", c.th_d);
    read_opt(t, "th_n", c.th_n);
    read_opt(t, "sigma_pos", c.sigma_pos);
    read_opt(t, "eps_rot", c.eps_rot);
    read_opt(t, "eps_col", c.eps_col);
    read_opt(t, "k_miss", c.k_miss);
  }
  if (const auto r = root["report"]) {
    read_opt(r, "format", c.report_format);
    read_opt(r, "min_overlap", c.min_overlap);
  }
  return c;
}

void dump_constraints(const Trace& trace, const SceneState& scene, const Ontology& ontology,
                      const Thresholds& thresholds, std::ostream& out) {
  std::vector<std::string> actives, passives;
  for (const auto& [cls, role] : scene.assignments) (role == Role::active ? actives : passives).push_back(cls);
  std::vector<std::optional<std::string>> passive_opts(passives.begin(), passives.end());
  if (passive_opts.empty()) passive_opts.emplace_back();

  EvalContext ctx(trace, scene, ontology, thresholds);
  for (std::size_t pos = 0; pos < trace.frames.size(); ++pos) {
    ctx.advance(pos);
    for (const auto& a : actives) {
      for (const auto& p : passive_opts) {
        for (Hand h : {Hand::left, Hand::right}) {
          Binding b{a, p, h, std::nullopt};
          ordered_json j;
          j["frame"] = trace.frames[pos].index;
          j["active"] = a;
          j["passive"] = p ? ordered_json(*p) : ordered_json(nullptr);
          j["hand"] = std::string(to_string(h));
          for (int k = 1; k <= 12; ++k) {
            const auto id = static_cast<ConstraintId>(k);
            const bool needs_passive = id == ConstraintId::C2 || id == ConstraintId::C4 || id == ConstraintId::C12;
            if (needs_passive && !p) {
              j[to_string(id)] = nullptr;
            } else if (id == ConstraintId::C3 || id == ConstraintId::C4) {
              ordered_json m = ordered_json::object();
              for (const auto& aff : ontology.affordances()) {
                Binding ab = b;
                ab.affordance = aff;
                m[aff] = ctx.evaluate(id, ab).value;
              }
              j[to_string(id)] = m;
            } else {
              j[to_string(id)] = ctx.evaluate(id, b).value;
            }
          }
          out << j.dump() << '\n';
        }
      }
    }
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recognize manipulation actions in hand/object traces"};
  app.name("actrec");
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, std::string("YAML config file (default: $") + kConfigEnv + ")");

  // recognize
  auto* rec = app.add_subcommand("recognize", "recognize actions in a trace and plan robot commands");
  std::string trace_path, ontology_path, actions_path, timeline_out, plan_out, constraints_out;
  std::optional<std::size_t> init_window;
  bool lenient = false, strict_pour = false;
  ThresholdFlags rec_flags;
  rec->add_option("--trace", trace_path, "trace file")->required();
  rec->add_option("--ontology", ontology_path, "ontology file");
  rec->add_option("--actions", actions_path, "action definitions (default: built-in library)");
  rec->add_option("--timeline", timeline_out, "write the timeline here instead of standard output");
  rec->add_option("--plan", plan_out, "write the command plan here");
  rec->add_option("--trace-constraints", constraints_out, "dump per-frame constraint values here");
  rec->add_option("--init-window", init_window, "frames used for the initial scene");
  rec->add_flag("--lenient", lenient, "admit objects that appear after the initial window");
  rec->add_flag("--strict-pour", strict_pour, "Pour checks co-movement only");
  rec_flags.add(rec);

  // report
  auto* rep = app.add_subcommand("report", "score a generated corpus against its labels");
  std::string corpus_dir, format, report_out;
  std::optional<double> min_overlap;
  ThresholdFlags rep_flags;
  rep->add_option("--corpus", corpus_dir, "corpus directory with manifest.json")->required();
  rep->add_option("--ontology", ontology_path, "ontology file");
  rep->add_option("--actions", actions_path, "action definitions (default: built-in library)");
  rep->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));
  rep->add_option("--min-overlap", min_overlap, "interval overlap needed for a match");
  rep->add_option("--output", report_out, "write the report here instead of standard output");
  rep->add_option("--init-window", init_window, "frames used for the initial scene");
  rep->add_flag("--lenient", lenient, "admit objects that appear after the initial window");
  rep->add_flag("--strict-pour", strict_pour, "Pour checks co-movement only");
  rep_flags.add(rep);

  // gen
  auto* gen = app.add_subcommand("gen", "generate labelled synthetic traces");
  std::string out_dir, spec_path, regenerate, scenario_path, trace_out, labels_out;
  std::vector<std::string> templates, grip_classes;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> seed;
  std::vector<double> dropouts;
  double jitter = 0, grip_offset = 0;
  ThresholdFlags gen_flags;
  gen->add_option("--out", out_dir, "corpus output directory");
  gen->add_option("--spec", spec_path, "corpus spec file");
  gen->add_option("--template", templates, "scenario template (repeatable)");
  gen->add_option("--count", count, "number of scenarios");
  gen->add_option("--seed", seed, "master seed");
  gen->add_option("--dropout", dropouts, "detection dropout probability; each value adds a noise level");
  gen->add_option("--jitter", jitter, "box jitter standard deviation in pixels");
  gen->add_option("--grip-offset", grip_offset, "extra hand-object distance while gripping");
  gen->add_option("--grip-class", grip_classes, "restrict the grip offset to these objects");
  gen->add_option("--regenerate", regenerate, "rebuild the corpus described by a manifest");
  gen->add_option("--scenario", scenario_path, "generate a single scenario");
  gen->add_option("--trace-out", trace_out, "single scenario: trace file (default: standard output)");
  gen->add_option("--labels-out", labels_out, "single scenario: labels file");
  gen_flags.add(gen);

  // validate
  auto* val = app.add_subcommand("validate", "check input files");
  std::vector<std::string> val_traces, val_scenarios;
  std::string val_timeline, val_plan;
  val->add_option("--ontology", ontology_path, "ontology file");
  val->add_option("--trace", val_traces, "trace file (repeatable)");
  val->add_option("--actions", actions_path, "action definitions");
  val->add_option("--scenario", val_scenarios, "scenario template (repeatable)");
  val->add_option("--timeline", val_timeline, "timeline file");
  val->add_option("--plan", val_plan, "plan file");

  // actions
  auto* act = app.add_subcommand("actions", "show action definitions");
  bool dump = false;
  act->add_flag("--dump", dump, "print the definitions in the action language");
  act->add_option("--actions", actions_path, "action definitions (default: built-in library)");
  act->add_flag("--strict-pour", strict_pour, "use the co-movement-only Pour");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    RunConfig cfg;
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv); env && *env) config_path = env;
    }
    if (!config_path.empty()) cfg = load_config_file(config_path);
    const bool strict = strict_pour || cfg.strict_pour.value_or(false);
    if (actions_path.empty() && cfg.actions) actions_path = *cfg.actions;

    SceneOptions scene_opts;
    if (init_window) {
      scene_opts.init_window = *init_window;
    } else if (cfg.init_window) {
      scene_opts.init_window = *cfg.init_window;
    }
    scene_opts.lenient = lenient || cfg.lenient.value_or(false);

    if (*rec) {
      const Ontology ontology = load_ontology_file(need(ontology_path, cfg.ontology, "ontology"));
      const Trace trace = load_trace_file(trace_path);
      for (const auto& w : lint_trace(trace)) err << "warning: " << w << '\n';
      const auto defs = load_definitions(actions_path, strict);
      RecognizeOptions ro;
      rec_flags.apply(ro.thresholds, cfg);
      ro.scene = scene_opts;
      ro.source = trace_path;
      const Recognition r = recognize(trace, ontology, defs, ro);
      const CommandPlan p = plan(r.timeline, ontology, &r.scene);
      if (timeline_out.empty()) {
        write_timeline(r.timeline, out);
      } else {
        save_timeline_file(r.timeline, timeline_out);
      }
      if (!plan_out.empty()) save_plan_file(p, plan_out);
      if (!constraints_out.empty()) {
        std::ofstream f(constraints_out, std::ios::binary);
        if (!f) throw InputError("cannot write '" + constraints_out + "'");
        dump_constraints(trace, r.scene, ontology, r.timeline.thresholds, f);
      }
      return exit_ok;
    }

    if (*rep) {
      const Ontology ontology = load_ontology_file(need(ontology_path, cfg.ontology, "ontology"));
      const auto defs = load_definitions(actions_path, strict);
      ReportOptions ro;
      ro.scene = scene_opts;
      if (min_overlap) {
        ro.min_overlap = *min_overlap;
      } else if (cfg.min_overlap) {
        ro.min_overlap = *cfg.min_overlap;
      }
      if (!(ro.min_overlap > 0 && ro.min_overlap <= 1)) throw InputError("--min-overlap must lie in (0, 1]");
      const bool config_thresholds =
          cfg.th_d || cfg.th_n || cfg.sigma_pos || cfg.eps_rot || cfg.eps_col || cfg.k_miss || cfg.c9_vector;
      if (rep_flags.any() || config_thresholds) {
        const auto manifest_path = std::filesystem::path(corpus_dir) / "manifest.json";
        Thresholds t = load_manifest(manifest_path.string()).thresholds;
        rep_flags.apply(t, cfg);
        ro.thresholds = t;
      }
      const Report report = evaluate_corpus(corpus_dir, ontology, defs, ro);
      const std::string fmt = !format.empty() ? format : cfg.report_format.value_or("text");
      if (fmt != "text" && fmt != "csv") throw InputError("report format must be text or csv");
      const std::string text = fmt == "csv" ? format_csv(report) : format_text(report);
      if (report_out.empty()) {
        out << text;
      } else {
        write_file(report_out, text);
      }
      return exit_ok;
    }

    if (*gen) {
      Thresholds t;
      gen_flags.apply(t, cfg);
      if (!scenario_path.empty()) {
        Scenario sc = load_scenario_file(scenario_path);
        if (seed) sc.seed = *seed;
        NoiseModel noise;
        noise.dropout_prob = dropouts.empty() ? 0.0 : dropouts.front();
        noise.centroid_jitter_px = jitter;
        noise.grip_offset_px = grip_offset;
        noise.grip_offset_classes = grip_classes;
        noise.seed = sc.seed;
        const Generated g = generate(sc, noise, t);
        if (trace_out.empty()) {
          serialize_trace(g.trace, out);
        } else {
          save_trace_file(g.trace, trace_out);
        }
        if (!labels_out.empty()) save_timeline_file(g.labels, labels_out);
        return exit_ok;
      }
      if (out_dir.empty()) throw InputError("missing --out");
      if (!regenerate.empty()) {
        write_corpus(load_manifest(regenerate), out_dir);
        return exit_ok;
      }
      BatchSpec spec;
      if (!spec_path.empty()) spec = load_batch_spec_file(spec_path);
      for (const auto& tp : templates) spec.templates.push_back(load_scenario_file(tp));
      if (count) spec.count = *count;
      if (seed) spec.seed = *seed;
      if (!dropouts.empty() || jitter > 0 || grip_offset > 0 || !grip_classes.empty()) {
        spec.noise_grid.clear();
        if (dropouts.empty()) dropouts.push_back(0.0);
        for (double d : dropouts) {
          NoiseModel n;
          n.dropout_prob = d;
          n.centroid_jitter_px = jitter;
          n.grip_offset_px = grip_offset;
          n.grip_offset_classes = grip_classes;
          spec.noise_grid.push_back(n);
        }
      }
      spec.thresholds = t;
      const Manifest m = batch(spec, out_dir);
      err << "wrote " << m.entries.size() << " entries to " << out_dir << '\n';
      return exit_ok;
    }

    if (*val) {
      std::optional<Ontology> ontology;
      const std::string op = !ontology_path.empty() ? ontology_path : cfg.ontology.value_or("");
      if (!op.empty()) {
        ontology = load_ontology_file(op);
        out << "ok: " << op << " (" << ontology->size() << " object classes)\n";
      }
      if (!actions_path.empty()) {
        const auto defs = load_actions_file(actions_path);
        out << "ok: " << actions_path << " (" << defs.size() << " actions)\n";
      }
      for (const auto& tp : val_traces) {
        const Trace trace = load_trace_file(tp);
        for (const auto& w : lint_trace(trace)) err << "warning: " << tp << ": " << w << '\n';
        if (ontology) {
          for (const auto& f : trace.frames) {
            for (const auto& d : f.detections) {
              if (!ontology->contains(d.class_name)) {
                throw UnknownClassError(d.class_name, tp + ": frame " + std::to_string(f.index) +
                                                          " detects unknown object class");
              }
            }
          }
        }
        out << "ok: " << tp << " (" << trace.size() << " frames)\n";
      }
      for (const auto& sp : val_scenarios) {
        const Scenario sc = load_scenario_file(sp);
        generate(sc);
        out << "ok: " << sp << '\n';
      }
      if (!val_timeline.empty()) {
        const Timeline t = load_timeline_file(val_timeline);
        out << "ok: " << val_timeline << " (" << t.instances.size() << " instances)\n";
      }
      if (!val_plan.empty()) {
        const CommandPlan p = load_plan_file(val_plan);
        out << "ok: " << val_plan << " (" << p.commands.size() << " commands)\n";
      }
      return exit_ok;
    }

    if (*act) {
      const auto defs = load_definitions(actions_path, strict);
      if (dump) {
        out << dump_actions(defs);
      } else {
        for (const auto& d : defs) out << d.name << '\n';
      }
      return exit_ok;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_input;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_internal;
  }
  return exit_internal;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("actrec");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace actrec
