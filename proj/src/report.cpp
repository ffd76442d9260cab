#include "actrec/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "actrec/error.hpp"
#include "actrec/synthgen.hpp"

namespace actrec {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kActions{"Pick", "Place", "Pour"};
const std::vector<std::string> kObjectActions{"Pick", "Pour", "Place"};
const std::vector<ConstraintId> kScored{ConstraintId::C5, ConstraintId::C6, ConstraintId::C7,  ConstraintId::C8,
                                        ConstraintId::C9, ConstraintId::C10, ConstraintId::C11, ConstraintId::C12};

std::size_t index_of(std::vector<std::string>& list, const std::string& name) {
  auto it = std::find(list.begin(), list.end(), name);
  if (it != list.end()) return static_cast<std::size_t>(it - list.begin());
  list.push_back(name);
  return list.size() - 1;
}

std::string rate_text(const Cell& c) {
  const auto r = c.rate();
  if (!r) return "---";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *r);
  std::string s = buf;
  while (s.size() > 3 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

/// Marks which (label, constraint) pairs become true inside the label.
void score_constraints(Report& report, const EntryInput& entry, const Ontology& ontology,
                       const Thresholds& thresholds) {
  struct Window {
    const ActionInstance* inst;
    ConstraintId id;
    bool hit = false;
  };
  std::vector<Window> windows;
  auto add = [&windows](const ActionInstance& inst, const std::vector<ConstraintId>& ids) {
    for (ConstraintId id : ids) windows.push_back({&inst, id});
  };
  for (const auto& inst : entry.labels->instances) add(inst, scored_constraints(inst.action));
  if (entry.releases) {
    for (const auto& inst : *entry.releases) add(inst, {ConstraintId::C6, ConstraintId::C8});
  }
  if (windows.empty()) return;

  EvalContext ctx(*entry.trace, *entry.scene, ontology, thresholds);
  for (std::size_t pos = 0; pos < entry.trace->frames.size(); ++pos) {
    ctx.advance(pos);
    const std::uint64_t f = entry.trace->frames[pos].index;
    for (auto& w : windows) {
      if (w.hit || f < w.inst->start || f > w.inst->end) continue;
      Binding b = w.inst->binding;
      b.affordance.reset();
      if (ctx.evaluate(w.id, b).value) w.hit = true;
    }
  }
  for (const auto& w : windows) {
    Cell& c = report.constraints.at(*w.inst->binding.active_object, to_string(w.id));
    ++c.total;
    if (w.hit) ++c.hits;
  }
}

}  // namespace

double interval_overlap(std::uint64_t a_start, std::uint64_t a_end, std::uint64_t b_start, std::uint64_t b_end) {
  const std::uint64_t lo = std::max(a_start, b_start), hi = std::min(a_end, b_end);
  const double inter = hi >= lo ? static_cast<double>(hi - lo + 1) : 0.0;
  const double uni = static_cast<double>(a_end - a_start + 1) + static_cast<double>(b_end - b_start + 1) - inter;
  return inter / uni;
}

LabelMatch match_labels(const Timeline& labels, const Timeline& recognized, double min_overlap) {
  LabelMatch m;
  m.labels = labels.instances.size();
  m.recognized = recognized.instances.size();
  std::vector<bool> used(recognized.instances.size(), false);
  for (const auto& l : labels.instances) {
    std::optional<std::size_t> best;
    double best_overlap = 0.0;
    for (std::size_t k = 0; k < recognized.instances.size(); ++k) {
      const auto& r = recognized.instances[k];
      if (used[k] || r.action != l.action || r.binding != l.binding) continue;
      const double o = interval_overlap(l.start, l.end, r.start, r.end);
      if (o >= min_overlap && o > best_overlap) {
        best = k;
        best_overlap = o;
      }
    }
    if (best) {
      used[*best] = true;
      ++m.matched;
    }
    m.label_to_instance.push_back(best);
  }
  return m;
}

Cell& Table::at(const std::string& row, const std::string& column) {
  const std::size_t r = index_of(rows, row);
  const std::size_t c = index_of(columns, column);
  if (cells.size() < rows.size()) cells.resize(rows.size());
  for (auto& line : cells) line.resize(columns.size());
  return cells[r][c];
}

const Cell* Table::find(const std::string& row, const std::string& column) const {
  auto r = std::find(rows.begin(), rows.end(), row);
  auto c = std::find(columns.begin(), columns.end(), column);
  if (r == rows.end() || c == columns.end()) return nullptr;
  const auto ri = static_cast<std::size_t>(r - rows.begin());
  const auto ci = static_cast<std::size_t>(c - columns.begin());
  if (ri >= cells.size() || ci >= cells[ri].size()) return nullptr;
  return &cells[ri][ci];
}

Report::Report() {
  activities.title = "Success rate of actions per activity";
  activities.corner = "Action";
  activities.rows = kActions;
  objects.title = "Success rate per active object";
  objects.corner = "Object";
  objects.columns = kObjectActions;
  constraints.title = "Success rate per constraint";
  constraints.corner = "Object/Const.";
  for (ConstraintId id : kScored) constraints.columns.push_back(to_string(id));
}

const std::vector<ConstraintId>& scored_constraints(const std::string& action) {
  static const std::map<std::string, std::vector<ConstraintId>> table{
      {"Pick", {ConstraintId::C5, ConstraintId::C7, ConstraintId::C9}},
      {"Place", {ConstraintId::C6, ConstraintId::C8, ConstraintId::C11}},
      {"Pour", {ConstraintId::C9, ConstraintId::C10, ConstraintId::C12}},
  };
  static const std::vector<ConstraintId> none;
  auto it = table.find(action);
  return it == table.end() ? none : it->second;
}

void accumulate(Report& report, const EntryInput& entry, const Ontology& ontology, const Thresholds& thresholds,
                double min_overlap) {
  const LabelMatch m = match_labels(*entry.labels, *entry.recognized, min_overlap);
  ++report.entries;
  report.labels += m.labels;
  report.recognized += m.recognized;
  report.matched += m.matched;
  if (!entry.activity.empty()) index_of(report.activities.columns, entry.activity);
  for (std::size_t k = 0; k < entry.labels->instances.size(); ++k) {
    const auto& l = entry.labels->instances[k];
    const bool hit = m.label_to_instance[k].has_value();
    if (std::find(kActions.begin(), kActions.end(), l.action) == kActions.end()) continue;
    if (!entry.activity.empty()) {
      Cell& c = report.activities.at(l.action, entry.activity);
      ++c.total;
      c.hits += hit;
    }
    if (l.binding.active_object) {
      Cell& c = report.objects.at(*l.binding.active_object, l.action);
      ++c.total;
      c.hits += hit;
    }
  }
  score_constraints(report, entry, ontology, thresholds);
  for (auto* t : {&report.activities, &report.objects, &report.constraints}) {
    t->cells.resize(t->rows.size());
    for (auto& line : t->cells) line.resize(t->columns.size());
  }
}

Report evaluate_corpus(const std::string& corpus_dir, const Ontology& ontology,
                       const std::vector<ActionDefinition>& definitions, const ReportOptions& options) {
  const fs::path root(corpus_dir);
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) throw InputError("no manifest.json in '" + corpus_dir + "'");
  const Manifest manifest = load_manifest(manifest_path.string());
  if (manifest.entries.empty()) throw InputError("corpus '" + corpus_dir + "' is empty");
  const Thresholds thresholds = options.thresholds ? *options.thresholds : manifest.thresholds;

  Report report;
  for (const auto& e : manifest.entries) {
    const fs::path dir = root / e.dir;
    const fs::path labels_path = dir / "labels.jsonl";
    if (!fs::exists(labels_path)) throw InputError("entry '" + e.dir + "' has no labels");
    const Trace trace = load_trace_file((dir / "trace.jsonl").string());
    const Timeline labels = load_timeline_file(labels_path.string());
    std::vector<ActionInstance> releases;
    if (fs::exists(dir / "releases.jsonl")) releases = load_timeline_file((dir / "releases.jsonl").string()).instances;

    RecognizeOptions ro;
    ro.thresholds = thresholds;
    ro.scene = options.scene;
    ro.source = e.dir;
    const Recognition rec = recognize(trace, ontology, definitions, ro);
    EntryInput in{e.activity, &trace, &rec.scene, &labels, &releases, &rec.timeline};
    accumulate(report, in, ontology, thresholds, options.min_overlap);
  }
  return report;
}

std::string format_text(const Report& report) {
  std::ostringstream out;
  for (const Table* t : {&report.activities, &report.objects, &report.constraints}) {
    std::vector<std::vector<std::string>> grid;
    grid.push_back({t->corner});
    for (const auto& c : t->columns) grid.back().push_back(c);
    for (std::size_t r = 0; r < t->rows.size(); ++r) {
      grid.push_back({t->rows[r]});
      for (std::size_t c = 0; c < t->columns.size(); ++c) {
        const Cell* cell = t->find(t->rows[r], t->columns[c]);
        grid.back().push_back(cell ? rate_text(*cell) : "---");
      }
    }
    std::vector<std::size_t> width(t->columns.size() + 1, 0);
    for (const auto& line : grid) {
      for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    std::string rule = "+";
    for (std::size_t w : width) rule += std::string(w + 2, '-') + "+";
    out << t->title << "\n" << rule << "\n";
    for (std::size_t l = 0; l < grid.size(); ++l) {
      out << "|";
      for (std::size_t c = 0; c < grid[l].size(); ++c) {
        out << ' ' << grid[l][c] << std::string(width[c] - grid[l][c].size(), ' ') << " |";
      }
      out << "\n";
      if (l == 0) out << rule << "\n";
    }
    out << rule << "\n\n";
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "entries %zu  labels %zu  recognized %zu  matched %zu  precision %.3f  recall %.3f\n",
                report.entries, report.labels, report.recognized, report.matched, report.precision(),
                report.recall());
  out << buf;
  return out.str();
}

std::string format_csv(const Report& report) {
  std::ostringstream out;
  out << "table,row,column,hits,total,rate\n";
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  const std::pair<const char*, const Table*> tables[] = {
      {"activity", &report.activities}, {"object", &report.objects}, {"constraint", &report.constraints}};
  for (const auto& [name, t] : tables) {
    for (const auto& row : t->rows) {
      for (const auto& col : t->columns) {
        const Cell* cell = t->find(row, col);
        const Cell c = cell ? *cell : Cell{};
        out << name << ',' << quote(row) << ',' << quote(col) << ',' << c.hits << ',' << c.total << ','
            << (c.rate() ? rate_text(c) : "") << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace actrec
