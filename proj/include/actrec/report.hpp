#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "actrec/action_dsl.hpp"
#include "actrec/constraints.hpp"
#include "actrec/ontology.hpp"
#include "actrec/recognizer.hpp"
#include "actrec/scene.hpp"
#include "actrec/trace.hpp"

namespace actrec {

/// Intersection over union of two inclusive frame intervals.
double interval_overlap(std::uint64_t a_start, std::uint64_t a_end, std::uint64_t b_start, std::uint64_t b_end);

/// One-to-one assignment of ground-truth labels to recognized instances with
/// the same action and binding and overlap >= `min_overlap`. Labels are
/// taken in order; each picks the best-overlapping unused instance.
struct LabelMatch {
  std::vector<std::optional<std::size_t>> label_to_instance;
  std::size_t labels = 0;
  std::size_t recognized = 0;
  std::size_t matched = 0;
};

LabelMatch match_labels(const Timeline& labels, const Timeline& recognized, double min_overlap = 0.5);

struct Cell {
  std::size_t hits = 0;
  std::size_t total = 0;

  std::optional<double> rate() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(total);
  }
};

struct Table {
  std::string title;
  std::string corner;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> cells;

  Cell& at(const std::string& row, const std::string& column);
  const Cell* find(const std::string& row, const std::string& column) const;
};

/// Success rates in three shapes: action x activity, active object x action
/// and active object x constraint.
struct Report {
  Table activities;
  Table objects;
  Table constraints;
  std::size_t entries = 0;
  std::size_t labels = 0;
  std::size_t recognized = 0;
  std::size_t matched = 0;

  Report();
  double precision() const { return recognized == 0 ? 1.0 : static_cast<double>(matched) / recognized; }
  double recall() const { return labels == 0 ? 1.0 : static_cast<double>(matched) / labels; }
};

/// Constraints a label of `action` is expected to satisfy somewhere inside
/// its interval. Empty for actions that are not scored per constraint.
const std::vector<ConstraintId>& scored_constraints(const std::string& action);

struct EntryInput {
  std::string activity;
  const Trace* trace = nullptr;
  const SceneState* scene = nullptr;
  const Timeline* labels = nullptr;
  /// Off-table releases, scored like a Place without table membership.
  const std::vector<ActionInstance>* releases = nullptr;
  const Timeline* recognized = nullptr;
};

void accumulate(Report& report, const EntryInput& entry, const Ontology& ontology, const Thresholds& thresholds,
                double min_overlap = 0.5);

struct ReportOptions {
  double min_overlap = 0.5;
  /// Replaces the thresholds stored in the corpus manifest.
  std::optional<Thresholds> thresholds;
  SceneOptions scene;
};

/// Recognizes every corpus entry and scores it against its labels. Throws
/// InputError for a missing manifest or labels and for an empty corpus.
Report evaluate_corpus(const std::string& corpus_dir, const Ontology& ontology,
                       const std::vector<ActionDefinition>& definitions, const ReportOptions& options = {});

/// Fixed-width text tables, "---" where a cell has no samples.
std::string format_text(const Report& report);
/// One header row, then table,row,column,hits,total,rate records.
std::string format_csv(const Report& report);

}  // namespace actrec
