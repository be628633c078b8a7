#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "fsleval/class_universe.hpp"
#include "fsleval/coverage.hpp"
#include "fsleval/flip.hpp"
#include "fsleval/learners.hpp"
#include "fsleval/splits.hpp"
#include "fsleval/task_model.hpp"

namespace fsleval {

// Shortest exact decimal for a double (printf %.17g trimmed is overkill for
// CSV readers; 17 significant digits always round-trip).
std::string format_double(double v);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

nlohmann::json split_to_json(const SplitSpec& split);
SplitSpec split_from_json(const nlohmann::json& j);

nlohmann::json universe_to_json(const ClassUniverse& universe);
ClassUniverse universe_from_json(const nlohmann::json& j);

nlohmann::json catalog_to_json(const ItemCatalog& catalog);
ItemCatalog catalog_from_json(const nlohmann::json& j);

// Partition result with the cut weight and set sizes; attribute names resolve
// indices to labels when provided.
nlohmann::json bipartition_to_json(const Bipartition& partition,
                                   const std::vector<std::string>& names = {});

nlohmann::json distribution_to_json(const TaskDistribution& dist);
// Accepts the tagged form written by distribution_to_json, or a bare JSON
// array of tasks (class tuples as int arrays, attribute pairs as
// {"attr_pair": [a, b]}) which loads as a finite task list.
TaskDistribution distribution_from_json(const nlohmann::json& j);

nlohmann::json sampler_to_json(const SupportSampler& sampler);
SupportSampler sampler_from_json(const nlohmann::json& j);

nlohmann::json snapshot_to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(const nlohmann::json& j);

// JSON-lines trajectory: one meta line (diverged flag, per-distribution
// estimate lists), then one line per snapshot.
void trajectory_to_jsonl(const SnapshotTrajectory& trajectory, std::ostream& out);
SnapshotTrajectory trajectory_from_jsonl(std::istream& in);

nlohmann::json flip_report_to_json(const FlipReport& report);

nlohmann::json bound_report_to_json(const TupleDistributionModel& model,
                                    const BoundReport& report);

// CSV with leading `# key=value` comment lines (config hash etc.), one header
// row, then data rows. All doubles must already be formatted by the caller
// (use format_double) so every writer produces identical bytes.
void write_csv(std::ostream& out,
               const std::vector<std::pair<std::string, std::string>>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace fsleval
