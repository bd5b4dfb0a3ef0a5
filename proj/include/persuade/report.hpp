#pragma once

#include <span>
#include <string>
#include <vector>

#include "persuade/analysis.hpp"

namespace persuade {

/// Plain-text table plus one machine-readable record per row.
struct Report {
  std::string title;
  std::string text;
  std::vector<Json> records;
};

/// Left-aligned first column, right-aligned remaining columns.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

/// Per-variant intention table: participants, summed intention points,
/// harvested arguments and average disagreements, by policy x concern with
/// policy totals.
Report intention_report(std::span<const Session> sessions, Variant variant);

/// Participants changing intention to the better / worse per arm.
Report change_report(const ArmCountTable& counts);

/// Baseline vs strategic chi-square p-values.
Report comparison_report(const std::vector<ComparisonRow>& rows);

/// Generic group-by summary.
Report group_report(const std::map<GroupKey, GroupSummary>& groups);

}  // namespace persuade
