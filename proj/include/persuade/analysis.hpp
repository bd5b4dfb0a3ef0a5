#pragma once

// Intention points, group summaries, concern x type selection tables and
// Pearson chi-square tests.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "persuade/argument_kb.hpp"
#include "persuade/dialogue.hpp"

namespace persuade {

/// ordinal(final) - ordinal(initial), in [-4, 4].
constexpr int intention_points(IntentionLevel initial, IntentionLevel final_level) {
  return ordinal(final_level) - ordinal(initial);
}

/// Points of a finished session. Throws SessionNotDone.
int intention_points(const Session& session);

struct GroupSummary {
  std::size_t n_participants = 0;
  long sum_intention_points = 0;
  double avg_intention_points = 0.0;
  std::size_t n_harvested = 0;
  long sum_disagreed = 0;
  double avg_disagreed = 0.0;
  std::size_t n_better = 0;
  std::size_t n_worse = 0;

  bool operator==(const GroupSummary&) const = default;
};

struct GroupBy {
  bool variant = false;
  bool policy = true;
  bool concern = false;

  /// Comma-separated subset of "variant,policy,concern".
  static GroupBy parse(std::string_view spec);
};

struct GroupKey {
  std::optional<Variant> variant;
  std::optional<Policy> policy;
  std::optional<Concern> concern;

  std::string label() const;  // e.g. "I/strategic/Health", "all"
  auto operator<=>(const GroupKey&) const = default;
};

class IncompleteSession : public std::runtime_error {
 public:
  explicit IncompleteSession(const std::string& id)
      : std::runtime_error("session '" + id + "' is not done") {}
};

/// Summary over all given sessions. Throws IncompleteSession.
GroupSummary summarize(std::span<const Session> sessions);
std::map<GroupKey, GroupSummary> summarize(std::span<const Session> sessions, GroupBy by);

/// Sum with the average in parentheses, e.g. "32 (0.64)", "10 (0.2)".
std::string format_sum_avg(long sum, double avg);
/// Up to `max_decimals` places, trailing zeros dropped.
std::string format_decimal(double value, int max_decimals = 2);
/// Three decimals, or "<0.001".
std::string format_p_value(double p);

// ---------------------------------------------------------------------------
// Contingency tables

class ContingencyTable {
 public:
  ContingencyTable() = default;
  /// Throws std::invalid_argument on ragged rows, negative cells, or an
  /// all-zero table.
  explicit ContingencyTable(std::vector<std::vector<std::int64_t>> cells);

  /// "5,22;17,9" -> 2x2.
  static ContingencyTable parse(std::string_view text);

  std::size_t rows() const { return cells_.size(); }
  std::size_t cols() const { return cells_.empty() ? 0 : cells_.front().size(); }
  std::int64_t at(std::size_t r, std::size_t c) const { return cells_[r][c]; }
  std::int64_t row_sum(std::size_t r) const;
  std::int64_t col_sum(std::size_t c) const;
  std::int64_t total() const;
  const std::vector<std::vector<std::int64_t>>& cells() const { return cells_; }

  std::string to_string() const;  // inverse of parse
  bool operator==(const ContingencyTable&) const = default;

 private:
  std::vector<std::vector<std::int64_t>> cells_;
};

struct ChiSquareResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

class ZeroMarginal : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Upper tail P(X >= statistic) of the chi-square distribution,
/// Q(df/2, statistic/2).
double chi_square_sf(double statistic, int df);

/// Pearson statistic from row/column marginals. Without `yates` no continuity
/// correction is applied; with it, 2x2 tables use |O - E| - 1/2.
/// Throws ZeroMarginal if any row or column sums to zero.
ChiSquareResult chi_square(const ContingencyTable& table, bool yates = false);

// ---------------------------------------------------------------------------
// Concern x argument type selections

struct ParticipantSelection {
  ConcernLabel concern = ConcernLabel::Unlabeled;
  std::vector<std::string> selected_ids;
};

/// Selected vs not, concern-matched types vs the rest, for one concern group.
struct MatchedSplit {
  std::int64_t matched_selected = 0;
  std::int64_t matched_available = 0;
  std::int64_t other_selected = 0;
  std::int64_t other_available = 0;

  /// [[matched selected, matched not], [other selected, other not]]
  ContingencyTable table() const;
};

/// Types addressing a concern: Health -> personal consequences,
/// Environment -> impersonal consequences, Both -> all four consequential
/// types, Unlabeled -> none.
std::vector<ArgumentType> concern_matched_types(ConcernLabel label);

struct ConcernTypeTable {
  std::map<ConcernLabel, std::map<ArgumentType, std::int64_t>> counts;
  std::map<ConcernLabel, std::int64_t> participants;

  std::int64_t count(ConcernLabel label, ArgumentType type) const;
  /// Each participant saw `shown_per_type` arguments of each of the six types.
  MatchedSplit matched_split(ConcernLabel label, int shown_per_type = 3) const;
};

/// Throws UnknownArgumentId (corpus.hpp) for ids missing from the KB.
ConcernTypeTable concern_type_table(std::span<const ParticipantSelection> selections,
                                    const KnowledgeBase& kb);

// ---------------------------------------------------------------------------
// Baseline vs strategic comparison

struct ArmCounts {
  std::int64_t better = 0;
  std::int64_t worse = 0;
  std::int64_t n = 0;
  bool operator==(const ArmCounts&) const = default;
};

struct ArmCountTable {
  std::map<std::tuple<Variant, Policy, Concern>, ArmCounts> arms;

  const ArmCounts& get(Variant v, Policy p, Concern c) const;
  ArmCounts pooled(Variant v, Policy p) const;  // both concern arms
};

/// Better/worse counts and group sizes of the four published chatbots.
ArmCountTable published_arm_counts();

/// Counts per (variant, policy, concern) from finished sessions.
ArmCountTable arm_counts(std::span<const Session> sessions);

struct ComparisonRow {
  Variant variant = Variant::I;
  std::optional<Concern> concern;  // nullopt: both concern arms pooled
  ContingencyTable table;          // [[better, not better] baseline, [..] strategic]
  ChiSquareResult result;
};

/// Six rows: per variant, Health, Environment, then pooled.
std::vector<ComparisonRow> compare_policies(const ArmCountTable& counts, bool yates = false);

}  // namespace persuade
