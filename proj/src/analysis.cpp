#include "persuade/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "persuade/corpus.hpp"

namespace persuade {

int intention_points(const Session& session) {
  if (!session.done() || !session.initial_intention || !session.final_intention)
    throw SessionNotDone();
  return intention_points(*session.initial_intention, *session.final_intention);
}

GroupBy GroupBy::parse(std::string_view spec) {
  GroupBy by{false, false, false};
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto end = spec.find(',', start);
    if (end == std::string_view::npos) end = spec.size();
    const auto field = spec.substr(start, end - start);
    if (field == "variant")
      by.variant = true;
    else if (field == "policy")
      by.policy = true;
    else if (field == "concern")
      by.concern = true;
    else if (!field.empty())
      throw std::invalid_argument("unknown group-by field '" + std::string(field) + "'");
    start = end + 1;
  }
  return by;
}

std::string GroupKey::label() const {
  std::string out;
  auto add = [&](std::string_view part) {
    if (!out.empty()) out += "/";
    out += part;
  };
  if (variant) add(to_string(*variant));
  if (policy) add(to_string(*policy));
  if (concern) add(to_string(*concern));
  return out.empty() ? "all" : out;
}

GroupSummary summarize(std::span<const Session> sessions) {
  GroupSummary g;
  for (const auto& s : sessions) {
    if (!s.done()) throw IncompleteSession(s.id);
    const int points = intention_points(s);
    ++g.n_participants;
    g.sum_intention_points += points;
    g.n_harvested += s.harvested.size();
    g.sum_disagreed += s.disagreements;
    if (points > 0) ++g.n_better;
    if (points < 0) ++g.n_worse;
  }
  if (g.n_participants > 0) {
    const auto n = static_cast<double>(g.n_participants);
    g.avg_intention_points = static_cast<double>(g.sum_intention_points) / n;
    g.avg_disagreed = static_cast<double>(g.sum_disagreed) / n;
  }
  return g;
}

std::map<GroupKey, GroupSummary> summarize(std::span<const Session> sessions, GroupBy by) {
  std::map<GroupKey, std::vector<Session>> buckets;
  for (const auto& s : sessions) {
    if (!s.done()) throw IncompleteSession(s.id);
    GroupKey key;
    if (by.variant) key.variant = s.config.variant;
    if (by.policy) key.policy = s.config.policy;
    if (by.concern) key.concern = s.concern;
    buckets[key].push_back(s);
  }
  std::map<GroupKey, GroupSummary> out;
  for (const auto& [key, group] : buckets) out[key] = summarize(group);
  return out;
}

std::string format_decimal(double value, int max_decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(max_decimals) << value;
  std::string s = os.str();
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string format_sum_avg(long sum, double avg) {
  return std::to_string(sum) + " (" + format_decimal(avg, 2) + ")";
}

std::string format_p_value(double p) {
  if (p < 0.001) return "<0.001";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << p;
  return os.str();
}

ContingencyTable::ContingencyTable(std::vector<std::vector<std::int64_t>> cells)
    : cells_(std::move(cells)) {
  if (cells_.empty() || cells_.front().empty())
    throw std::invalid_argument("contingency table is empty");
  for (const auto& row : cells_) {
    if (row.size() != cells_.front().size())
      throw std::invalid_argument("contingency table rows differ in length");
    for (auto v : row)
      if (v < 0) throw std::invalid_argument("contingency table has a negative count");
  }
  if (total() == 0) throw std::invalid_argument("contingency table has no positive count");
}

ContingencyTable ContingencyTable::parse(std::string_view text) {
  std::vector<std::vector<std::int64_t>> cells;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    std::vector<std::int64_t> row;
    std::istringstream in{std::string(text.substr(start, end - start))};
    std::string cell;
    while (std::getline(in, cell, ',')) {
      std::size_t used = 0;
      try {
        row.push_back(std::stoll(cell, &used));
      } catch (const std::exception&) {
        throw std::invalid_argument("bad table cell '" + cell + "'");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos)
        throw std::invalid_argument("bad table cell '" + cell + "'");
    }
    if (!row.empty()) cells.push_back(std::move(row));
    start = end + 1;
  }
  return ContingencyTable(std::move(cells));
}

std::int64_t ContingencyTable::row_sum(std::size_t r) const {
  std::int64_t s = 0;
  for (auto v : cells_[r]) s += v;
  return s;
}

std::int64_t ContingencyTable::col_sum(std::size_t c) const {
  std::int64_t s = 0;
  for (const auto& row : cells_) s += row[c];
  return s;
}

std::int64_t ContingencyTable::total() const {
  std::int64_t s = 0;
  for (std::size_t r = 0; r < cells_.size(); ++r) s += row_sum(r);
  return s;
}

std::string ContingencyTable::to_string() const {
  std::string out;
  for (std::size_t r = 0; r < rows(); ++r) {
    if (r) out += ";";
    for (std::size_t c = 0; c < cols(); ++c) {
      if (c) out += ",";
      out += std::to_string(cells_[r][c]);
    }
  }
  return out;
}

double chi_square_sf(double statistic, int df) {
  if (df < 1) throw std::invalid_argument("degrees of freedom must be positive");
  if (!(statistic > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

ChiSquareResult chi_square(const ContingencyTable& table, bool yates) {
  const auto rows = table.rows(), cols = table.cols();
  if (rows < 2 || cols < 2)
    throw std::invalid_argument("chi-square needs at least a 2x2 table");
  for (std::size_t r = 0; r < rows; ++r)
    if (table.row_sum(r) == 0) throw ZeroMarginal("row " + std::to_string(r) + " sums to zero");
  for (std::size_t c = 0; c < cols; ++c)
    if (table.col_sum(c) == 0)
      throw ZeroMarginal("column " + std::to_string(c) + " sums to zero");

  ChiSquareResult out;
  out.df = static_cast<int>((rows - 1) * (cols - 1));
  const bool correct = yates && out.df == 1;
  const auto n = static_cast<double>(table.total());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double expected =
          static_cast<double>(table.row_sum(r)) * static_cast<double>(table.col_sum(c)) / n;
      double diff = std::abs(static_cast<double>(table.at(r, c)) - expected);
      if (correct) diff = std::max(0.0, diff - 0.5);
      out.statistic += diff * diff / expected;
    }
  }
  out.p_value = chi_square_sf(out.statistic, out.df);
  return out;
}

ContingencyTable MatchedSplit::table() const {
  return ContingencyTable({{matched_selected, matched_available - matched_selected},
                           {other_selected, other_available - other_selected}});
}

std::vector<ArgumentType> concern_matched_types(ConcernLabel label) {
  switch (label) {
    case ConcernLabel::Health: return {ArgumentType::NPC, ArgumentType::PPC};
    case ConcernLabel::Environment: return {ArgumentType::NIC, ArgumentType::PIC};
    case ConcernLabel::Both:
      return {ArgumentType::NPC, ArgumentType::PPC, ArgumentType::NIC, ArgumentType::PIC};
    case ConcernLabel::Unlabeled: return {};
  }
  return {};
}

std::int64_t ConcernTypeTable::count(ConcernLabel label, ArgumentType type) const {
  const auto it = counts.find(label);
  if (it == counts.end()) return 0;
  const auto jt = it->second.find(type);
  return jt == it->second.end() ? 0 : jt->second;
}

MatchedSplit ConcernTypeTable::matched_split(ConcernLabel label, int shown_per_type) const {
  const auto matched = concern_matched_types(label);
  const auto it = participants.find(label);
  const std::int64_t m = it == participants.end() ? 0 : it->second;
  MatchedSplit split;
  for (auto type : kAllArgumentTypes) {
    const bool is_matched = std::find(matched.begin(), matched.end(), type) != matched.end();
    (is_matched ? split.matched_selected : split.other_selected) += count(label, type);
    (is_matched ? split.matched_available : split.other_available) += shown_per_type * m;
  }
  return split;
}

ConcernTypeTable concern_type_table(std::span<const ParticipantSelection> selections,
                                    const KnowledgeBase& kb) {
  ConcernTypeTable out;
  for (const auto& p : selections) {
    ++out.participants[p.concern];
    auto& row = out.counts[p.concern];
    for (const auto& id : p.selected_ids) {
      const auto* counter = kb.find_counter(id);
      if (!counter) throw UnknownArgumentId(id);
      ++row[counter->type];
    }
  }
  return out;
}

const ArmCounts& ArmCountTable::get(Variant v, Policy p, Concern c) const {
  static const ArmCounts empty{};
  const auto it = arms.find({v, p, c});
  return it == arms.end() ? empty : it->second;
}

ArmCounts ArmCountTable::pooled(Variant v, Policy p) const {
  ArmCounts out;
  for (auto c : {Concern::Health, Concern::Environment}) {
    const auto& a = get(v, p, c);
    out.better += a.better;
    out.worse += a.worse;
    out.n += a.n;
  }
  return out;
}

ArmCountTable published_arm_counts() {
  using enum Variant;
  ArmCountTable t;
  // {better, worse, n}
  t.arms[{I, Policy::Baseline, Concern::Health}] = {5, 1, 27};
  t.arms[{I, Policy::Baseline, Concern::Environment}] = {7, 2, 23};
  t.arms[{I, Policy::Strategic, Concern::Health}] = {17, 0, 26};
  t.arms[{I, Policy::Strategic, Concern::Environment}] = {11, 0, 24};
  t.arms[{II, Policy::Baseline, Concern::Health}] = {3, 4, 29};
  t.arms[{II, Policy::Baseline, Concern::Environment}] = {5, 3, 21};
  t.arms[{II, Policy::Strategic, Concern::Health}] = {10, 0, 28};
  t.arms[{II, Policy::Strategic, Concern::Environment}] = {12, 0, 22};
  return t;
}

ArmCountTable arm_counts(std::span<const Session> sessions) {
  ArmCountTable t;
  for (const auto& s : sessions) {
    if (!s.done() || !s.concern) throw IncompleteSession(s.id);
    auto& a = t.arms[{s.config.variant, s.config.policy, *s.concern}];
    const int points = intention_points(s);
    ++a.n;
    if (points > 0) ++a.better;
    if (points < 0) ++a.worse;
  }
  return t;
}

std::vector<ComparisonRow> compare_policies(const ArmCountTable& counts, bool yates) {
  std::vector<ComparisonRow> out;
  auto row_for = [](const ArmCounts& a) {
    return std::vector<std::int64_t>{a.better, a.n - a.better};
  };
  for (auto variant : {Variant::I, Variant::II}) {
    for (std::optional<Concern> concern :
         {std::optional<Concern>(Concern::Health), std::optional<Concern>(Concern::Environment),
          std::optional<Concern>()}) {
      const ArmCounts base = concern ? counts.get(variant, Policy::Baseline, *concern)
                                     : counts.pooled(variant, Policy::Baseline);
      const ArmCounts strat = concern ? counts.get(variant, Policy::Strategic, *concern)
                                      : counts.pooled(variant, Policy::Strategic);
      ComparisonRow row;
      row.variant = variant;
      row.concern = concern;
      row.table = ContingencyTable({row_for(base), row_for(strat)});
      row.result = chi_square(row.table, yates);
      out.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace persuade
