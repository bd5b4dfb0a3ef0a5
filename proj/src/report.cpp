#include "persuade/report.hpp"

#include <algorithm>
#include <sstream>

namespace persuade {

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  };
  widen(header);
  for (const auto& r : rows) widen(r);

  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < width.size(); ++c) {
      const std::string cell = c < row.size() ? row[c] : "";
      const std::string pad(width[c] - cell.size(), ' ');
      if (c == 0)
        os << cell << pad;
      else
        os << "  " << pad << cell;
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

Report intention_report(std::span<const Session> sessions, Variant variant) {
  std::vector<Session> selected;
  for (const auto& s : sessions)
    if (s.config.variant == variant) selected.push_back(s);
  const auto cells = summarize(selected, GroupBy{false, true, true});
  const auto totals = summarize(selected, GroupBy{false, true, false});

  auto cell = [&](Policy p, std::optional<Concern> c) {
    GroupKey k;
    k.policy = p;
    k.concern = c;
    const auto& source = c ? cells : totals;
    const auto it = source.find(k);
    return it == source.end() ? GroupSummary{} : it->second;
  };

  Report report;
  report.title = "Variant " + std::string(to_string(variant));
  std::vector<std::string> header = {report.title};
  std::vector<GroupSummary> columns;
  std::vector<Json> keys;
  for (auto p : {Policy::Baseline, Policy::Strategic}) {
    const std::string name = p == Policy::Baseline ? "Baseline" : "Strategic";
    for (auto c : {std::optional<Concern>(Concern::Health),
                   std::optional<Concern>(Concern::Environment), std::optional<Concern>()}) {
      header.push_back(name + " " + (c ? std::string(to_string(*c)) : "total/avg"));
      columns.push_back(cell(p, c));
      keys.push_back({{"variant", std::string(to_string(variant))},
                      {"policy", std::string(to_string(p))},
                      {"concern", c ? std::string(to_string(*c)) : "all"}});
    }
  }

  std::vector<std::vector<std::string>> rows(4);
  rows[0].push_back("No of participants");
  rows[1].push_back("Sum of intention points");
  rows[2].push_back("No of harvested arguments");
  rows[3].push_back("Avg no of disagreed CAs (out of 12)");
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& g = columns[i];
    const bool total_column = i % 3 == 2;
    rows[0].push_back(std::to_string(g.n_participants));
    rows[1].push_back(total_column ? format_sum_avg(g.sum_intention_points, g.avg_intention_points)
                                   : std::to_string(g.sum_intention_points));
    rows[2].push_back(std::to_string(g.n_harvested));
    rows[3].push_back(format_decimal(g.avg_disagreed, 2));

    Json rec = keys[i];
    rec["table"] = "intention";
    rec["n_participants"] = g.n_participants;
    rec["sum_intention_points"] = g.sum_intention_points;
    rec["avg_intention_points"] = g.avg_intention_points;
    rec["n_harvested"] = g.n_harvested;
    rec["avg_disagreed"] = g.avg_disagreed;
    rec["n_better"] = g.n_better;
    rec["n_worse"] = g.n_worse;
    report.records.push_back(rec);
  }
  report.text = render_table(header, rows);
  return report;
}

Report change_report(const ArmCountTable& counts) {
  Report report;
  report.title = "Change of intention";
  std::vector<std::string> header = {"Participants"};
  for (auto p : {Policy::Baseline, Policy::Strategic})
    for (auto c : {Concern::Health, Concern::Environment})
      for (const char* dir : {"Worse", "Better"})
        header.push_back(std::string(to_string(p)) + " " + std::string(to_string(c)) + " " + dir);
  std::vector<std::vector<std::string>> rows;
  for (auto v : {Variant::I, Variant::II}) {
    std::vector<std::string> row = {"Variant " + std::string(to_string(v))};
    for (auto p : {Policy::Baseline, Policy::Strategic})
      for (auto c : {Concern::Health, Concern::Environment}) {
        const auto& a = counts.get(v, p, c);
        row.push_back(std::to_string(a.worse));
        row.push_back(std::to_string(a.better));
        report.records.push_back({{"table", "change"},
                                  {"variant", std::string(to_string(v))},
                                  {"policy", std::string(to_string(p))},
                                  {"concern", std::string(to_string(c))},
                                  {"n", a.n},
                                  {"better", a.better},
                                  {"worse", a.worse}});
      }
    rows.push_back(std::move(row));
  }
  report.text = render_table(header, rows);
  return report;
}

Report comparison_report(const std::vector<ComparisonRow>& rows_in) {
  Report report;
  report.title = "Baseline vs strategic (Pearson chi-square)";
  std::vector<std::string> header = {"Chatbot"};
  std::vector<std::string> row = {"p-value Chi-Square"};
  for (const auto& r : rows_in) {
    const std::string concern = r.concern ? std::string(to_string(*r.concern)) : "Both";
    header.push_back("Variant " + std::string(to_string(r.variant)) + " " + concern);
    row.push_back(format_p_value(r.result.p_value));
    report.records.push_back({{"table", "comparison"},
                              {"variant", std::string(to_string(r.variant))},
                              {"concern", concern},
                              {"contingency", r.table.to_string()},
                              {"statistic", r.result.statistic},
                              {"df", r.result.df},
                              {"p_value", r.result.p_value},
                              {"p_display", format_p_value(r.result.p_value)}});
  }
  report.text = render_table(header, {row});
  return report;
}

Report group_report(const std::map<GroupKey, GroupSummary>& groups) {
  Report report;
  report.title = "Group summary";
  std::vector<std::vector<std::string>> rows;
  for (const auto& [key, g] : groups) {
    rows.push_back({key.label(), std::to_string(g.n_participants),
                    format_sum_avg(g.sum_intention_points, g.avg_intention_points),
                    std::to_string(g.n_harvested), format_decimal(g.avg_disagreed, 2),
                    std::to_string(g.n_better), std::to_string(g.n_worse)});
    report.records.push_back({{"table", "group"},
                              {"group", key.label()},
                              {"n_participants", g.n_participants},
                              {"sum_intention_points", g.sum_intention_points},
                              {"avg_intention_points", g.avg_intention_points},
                              {"n_harvested", g.n_harvested},
                              {"avg_disagreed", g.avg_disagreed},
                              {"n_better", g.n_better},
                              {"n_worse", g.n_worse}});
  }
  report.text = render_table(
      {"Group", "Participants", "Intention points", "Harvested", "Avg disagreed", "Better", "Worse"},
      rows);
  return report;
}

}  // namespace persuade
