// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "persuade/analysis.hpp"
#include "persuade/corpus.hpp"
#include "persuade/random.hpp"
#include "persuade/report.hpp"
#include "persuade/session_log.hpp"
#include "persuade/simulation.hpp"
#include "test_support.hpp"

using namespace persuade;
using namespace persuade::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failure details; a criterion passes when none were recorded.
struct Failures {
  std::vector<std::string> items;
  void check(bool ok, const std::string& what) {
    if (!ok) items.push_back(what);
  }
  std::string summary() const {
    std::string out;
    for (std::size_t i = 0; i < items.size() && i < 3; ++i) out += (i ? "; " : "") + items[i];
    if (items.size() > 3) out += "; +" + std::to_string(items.size() - 3) + " more";
    return out;
  }
};

// Closed-form 2x2 Pearson statistic and its df = 1 upper tail.
double pearson_2x2(const ContingencyTable& t) {
  const double a = t.at(0, 0), b = t.at(0, 1), c = t.at(1, 0), d = t.at(1, 1);
  const double n = a + b + c + d;
  return n * (a * d - b * c) * (a * d - b * c) / ((a + b) * (c + d) * (a + c) * (b + d));
}
double df1_tail(double x) { return std::erfc(std::sqrt(x / 2.0)); }

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------------------

Failures policy_comparison() {
  Failures f;
  const auto start = Clock::now();
  const auto counts = published_arm_counts();
  const auto rows = compare_policies(counts);
  const double elapsed = seconds_since(start);

  struct Expected {
    Variant variant;
    std::optional<Concern> concern;
    double target;  // < 0: below 0.001
    double tol;
  };
  const std::vector<Expected> expected = {
      {Variant::I, Concern::Health, -1, 0},       {Variant::I, Concern::Environment, 0.278, 0.001},
      {Variant::I, std::nullopt, 0.001, 0.0005},  {Variant::II, Concern::Health, 0.022, 0.0005},
      {Variant::II, Concern::Environment, 0.039, 0.0005},
      {Variant::II, std::nullopt, 0.002, 0.0005}};
  f.check(rows.size() == expected.size(), "expected six rows");
  for (std::size_t i = 0; i < rows.size() && i < expected.size(); ++i) {
    const auto& r = rows[i];
    const auto& e = expected[i];
    const std::string label = std::string(to_string(e.variant)) + "/" +
                              (e.concern ? std::string(to_string(*e.concern)) : "Both");
    f.check(r.variant == e.variant && r.concern == e.concern, label + " row order");

    // rebuild the table from the counts: better vs not better, baseline over strategic
    auto arm = [&](Policy p) {
      return e.concern ? counts.get(e.variant, p, *e.concern) : counts.pooled(e.variant, p);
    };
    const auto b = arm(Policy::Baseline), s = arm(Policy::Strategic);
    const ContingencyTable table({{b.better, b.n - b.better}, {s.better, s.n - s.better}});
    f.check(r.table == table, label + " table " + r.table.to_string());

    const double oracle_stat = pearson_2x2(table);
    f.check(std::abs(r.result.statistic - oracle_stat) < 1e-9, label + " statistic");
    f.check(std::abs(r.result.p_value - df1_tail(oracle_stat)) < 1e-9, label + " p vs erfc");
    if (e.target < 0)
      f.check(r.result.p_value < 0.001, label + " p=" + fmt(r.result.p_value));
    else
      f.check(std::abs(r.result.p_value - e.target) <= e.tol, label + " p=" + fmt(r.result.p_value));
  }
  f.check(elapsed < 1.0, "runtime " + fmt(elapsed) + " s");
  return f;
}

Failures concern_groups() {
  Failures f;
  const auto table = concern_type_table(concern_selection_fixture(), full_kb());
  const auto health = table.matched_split(ConcernLabel::Health).table();
  f.check(health == ContingencyTable::parse("120,48;70,266"), "health table " + health.to_string());
  for (auto label : {ConcernLabel::Health, ConcernLabel::Environment, ConcernLabel::Both}) {
    const auto t = table.matched_split(label).table();
    const auto r = chi_square(t);
    const std::string name(to_string(label));
    f.check(std::abs(r.p_value - df1_tail(pearson_2x2(t))) < 1e-12, name + " p vs erfc");
    f.check(r.p_value < 0.001, name + " p=" + fmt(r.p_value) + " table " + t.to_string());
  }
  return f;
}

Failures quadrature() {
  Failures f;
  const auto grid = quadrature_grid();
  f.check(grid.size() == 15, "grid size");
  for (const auto& [x, df] : grid) {
    const double diff = std::abs(chi_square_sf(x, df) - upper_tail_by_quadrature(x, df));
    f.check(diff < 1e-6, "x=" + fmt(x) + " df=" + std::to_string(df) + " diff=" + fmt(diff));
  }
  return f;
}

Failures protocol_conformance() {
  Failures f;
  const DialogueEngine engine(full_kb());
  Rng rng(610);
  int sessions = 0;
  for (auto variant : {Variant::I, Variant::II})
    for (auto policy : {Policy::Baseline, Policy::Strategic})
      for (auto concern : {Concern::Health, Concern::Environment})
        for (int pattern = 0; pattern < 6; ++pattern) {
          DialogueConfig config;
          config.variant = variant;
          config.policy = policy;
          config.seed = rng();
          Script script;
          script.concern = concern;
          for (int i = 0; i < 12; ++i)
            script.stances[static_cast<std::size_t>(i)] =
                pattern == 0 ? true : pattern == 1 ? false : pattern == 2 ? i % 2 == 0
                                                                          : bernoulli(rng, 0.5);
          if (pattern == 5) script.reply = "taste";  // short reply triggers the expand prompt

          const std::string id = std::string(to_string(variant)) + "-" +
                                 std::string(to_string(policy)) + "-" +
                                 std::string(to_string(concern)) + "-" + std::to_string(pattern);
          const auto start = Clock::now();
          const Session s = run_script(engine, config, script, id);
          const double elapsed = seconds_since(start);
          ++sessions;

          for (const auto& v : protocol_violations(s, full_kb())) f.check(false, v);
          if (policy == Policy::Strategic) {
            const Scope scope = concern == Concern::Health ? Scope::Personal : Scope::Impersonal;
            for (const auto& cid : s.schedule)
              f.check(scope_of(full_kb().find_counter(cid)->type) == scope, id + " scope " + cid);
          }
          int disagreed = 0;
          for (bool agree : script.stances) disagreed += !agree;
          const auto harvested = harvest_count(s);
          f.check(variant == Variant::II ? harvested == 12
                                         : harvested == static_cast<std::size_t>(disagreed),
                  id + " harvest " + std::to_string(harvested));
          f.check(elapsed < 1.0, id + " took " + fmt(elapsed) + " s");
        }
  f.check(sessions == 48, "session count");
  return f;
}

std::string bot_events(const Session& s) {
  std::string out;
  for (const auto& e : s.events)
    if (e.actor == Actor::Bot) {
      auto j = to_json(s.id, e);
      j.erase("ts");
      out += j.dump() + "\n";
    }
  return out;
}

Failures replay_determinism() {
  Failures f;
  const DialogueEngine engine(full_kb());
  ModelTemplate t;
  t.reply_bank = default_reply_bank();
  const auto terse = terse_reply_bank();
  t.reply_bank.insert(t.reply_bank.end(), terse.begin(), terse.end());
  const ModelSampler sampler = [&](Rng& r) { return t.sample(r); };
  const auto arms = all_arms();
  std::size_t n = 0;
  for (const auto& arm : run_experiment(50, sampler, arms, engine, 611))
    for (const auto& s : arm.sessions) {
      ++n;
      std::ostringstream log;
      write_session_log(s, "default", log);
      std::istringstream in(log.str());
      try {
        const Session again = replay(engine, read_session_log(in));
        f.check(bot_events(again) == bot_events(s), s.id + " bot events differ");
        f.check(session_summary(again) == session_summary(s), s.id + " summary differs");
      } catch (const std::exception& e) {
        f.check(false, s.id + ": " + e.what());
      }
    }
  f.check(n == 200, "session count " + std::to_string(n));
  return f;
}

Failures pipeline_properties() {
  Failures f;
  auto load_corpus = [](const std::string& file) {
    std::vector<RawArgument> out;
    for (const auto& j : load_jsonl(data_path(file))) out.push_back(raw_argument_from_json(j));
    return out;
  };

  // partition and representative maximality on every fixture corpus
  std::vector<std::vector<RawArgument>> corpora = {load_corpus("fixtures/corpus.jsonl"),
                                                   load_corpus("fixtures/two_themes.jsonl")};
  const std::vector<std::string> vocab = {"meat", "good", "tastes", "protein", "cheap",
                                          "easy", "family", "filling", "quick", "iron"};
  Rng rng(612);
  for (int c = 0; c < 40; ++c) {
    std::vector<RawArgument> corpus;
    const auto n = 1 + uniform_index(rng, 25);
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      for (std::size_t w = 0, k = 1 + uniform_index(rng, 4); w < k; ++w)
        text += vocab[uniform_index(rng, vocab.size())] + " ";
      corpus.push_back({"r" + std::to_string(i), text});
    }
    corpora.push_back(std::move(corpus));
  }
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    const CorpusIndex index(corpora[c]);
    for (double threshold : {0.0, 0.2, 0.4, 0.7, 1.0}) {
      const auto result = cluster(corpora[c], threshold, 9);
      f.check(is_partition(corpora[c], result), "corpus " + std::to_string(c) + " not a partition");
      for (const auto& cl : result.clusters)
        f.check(representative_is_maximal(cl, index), "corpus " + std::to_string(c) +
                                                          " representative " + cl.representative);
    }
  }

  // top_k against a brute-force selection on random tallies
  const ArgumentType types[] = {ArgumentType::SUG, ArgumentType::NPC, ArgumentType::PIC};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<CounterArgument> candidates;
    const auto n = 1 + uniform_index(rng, 14);
    for (std::size_t i = 0; i < n; ++i) {
      CounterArgument c;
      c.id = "c" + std::to_string(i);
      c.text = "t";
      c.type = types[uniform_index(rng, 3)];
      candidates.push_back(c);
    }
    TallyResult totals;
    for (const auto& c : candidates)
      totals.per_argument[c.id] = {static_cast<int>(uniform_index(rng, 4)),
                                   static_cast<int>(uniform_index(rng, 4))};
    const int k = 1 + static_cast<int>(uniform_index(rng, 5));
    const auto by = static_cast<RankBy>(uniform_index(rng, 3));
    auto votes = [&](const std::string& id) {
      const auto& v = totals.per_argument.at(id);
      return by == RankBy::MeatEater ? v.meat_eater : by == RankBy::Vegetarian ? v.vegetarian
                                                                               : v.total();
    };
    for (const auto& g : top_k(totals, candidates, k, by).groups) {
      std::vector<std::string> got;
      for (const auto& c : g.ranked) got.push_back(c.id);
      f.check(got == top_k_by_selection(candidates, g.type, k, votes),
              "top_k trial " + std::to_string(trial));
    }
  }

  // label_concern against the regex oracle
  std::map<ConcernLabel, int> seen;
  const auto& fragments = explanation_fragments();
  for (int i = 0; i < 200; ++i) {
    std::string text = "I choose this because of";
    for (std::size_t j = 0, k = uniform_index(rng, 4); j < k; ++j)
      text += " " + fragments[uniform_index(rng, fragments.size())] + " and";
    const auto expected = label_by_regex(text);
    f.check(label_concern(text) == expected, "label '" + text + "'");
    ++seen[expected];
  }
  f.check(seen.size() == 4, "label fixture lacks a Health/Environment/Both/Unlabeled case");
  for (const std::string variant : {"healthy", "animals", "planet"})
    f.check(label_concern("it is " + variant) != ConcernLabel::Unlabeled, "variant " + variant);
  return f;
}

Failures summary_arithmetic() {
  Failures f;
  const DialogueEngine engine(full_kb());
  using L = IntentionLevel;
  std::vector<Session> sessions;
  long expected_sum = 0;
  // 10 x +2, 14 x +1, 2 x -1, 24 x 0
  for (int i = 0; i < 50; ++i) {
    L to = L::ProbablyWouldnt;
    if (i < 10) to = L::ProbablyWould;
    else if (i < 24) to = L::Might;
    else if (i < 26) to = L::DefinitelyWouldnt;
    expected_sum += ordinal(to) - ordinal(L::ProbablyWouldnt);
    sessions.push_back(finished_session(engine, "s" + std::to_string(i), Variant::I,
                                        Policy::Strategic,
                                        i % 2 ? Concern::Health : Concern::Environment,
                                        L::ProbablyWouldnt, to));
  }
  f.check(expected_sum == 32, "fixture sums to " + std::to_string(expected_sum));
  const auto g = summarize(sessions);
  f.check(g.sum_intention_points == 32, "sum " + std::to_string(g.sum_intention_points));
  f.check(std::abs(g.avg_intention_points - 0.64) < 1e-12, "avg " + fmt(g.avg_intention_points));
  f.check(format_sum_avg(g.sum_intention_points, g.avg_intention_points) == "32 (0.64)",
          "formatted " + format_sum_avg(g.sum_intention_points, g.avg_intention_points));
  f.check(intention_report(sessions, Variant::I).text.find("32 (0.64)") != std::string::npos,
          "report text lacks 32 (0.64)");
  return f;
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Failures()> run;
  };
  const std::vector<Criterion> criteria = {
      {"policy comparison p-values from published arm counts", policy_comparison},
      {"concern-group selection tables significant (p < 0.001)", concern_groups},
      {"chi-square p-values match quadrature oracle to 1e-6", quadrature},
      {"protocol conformance for all variant x policy x concern arms", protocol_conformance},
      {"replay determinism over 200 simulated sessions", replay_determinism},
      {"pipeline properties (partition, representative, top_k, labels)", pipeline_properties},
      {"summary arithmetic: 50 sessions format as 32 (0.64)", summary_arithmetic},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Failures f;
    try {
      f = c.run();
    } catch (const std::exception& e) {
      f.check(false, std::string("exception: ") + e.what());
    }
    if (f.items.empty()) {
      std::cout << "PASS  " << c.name << "\n";
    } else {
      ++failed;
      std::cout << "FAIL  " << c.name << ": " << f.summary() << "\n";
    }
  }
  // Outcomes of the human study cannot be regenerated; acceptance rests on
  // the recomputations and invariant suites above.
  std::cout << (failed == 0 ? "PASS" : "FAIL")
            << "  human-participant outcomes are not reproduced by design; acceptance rests on "
               "the criteria above\n";
  return failed == 0 ? 0 : 1;
}
