#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "persuade/analysis.hpp"
#include "persuade/argument_kb.hpp"
#include "persuade/corpus.hpp"
#include "persuade/dialogue.hpp"
#include "persuade/report.hpp"
#include "persuade/service.hpp"
#include "persuade/session_log.hpp"
#include "persuade/simulation.hpp"
#include "persuade/store.hpp"

using namespace persuade;
namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to the named file, or stdout when the name is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    file_.open(path);
    if (!file_) throw std::runtime_error("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// "all", or comma-separated "variant/policy" pairs such as "I/strategic".
std::vector<DialogueConfig> parse_arms(const std::string& spec, const DialogueConfig& base) {
  if (spec == "all") return all_arms(base);
  std::vector<DialogueConfig> out;
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto slash = item.find('/');
    if (slash == std::string::npos) throw UsageError("arm '" + item + "' is not variant/policy");
    DialogueConfig c = base;
    c.variant = parse_variant(item.substr(0, slash));
    c.policy = parse_policy(item.substr(slash + 1));
    out.push_back(c);
  }
  if (out.empty()) throw UsageError("no arms given");
  return out;
}

// Replays every log under dir; sessions come back with their logged timestamps.
std::vector<Session> load_sessions(const std::string& dir, const DialogueEngine& engine) {
  if (!fs::is_directory(dir)) throw UsageError("'" + dir + "' is not a directory");
  std::vector<Session> out;
  for (const auto& log : SessionStore(dir).load_all()) out.push_back(replay(engine, log));
  return out;
}

void print_report(const Report& r, std::ostream& out) {
  out << r.title << "\n" << r.text << "\n";
}

// ---------------------------------------------------------------------------

int run_chat(const std::string& kb_path, const std::string& variant, const std::string& policy,
             std::uint64_t seed, int expand_min_words, const std::string& log_path) {
  const KnowledgeBase kb = load_kb(kb_path);
  const DialogueEngine engine(kb);
  DialogueConfig config;
  config.variant = parse_variant(variant);
  config.policy = parse_policy(policy);
  config.seed = seed;
  config.expand_min_words = expand_min_words;
  Session s = engine.new_session("chat", config);

  Prompt p = engine.current_prompt(s);
  std::string line;
  while (p.expects_input()) {
    std::cout << "bot> " << p.text << "\n";
    for (const auto& o : p.options) std::cout << "  [" << o.value << "] " << o.label << "\n";
    std::cout << "you> " << std::flush;
    if (!std::getline(std::cin, line)) {
      std::cout << "\n";
      break;
    }
    try {
      p = engine.apply(s, line);
    } catch (const InvalidInput& e) {
      std::cout << "bot> Please answer with one of the options.\n";
    }
  }
  if (s.done()) {
    const Json summary = session_summary(s);
    std::cout << "bot> " << p.text << "\n"
              << "intention points: " << summary.at("intention_points") << "\n";
  }
  if (!log_path.empty()) {
    Output out(log_path);
    write_session_log(s, "default", out.stream());
  }
  return s.done() ? 0 : 1;
}

int run_simulate(const std::string& arms_spec, std::size_t n, const std::string& kb_path,
                 const std::string& model_path, std::uint64_t seed, const std::string& out_dir,
                 const std::string& kb_id) {
  const KnowledgeBase kb = load_kb(kb_path);
  const DialogueEngine engine(kb);
  ModelTemplate t;
  if (!model_path.empty()) {
    std::ifstream in(model_path);
    if (!in) throw UsageError("cannot open model '" + model_path + "'");
    t = ModelTemplate::from_json(Json::parse(in));
  }
  const ModelSampler sampler = [&](Rng& r) { return t.sample(r); };
  const auto arms = parse_arms(arms_spec, DialogueConfig{});
  const auto result = run_experiment(n, sampler, arms, engine, seed);

  std::vector<Session> all;
  for (const auto& arm : result) all.insert(all.end(), arm.sessions.begin(), arm.sessions.end());
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    SessionStore store(out_dir);
    for (const auto& s : all) {
      if (store.contains(s.id) || fs::exists(fs::path(out_dir) / (s.id + ".jsonl")))
        throw UsageError("session log '" + s.id + "' already exists in " + out_dir);
      store.create(s, kb_id);
      store.append(s, s.events.size());
    }
  }
  GroupBy by;
  by.variant = true;
  print_report(group_report(summarize(all, by)), std::cout);
  return 0;
}

int run_cluster(const std::string& in_path, double threshold, std::uint64_t seed, bool stem,
                const std::string& out_path) {
  std::vector<RawArgument> corpus;
  for (const auto& j : load_jsonl(in_path)) corpus.push_back(raw_argument_from_json(j));
  const auto result = cluster(corpus, threshold, seed, NormalizeOptions{stem});
  Output out(out_path);
  for (const auto& c : result.clusters) out.stream() << to_json(c).dump() << '\n';
  std::cerr << result.clusters.size() << " clusters, " << result.unclustered.size()
            << " unclustered\n";
  for (const auto& id : result.unclustered) std::cerr << "unclustered: " << id << "\n";
  return 0;
}

int run_rank(const std::string& votes_path, const std::string& candidates_path, int k,
             const std::string& by_name, const std::string& out_path) {
  std::vector<CounterArgument> candidates;
  for (const auto& j : load_jsonl(candidates_path))
    if (j.value("kind", "") == "counter_argument") candidates.push_back(counter_from_json(j));
  std::vector<VoteSheet> sheets;
  for (const auto& j : load_jsonl(votes_path)) sheets.push_back(vote_sheet_from_json(j));

  RankBy by = RankBy::MeatEater;
  if (by_name == "vegetarian") by = RankBy::Vegetarian;
  else if (by_name == "all") by = RankBy::All;
  else if (by_name != "meat_eater") throw UsageError("--by must be meat_eater, vegetarian or all");

  const auto totals = tally(sheets, candidates);
  const auto ranked = top_k(totals, candidates, k, by);
  Output out(out_path);
  for (const auto& g : ranked.groups)
    for (const auto& c : g.ranked) out.stream() << to_json(c).dump() << '\n';
  for (const auto& w : ranked.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& [type, groups] : normalized_type_totals(totals, candidates)) {
    std::cerr << to_string(type);
    for (const auto& [group, v] : groups) std::cerr << " " << to_string(group) << "=" << v;
    std::cerr << "\n";
  }
  return 0;
}

int run_label(const std::string& in_path, const std::string& out_path) {
  Output out(out_path);
  std::map<ConcernLabel, int> counts;
  for (auto j : load_jsonl(in_path)) {
    const auto label = label_concern(j.at("text").get<std::string>());
    ++counts[label];
    j["concern"] = std::string(to_string(label));
    out.stream() << j.dump() << '\n';
  }
  for (const auto& [label, n] : counts) std::cerr << to_string(label) << ": " << n << "\n";
  return 0;
}

int run_analyze(const std::string& sessions_dir, const std::string& kb_path,
                const std::string& group_by, const std::vector<std::string>& reports,
                bool published, bool yates, const std::string& report_out) {
  std::vector<Session> sessions;
  std::optional<KnowledgeBase> kb;
  if (!sessions_dir.empty()) {
    if (kb_path.empty()) throw UsageError("--sessions needs --kb to replay the logs");
    kb = load_kb(kb_path);
    sessions = load_sessions(sessions_dir, DialogueEngine(*kb));
  } else if (!published) {
    throw UsageError("give --sessions or --published");
  }
  const ArmCountTable counts = published ? published_arm_counts() : arm_counts(sessions);

  std::vector<Report> out;
  for (const auto& name : reports) {
    if (name == "groups") {
      out.push_back(group_report(summarize(sessions, GroupBy::parse(group_by))));
    } else if (name == "intentions") {
      if (sessions.empty()) throw UsageError("the intentions report needs --sessions");
      for (auto v : {Variant::I, Variant::II}) out.push_back(intention_report(sessions, v));
    } else if (name == "changes") {
      out.push_back(change_report(counts));
    } else if (name == "comparison") {
      out.push_back(comparison_report(compare_policies(counts, yates)));
    } else {
      throw UsageError("unknown report '" + name + "' (groups, intentions, changes, comparison)");
    }
  }
  for (const auto& r : out) print_report(r, std::cout);
  if (!report_out.empty()) {
    Output file(report_out);
    for (const auto& r : out)
      for (auto rec : r.records) {
        rec["report"] = r.title;
        file.stream() << rec.dump() << '\n';
      }
  }
  return 0;
}

int run_chi2(const std::string& table_text, bool yates) {
  const auto table = ContingencyTable::parse(table_text);
  const auto r = chi_square(table, yates);
  std::ostringstream stat;
  stat.precision(10);
  stat << r.statistic;
  std::cout << "statistic " << stat.str() << "\n"
            << "df " << r.df << "\n"
            << "p " << r.p_value << " (" << format_p_value(r.p_value) << ")\n";
  return 0;
}

int run_replay(const std::vector<std::string>& paths, const std::string& kb_path) {
  const KnowledgeBase kb = load_kb(kb_path);
  const DialogueEngine engine(kb);
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p))
        if (e.path().extension() == ".jsonl") files.push_back(e.path().string());
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  int failures = 0;
  for (const auto& f : files) {
    try {
      const auto s = replay(engine, load_session_log(f));
      std::cout << "ok " << s.id << " (" << s.events.size() << " events"
                << (s.done() ? ", done" : "") << ")\n";
    } catch (const ReplayDivergence& d) {
      ++failures;
      std::cout << "DIVERGED " << f << " at seq " << d.seq() << ": " << d.what() << "\n";
    } catch (const MalformedLog& e) {
      ++failures;
      std::cout << "MALFORMED " << f << ": " << e.what() << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persuasion dialogue engine: chat, service, simulation, harvesting and analysis"};
  app.require_subcommand(1);

  // chat
  auto* chat = app.add_subcommand("chat", "Interactive terminal session");
  std::string chat_kb, chat_variant = "I", chat_policy = "strategic", chat_log;
  std::uint64_t chat_seed = 0;
  int chat_expand = 4;
  chat->add_option("--kb", chat_kb, "Knowledge base")->required()->check(CLI::ExistingFile);
  chat->add_option("--variant", chat_variant, "I or II");
  chat->add_option("--policy", chat_policy, "baseline or strategic");
  chat->add_option("--seed", chat_seed);
  chat->add_option("--expand-min-words", chat_expand);
  chat->add_option("--log", chat_log, "Write the session log here");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  std::string serve_config, serve_kb, serve_listen, serve_store, serve_static;
  serve_cmd->add_option("--config", serve_config, "JSON config file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--kb", serve_kb, "Default knowledge base");
  serve_cmd->add_option("--listen", serve_listen, "host:port");
  serve_cmd->add_option("--store", serve_store, "Session log directory");
  serve_cmd->add_option("--static", serve_static, "Web client assets");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run synthetic persuadees through the arms");
  std::string sim_arms = "all", sim_kb, sim_model, sim_out, sim_kb_id = "default";
  std::size_t sim_n = 50;
  std::uint64_t sim_seed = 7;
  sim->add_option("--arms", sim_arms, "all, or variant/policy pairs, e.g. I/strategic,II/baseline");
  sim->add_option("--n", sim_n, "Sessions per arm");
  sim->add_option("--kb", sim_kb, "Knowledge base")->required()->check(CLI::ExistingFile);
  sim->add_option("--model", sim_model, "Persuadee model template")->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_seed);
  sim->add_option("--out", sim_out, "Directory for session logs");
  sim->add_option("--kb-id", sim_kb_id, "KB id recorded in the logs");

  // cluster
  auto* clu = app.add_subcommand("cluster", "Cluster raw arguments");
  std::string clu_in, clu_out;
  double clu_threshold = kDefaultClusterThreshold;
  std::uint64_t clu_seed = 0;
  bool clu_stem = false;
  clu->add_option("--in", clu_in, "Raw arguments")->required()->check(CLI::ExistingFile);
  clu->add_option("--threshold", clu_threshold)->check(CLI::Range(0.0, 1.0));
  clu->add_option("--seed", clu_seed);
  clu->add_flag("--stem", clu_stem, "Strip plural suffixes before comparing");
  clu->add_option("--out", clu_out, "Clusters (default stdout)");

  // rank
  auto* rank = app.add_subcommand("rank", "Tally votes and keep the top k per group");
  std::string rank_votes, rank_candidates, rank_by = "meat_eater", rank_out;
  int rank_k = 3;
  rank->add_option("--votes", rank_votes, "Vote sheets")->required()->check(CLI::ExistingFile);
  rank->add_option("--candidates", rank_candidates, "Candidate counters (KB records)")
      ->required()
      ->check(CLI::ExistingFile);
  rank->add_option("--k", rank_k)->check(CLI::PositiveNumber);
  rank->add_option("--by", rank_by, "meat_eater, vegetarian or all");
  rank->add_option("--out", rank_out, "Ranked counters (default stdout)");

  // label-concerns
  auto* label = app.add_subcommand("label-concerns", "Label concern explanations");
  std::string label_in, label_out;
  label->add_option("--in", label_in, "Explanations")->required()->check(CLI::ExistingFile);
  label->add_option("--out", label_out, "Labelled records (default stdout)");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Summaries and chi-square comparisons");
  std::string ana_sessions, ana_kb, ana_group_by = "policy", ana_out;
  std::vector<std::string> ana_reports = {"groups"};
  bool ana_published = false, ana_yates = false;
  ana->add_option("--sessions", ana_sessions, "Session log directory");
  ana->add_option("--kb", ana_kb, "Knowledge base used by the sessions");
  ana->add_option("--group-by", ana_group_by, "Subset of variant,policy,concern");
  ana->add_option("--report", ana_reports, "groups, intentions, changes, comparison");
  ana->add_flag("--published", ana_published, "Use the published arm counts");
  ana->add_flag("--yates", ana_yates, "Continuity correction for 2x2 tables");
  ana->add_option("--report-out", ana_out, "Machine-readable records of each report");
  auto* chi2 = ana->add_subcommand("chi2", "Pearson chi-square of one table");
  std::string chi2_table;
  bool chi2_yates = false;
  chi2->add_option("--table", chi2_table, "Rows separated by ';', cells by ','")->required();
  chi2->add_flag("--yates", chi2_yates);

  // replay
  auto* rep = app.add_subcommand("replay", "Verify session logs by replaying them");
  std::vector<std::string> rep_paths;
  std::string rep_kb;
  rep->add_option("logs", rep_paths, "Log files or directories")->required();
  rep->add_option("--kb", rep_kb, "Knowledge base")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*chat) return run_chat(chat_kb, chat_variant, chat_policy, chat_seed, chat_expand, chat_log);
    if (*serve_cmd) {
      auto config = ServiceConfig::load(serve_config);
      if (!serve_kb.empty()) config.kb_paths[config.default_kb_id] = serve_kb;
      if (!serve_listen.empty()) config.set_listen(serve_listen);
      if (!serve_store.empty()) config.store_dir = serve_store;
      if (!serve_static.empty()) config.static_dir = serve_static;
      if (config.kb_paths.empty()) throw UsageError("no knowledge base configured");
      ChatService service(config);
      std::cerr << "listening on " << config.host << ":" << config.port << "\n";
      return serve(service, config);
    }
    if (*sim) return run_simulate(sim_arms, sim_n, sim_kb, sim_model, sim_seed, sim_out, sim_kb_id);
    if (*clu) return run_cluster(clu_in, clu_threshold, clu_seed, clu_stem, clu_out);
    if (*rank) return run_rank(rank_votes, rank_candidates, rank_k, rank_by, rank_out);
    if (*label) return run_label(label_in, label_out);
    if (*chi2) return run_chi2(chi2_table, chi2_yates);
    if (*ana)
      return run_analyze(ana_sessions, ana_kb, ana_group_by, ana_reports, ana_published,
                         ana_yates, ana_out);
    if (*rep) return run_replay(rep_paths, rep_kb);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
