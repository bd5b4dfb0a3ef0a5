#include "persuade/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "persuade/random.hpp"

namespace persuade {

namespace detail {
extern const char* const kStopwordData;
}

namespace {

using TermFreq = std::map<std::string, double>;

TermFreq term_freq(std::span<const std::string> tokens) {
  TermFreq tf;
  for (const auto& t : tokens) tf[t] += 1.0;
  return tf;
}

double cosine(const TermFreq& a, const TermFreq& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [term, w] : a) {
    na += w * w;
    if (auto it = b.find(term); it != b.end()) dot += w * it->second;
  }
  for (const auto& [term, w] : b) nb += w * w;
  if (dot == 0.0) return 0.0;
  // Clamp rounding so identical vectors compare as exactly 1.
  return std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb)));
}

void accumulate(TermFreq& into, const TermFreq& add) {
  for (const auto& [term, w] : add) into[term] += w;
}

}  // namespace

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = [] {
    std::unordered_set<std::string> out;
    std::istringstream in(detail::kStopwordData);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
        line.pop_back();
      if (!line.empty()) out.insert(line);
    }
    return out;
  }();
  return words;
}

std::string s_stem(std::string_view word) {
  auto ends_with = [&](std::string_view suffix) {
    return word.size() > suffix.size() &&
           word.substr(word.size() - suffix.size()) == suffix;
  };
  if (ends_with("ies") && !ends_with("eies") && !ends_with("aies"))
    return std::string(word.substr(0, word.size() - 3)) + "y";
  if (ends_with("es") && !ends_with("aes") && !ends_with("ees") && !ends_with("oes"))
    return std::string(word.substr(0, word.size() - 1));
  if (ends_with("s") && !ends_with("us") && !ends_with("ss"))
    return std::string(word.substr(0, word.size() - 1));
  return std::string(word);
}

Tokens normalize(std::string_view text, const NormalizeOptions& options) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c))
      cleaned.push_back(' ');
    else if (c < 0x80)
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    else
      cleaned.push_back(ch);
  }
  Tokens out;
  std::istringstream in(cleaned);
  std::string word;
  const auto& stop = stopwords();
  while (in >> word) {
    if (stop.count(word)) continue;
    out.push_back(options.stem ? s_stem(word) : word);
  }
  return out;
}

double similarity(std::span<const std::string> a, std::span<const std::string> b) {
  return cosine(term_freq(a), term_freq(b));
}

CorpusIndex::CorpusIndex(std::span<const RawArgument> corpus, const NormalizeOptions& options) {
  for (const auto& arg : corpus) tokens_[arg.id] = normalize(arg.text, options);
}

const Tokens& CorpusIndex::tokens(const std::string& id) const {
  auto it = tokens_.find(id);
  if (it == tokens_.end()) throw std::out_of_range("argument '" + id + "' not in corpus");
  return it->second;
}

std::string cluster_name(std::span<const std::string> members, const CorpusIndex& corpus) {
  std::map<std::string, int> freq;
  std::vector<std::string> first_seen;
  for (const auto& id : members)
    for (const auto& t : corpus.tokens(id))
      if (freq[t]++ == 0) first_seen.push_back(t);
  std::string best;
  int best_n = 0;
  for (const auto& t : first_seen) {
    if (freq[t] > best_n) {
      best = t;
      best_n = freq[t];
    }
  }
  return best;
}

std::string representative(const Cluster& c, const CorpusIndex& corpus, std::uint64_t seed) {
  if (c.members.empty()) throw std::invalid_argument("cluster has no members");
  std::map<std::string, int> freq;
  for (const auto& id : c.members)
    for (const auto& t : corpus.tokens(id)) ++freq[t];
  int max_freq = 0;
  for (const auto& [t, n] : freq) max_freq = std::max(max_freq, n);
  std::set<std::string> top;
  for (const auto& [t, n] : freq)
    if (n == max_freq) top.insert(t);

  std::vector<std::string> best;
  int best_score = -1;
  for (const auto& id : c.members) {
    const auto& toks = corpus.tokens(id);
    const std::set<std::string> distinct(toks.begin(), toks.end());
    int score = 0;
    for (const auto& t : top) score += static_cast<int>(distinct.count(t));
    if (score > best_score) {
      best_score = score;
      best.clear();
    }
    if (score == best_score) best.push_back(id);
  }
  if (best.size() == 1) return best.front();
  Rng rng(seed);
  return best[uniform_index(rng, best.size())];
}

ClusterResult cluster(std::span<const RawArgument> corpus, double threshold,
                      std::uint64_t seed, const NormalizeOptions& options) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must lie in [0, 1]");

  const CorpusIndex index(corpus, options);
  struct Working {
    std::vector<std::string> members;
    TermFreq centroid;  // summed term frequencies; cosine ignores scale
  };
  std::vector<Working> working;
  std::vector<TermFreq> tfs;
  tfs.reserve(corpus.size());

  for (const auto& arg : corpus) {
    tfs.push_back(term_freq(index.tokens(arg.id)));
    const auto& tf = tfs.back();
    std::size_t best = working.size();
    double best_sim = -1.0;
    for (std::size_t c = 0; c < working.size(); ++c) {
      const double s = cosine(tf, working[c].centroid);
      if (s >= threshold && s > best_sim) {
        best = c;
        best_sim = s;
      }
    }
    if (best == working.size()) working.push_back({});
    working[best].members.push_back(arg.id);
    accumulate(working[best].centroid, tf);
  }

  ClusterResult result;
  for (std::size_t c = 0; c < working.size(); ++c) {
    auto& w = working[c];
    if (w.members.size() == 1) {
      double best_other = 0.0;
      for (std::size_t o = 0; o < working.size(); ++o)
        if (o != c) best_other = std::max(best_other, cosine(w.centroid, working[o].centroid));
      if (best_other < threshold) {
        result.unclustered.push_back(w.members.front());
        continue;
      }
    }
    Cluster out;
    out.members = std::move(w.members);
    out.name = cluster_name(out.members, index);
    out.representative = representative(out, index, derive_seed(seed, result.clusters.size()));
    result.clusters.push_back(std::move(out));
  }
  return result;
}

Cluster merge_clusters(const Cluster& a, const Cluster& b, const CorpusIndex& corpus,
                       std::uint64_t seed) {
  if (a.members.empty() || b.members.empty())
    throw std::invalid_argument("cannot merge an empty cluster");
  const std::set<std::string> left(a.members.begin(), a.members.end());
  for (const auto& id : b.members)
    if (left.count(id))
      throw std::invalid_argument("clusters overlap on argument '" + id + "'");
  Cluster out;
  out.members = a.members;
  out.members.insert(out.members.end(), b.members.begin(), b.members.end());
  out.name = cluster_name(out.members, corpus);
  out.representative = representative(out, corpus, seed);
  return out;
}

TallyResult tally(std::span<const VoteSheet> sheets, std::span<const CounterArgument> candidates) {
  TallyResult out;
  std::map<std::string, const CounterArgument*> by_id;
  for (const auto& c : candidates) {
    by_id[c.id] = &c;
    out.per_argument[c.id];
    out.per_type[c.type];
    out.per_source_group[c.source_group];
  }
  for (const auto& sheet : sheets) {
    for (const auto& [id, n] : sheet.selections) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw UnknownArgumentId(id);
      if (n < 0 || n > sheet.n_voters)
        throw std::invalid_argument("selection count for '" + id +
                                    "' outside [0, n_voters]");
      out.per_argument[id].add(sheet.voter_group, n);
      out.per_type[it->second->type].add(sheet.voter_group, n);
      out.per_source_group[it->second->source_group].add(sheet.voter_group, n);
    }
  }
  return out;
}

std::map<ArgumentType, std::map<AuthorGroup, double>> normalized_type_totals(
    const TallyResult& totals, std::span<const CounterArgument> candidates,
    std::size_t reference_pool) {
  std::map<std::pair<ArgumentType, std::string>, std::pair<std::size_t, VoteTotals>> groups;
  for (const auto& c : candidates) {
    auto& g = groups[{c.type, c.target_cluster.value_or("")}];
    ++g.first;
    const auto it = totals.per_argument.find(c.id);
    if (it != totals.per_argument.end()) {
      g.second.meat_eater += it->second.meat_eater;
      g.second.vegetarian += it->second.vegetarian;
    }
  }
  std::map<ArgumentType, std::map<AuthorGroup, double>> sums;
  std::map<ArgumentType, int> group_count;
  for (const auto& [key, g] : groups) {
    const double scale = static_cast<double>(reference_pool) / static_cast<double>(g.first);
    for (auto who : {AuthorGroup::MeatEater, AuthorGroup::Vegetarian})
      sums[key.first][who] += g.second.of(who) * scale;
    ++group_count[key.first];
  }
  for (auto& [type, by_group] : sums)
    for (auto& [who, v] : by_group) v /= group_count[type];
  return sums;
}

TopKResult top_k(const TallyResult& totals, std::span<const CounterArgument> candidates, int k,
                 RankBy by) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  auto votes_of = [&](const std::string& id) {
    const auto it = totals.per_argument.find(id);
    if (it == totals.per_argument.end()) return 0;
    switch (by) {
      case RankBy::MeatEater: return it->second.meat_eater;
      case RankBy::Vegetarian: return it->second.vegetarian;
      case RankBy::All: return it->second.total();
    }
    return 0;
  };

  TopKResult out;
  std::map<std::pair<ArgumentType, std::string>, std::size_t> slot;
  for (const auto& c : candidates) {
    const auto key = std::make_pair(c.type, c.target_cluster.value_or(""));
    auto [it, fresh] = slot.emplace(key, out.groups.size());
    if (fresh) out.groups.push_back({c.type, c.target_cluster, {}, false});
    CounterArgument copy = c;
    if (const auto t = totals.per_argument.find(c.id); t != totals.per_argument.end()) {
      copy.votes_me = t->second.meat_eater;
      copy.votes_veg = t->second.vegetarian;
    }
    out.groups[it->second].ranked.push_back(std::move(copy));
  }
  for (auto& g : out.groups) {
    std::stable_sort(g.ranked.begin(), g.ranked.end(),
                     [&](const auto& a, const auto& b) { return votes_of(a.id) > votes_of(b.id); });
    if (g.ranked.size() < static_cast<std::size_t>(k)) {
      g.shortfall = true;
      std::ostringstream msg;
      msg << "group " << to_string(g.type);
      if (g.target_cluster) msg << "/" << *g.target_cluster;
      msg << " has " << g.ranked.size() << " candidates, fewer than k=" << k;
      out.warnings.push_back(msg.str());
    } else {
      g.ranked.resize(static_cast<std::size_t>(k));
    }
    for (std::size_t i = 0; i < g.ranked.size(); ++i) g.ranked[i].rank = static_cast<int>(i) + 1;
  }
  return out;
}

std::vector<Json> read_jsonl(std::istream& in) {
  std::vector<Json> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw KbParseError(line_no, e.what());
    }
  }
  return out;
}

std::vector<Json> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KbError("cannot open '" + path + "'");
  return read_jsonl(in);
}

RawArgument raw_argument_from_json(const Json& j) {
  RawArgument arg;
  arg.id = j.at("id").get<std::string>();
  arg.text = j.at("text").get<std::string>();
  if (j.contains("author_group"))
    arg.author_group = parse_author_group(j.at("author_group").get<std::string>());
  return arg;
}

Json to_json(const RawArgument& arg) {
  return {{"id", arg.id}, {"text", arg.text},
          {"author_group", std::string(to_string(arg.author_group))}};
}

VoteSheet vote_sheet_from_json(const Json& j) {
  VoteSheet sheet;
  sheet.voter_group = parse_author_group(j.at("voter_group").get<std::string>());
  sheet.n_voters = j.value("n_voters", 1);
  for (const auto& [id, n] : j.at("selections").items()) sheet.selections[id] = n.get<int>();
  return sheet;
}

Json to_json(const VoteSheet& sheet) {
  return {{"voter_group", std::string(to_string(sheet.voter_group))},
          {"n_voters", sheet.n_voters},
          {"selections", sheet.selections}};
}

Json to_json(const Cluster& c) {
  return {{"name", c.name}, {"representative", c.representative}, {"members", c.members}};
}

ConcernLabel label_concern(std::string_view explanation) {
  std::string lower(explanation);
  for (auto& ch : lower)
    if (static_cast<unsigned char>(ch) < 0x80)
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  const auto has = [&](std::string_view needle) {
    return lower.find(needle) != std::string::npos;
  };
  const bool health = has("health");
  const bool environment = has("animal") || has("environment") || has("planet");
  if (health && environment) return ConcernLabel::Both;
  if (health) return ConcernLabel::Health;
  if (environment) return ConcernLabel::Environment;
  return ConcernLabel::Unlabeled;
}

}  // namespace persuade
