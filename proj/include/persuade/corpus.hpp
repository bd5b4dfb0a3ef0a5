#pragma once

// Argument harvesting pipeline: normalization, clustering, representative
// selection, vote tallying, ranking, and concern labelling of explanations.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "persuade/argument_kb.hpp"

namespace persuade {

using Tokens = std::vector<std::string>;

struct RawArgument {
  std::string id;
  std::string text;
  AuthorGroup author_group = AuthorGroup::MeatEater;
};

struct NormalizeOptions {
  bool stem = false;  // plural-stripping S-stemmer; off by default
};

/// The shipped English stopword list (data/stopwords_en.txt).
const std::unordered_set<std::string>& stopwords();

/// Lowercase, replace punctuation with spaces, split on whitespace, drop
/// stopwords. Non-ASCII bytes are kept as word characters.
Tokens normalize(std::string_view text, const NormalizeOptions& options = {});

/// Strips English plural suffixes ("ies"->"y", "es"->"e", "s"->"").
std::string s_stem(std::string_view word);

/// Cosine similarity of term-frequency vectors; 0 if either side is empty.
double similarity(std::span<const std::string> a, std::span<const std::string> b);

/// Normalized tokens for each argument of a corpus, looked up by id.
class CorpusIndex {
 public:
  explicit CorpusIndex(std::span<const RawArgument> corpus,
                       const NormalizeOptions& options = {});

  const Tokens& tokens(const std::string& id) const;
  bool contains(const std::string& id) const { return tokens_.count(id) != 0; }

 private:
  std::unordered_map<std::string, Tokens> tokens_;
};

struct Cluster {
  std::string name;                  // most frequent non-stopword
  std::vector<std::string> members;  // argument ids, corpus order
  std::string representative;

  bool operator==(const Cluster&) const = default;
};

struct ClusterResult {
  std::vector<Cluster> clusters;
  std::vector<std::string> unclustered;
};

inline constexpr double kDefaultClusterThreshold = 0.4;

/// Single greedy pass in corpus order: each argument joins the cluster whose
/// centroid is most similar (>= threshold, earliest cluster on ties) or opens
/// a new one. Singletons whose best similarity to any other cluster stays
/// below the threshold are reported as unclustered. Throws
/// std::invalid_argument if threshold is outside [0, 1].
ClusterResult cluster(std::span<const RawArgument> corpus, double threshold,
                      std::uint64_t seed, const NormalizeOptions& options = {});

/// Most frequent token over the members; earliest occurrence wins ties.
std::string cluster_name(std::span<const std::string> members, const CorpusIndex& corpus);

/// Member containing the most of the cluster's maximum-frequency words;
/// uniform seeded draw among ties.
std::string representative(const Cluster& c, const CorpusIndex& corpus, std::uint64_t seed);

/// Throws std::invalid_argument on an empty input or overlapping members.
Cluster merge_clusters(const Cluster& a, const Cluster& b, const CorpusIndex& corpus,
                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Votes

struct VoteSheet {
  AuthorGroup voter_group = AuthorGroup::MeatEater;
  std::map<std::string, int> selections;  // counterargument id -> voters selecting it
  int n_voters = 1;
};

struct VoteTotals {
  int meat_eater = 0;
  int vegetarian = 0;

  int of(AuthorGroup group) const {
    return group == AuthorGroup::MeatEater ? meat_eater : vegetarian;
  }
  int total() const { return meat_eater + vegetarian; }
  void add(AuthorGroup group, int n) {
    (group == AuthorGroup::MeatEater ? meat_eater : vegetarian) += n;
  }
  bool operator==(const VoteTotals&) const = default;
};

struct TallyResult {
  std::map<std::string, VoteTotals> per_argument;
  std::map<ArgumentType, VoteTotals> per_type;
  std::map<AuthorGroup, VoteTotals> per_source_group;  // keyed by author group

  bool operator==(const TallyResult&) const = default;
};

class UnknownArgumentId : public std::out_of_range {
 public:
  explicit UnknownArgumentId(const std::string& id)
      : std::out_of_range("unknown counterargument id '" + id + "'"), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

/// Sums selections per (argument, voter group) over the candidate pool.
/// Throws UnknownArgumentId, or std::invalid_argument when a count exceeds
/// the sheet's n_voters.
TallyResult tally(std::span<const VoteSheet> sheets,
                  std::span<const CounterArgument> candidates);

/// Per-type totals averaged over (type, target) groups and rescaled to a
/// common pool size, so DIR (20 candidates per target) compares with the
/// 10-candidate generic types.
std::map<ArgumentType, std::map<AuthorGroup, double>> normalized_type_totals(
    const TallyResult& totals, std::span<const CounterArgument> candidates,
    std::size_t reference_pool = 10);

enum class RankBy { MeatEater, Vegetarian, All };

struct RankedGroup {
  ArgumentType type = ArgumentType::DIR;
  std::optional<std::string> target_cluster;
  std::vector<CounterArgument> ranked;  // rank fields 1..ranked.size()
  bool shortfall = false;
};

struct TopKResult {
  std::vector<RankedGroup> groups;  // order of first appearance in candidates
  std::vector<std::string> warnings;
};

/// Within each (type, target_cluster) group sort by votes descending, ties
/// in input order, keep k. Returned counters carry the tallied votes.
TopKResult top_k(const TallyResult& totals, std::span<const CounterArgument> candidates,
                 int k, RankBy by = RankBy::MeatEater);

// ---------------------------------------------------------------------------

// JSONL codecs for the pipeline's inputs and outputs.

/// Non-blank lines of a JSONL stream; throws KbParseError with the line number.
std::vector<Json> read_jsonl(std::istream& in);
std::vector<Json> load_jsonl(const std::string& path);

RawArgument raw_argument_from_json(const Json& j);  // {id, text, author_group?}
Json to_json(const RawArgument& arg);
VoteSheet vote_sheet_from_json(const Json& j);  // {voter_group, n_voters, selections}
Json to_json(const VoteSheet& sheet);
Json to_json(const Cluster& c);

/// Case-insensitive substring match: "health" vs "animal"/"environment"/"planet".
ConcernLabel label_concern(std::string_view explanation);

}  // namespace persuade
