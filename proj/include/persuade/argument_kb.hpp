#pragma once

// Argument type system, concern tagging, and the knowledge base file format.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace persuade {

using Json = nlohmann::json;

enum class ArgumentType { DIR, SUG, NPC, NIC, PPC, PIC };

inline constexpr ArgumentType kAllArgumentTypes[] = {
    ArgumentType::DIR, ArgumentType::SUG, ArgumentType::NPC,
    ArgumentType::NIC, ArgumentType::PPC, ArgumentType::PIC};

inline constexpr ArgumentType kConsequentialTypes[] = {
    ArgumentType::PPC, ArgumentType::NPC, ArgumentType::PIC, ArgumentType::NIC};

enum class Polarity { Positive, Negative };
enum class Scope { Personal, Impersonal };

std::optional<Polarity> polarity_of(ArgumentType type);
std::optional<Scope> scope_of(ArgumentType type);
ArgumentType consequential_type(Polarity polarity, Scope scope);

/// The concern a persuadee declares in a dialogue.
enum class Concern { Health, Environment };

/// Result of labelling free-text explanations; wider than Concern.
enum class ConcernLabel { Health, Environment, Both, Unlabeled };

/// Personal consequences address health, impersonal ones the environment.
/// Absent for DIR and SUG.
std::optional<Concern> concern_of(ArgumentType type);

enum class AuthorGroup { MeatEater, Vegetarian };

enum class Policy { Baseline, Strategic };

std::string_view to_string(ArgumentType type);
std::string_view to_string(Concern concern);
std::string_view to_string(ConcernLabel label);
std::string_view to_string(AuthorGroup group);
std::string_view to_string(Policy policy);

// Parsers throw std::invalid_argument on unknown names.
ArgumentType parse_argument_type(std::string_view name);
Concern parse_concern(std::string_view name);
ConcernLabel parse_concern_label(std::string_view name);
AuthorGroup parse_author_group(std::string_view name);
Policy parse_policy(std::string_view name);

struct PopularArgument {
  std::string id;
  std::string cluster_name;
  std::string text;
  Json extra = Json::object();  // unknown fields, kept for round-trip

  bool operator==(const PopularArgument&) const = default;
};

struct CounterArgument {
  std::string id;
  std::string text;
  ArgumentType type = ArgumentType::DIR;
  std::optional<std::string> target_cluster;  // present iff type == DIR
  AuthorGroup source_group = AuthorGroup::Vegetarian;
  int votes_me = 0;
  int votes_veg = 0;
  int rank = 1;  // 1 = best within its (type, target_cluster) group
  Json extra = Json::object();

  bool operator==(const CounterArgument&) const = default;
};

inline constexpr int kKbSchemaVersion = 1;

struct KnowledgeBase {
  std::vector<PopularArgument> popular_args;
  std::vector<CounterArgument> counters;
  Json metadata = Json::object();
  Json header_extra = Json::object();

  const PopularArgument* find_popular(std::string_view id) const;
  const CounterArgument* find_counter(std::string_view id) const;

  /// Generic (untargeted) counters of one type ordered by rank.
  std::vector<const CounterArgument*> ranked(ArgumentType type) const;
  std::size_t count(ArgumentType type) const;

  bool operator==(const KnowledgeBase&) const = default;
};

struct ValidationIssue {
  std::string record_id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;   // structural invariant violations
  std::vector<std::string> warnings;     // e.g. "strategic policy unavailable: ..."
  bool baseline_ready = false;
  bool strategic_ready = false;

  bool ok() const { return issues.empty(); }
  bool supports(Policy policy) const;
};

/// Counters per consequential type each policy needs.
inline constexpr std::size_t kBaselinePerType = 3;
inline constexpr std::size_t kStrategicPerType = 6;

ValidationReport validate(const KnowledgeBase& kb);

class KbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KbParseError : public KbError {
 public:
  KbParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class KbValidationError : public KbError {
 public:
  explicit KbValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

class PolicyUnavailable : public KbError {
 public:
  explicit PolicyUnavailable(Policy policy);
  Policy policy() const { return policy_; }

 private:
  Policy policy_;
};

/// Throws KbParseError / KbValidationError. Policy availability is not a
/// load failure; check validate(kb).supports(...) or require_policy().
KnowledgeBase parse_kb(std::istream& in);
KnowledgeBase load_kb(const std::string& path);

void write_kb(const KnowledgeBase& kb, std::ostream& out);
void save_kb(const KnowledgeBase& kb, const std::string& path);

void require_policy(const KnowledgeBase& kb, Policy policy);

// Single-record codecs, shared with the corpus tools.
Json to_json(const PopularArgument& arg);
Json to_json(const CounterArgument& arg);
PopularArgument popular_from_json(const Json& record);
CounterArgument counter_from_json(const Json& record);

}  // namespace persuade
