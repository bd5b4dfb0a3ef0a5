#include "persuade/argument_kb.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

namespace persuade {

std::optional<Polarity> polarity_of(ArgumentType type) {
  switch (type) {
    case ArgumentType::PPC:
    case ArgumentType::PIC:
      return Polarity::Positive;
    case ArgumentType::NPC:
    case ArgumentType::NIC:
      return Polarity::Negative;
    default:
      return std::nullopt;
  }
}

std::optional<Scope> scope_of(ArgumentType type) {
  switch (type) {
    case ArgumentType::PPC:
    case ArgumentType::NPC:
      return Scope::Personal;
    case ArgumentType::PIC:
    case ArgumentType::NIC:
      return Scope::Impersonal;
    default:
      return std::nullopt;
  }
}

ArgumentType consequential_type(Polarity polarity, Scope scope) {
  if (scope == Scope::Personal)
    return polarity == Polarity::Positive ? ArgumentType::PPC : ArgumentType::NPC;
  return polarity == Polarity::Positive ? ArgumentType::PIC : ArgumentType::NIC;
}

std::optional<Concern> concern_of(ArgumentType type) {
  const auto scope = scope_of(type);
  if (!scope) return std::nullopt;
  return *scope == Scope::Personal ? Concern::Health : Concern::Environment;
}

std::string_view to_string(ArgumentType type) {
  switch (type) {
    case ArgumentType::DIR: return "DIR";
    case ArgumentType::SUG: return "SUG";
    case ArgumentType::NPC: return "NPC";
    case ArgumentType::NIC: return "NIC";
    case ArgumentType::PPC: return "PPC";
    case ArgumentType::PIC: return "PIC";
  }
  return "?";
}

std::string_view to_string(Concern concern) {
  return concern == Concern::Health ? "Health" : "Environment";
}

std::string_view to_string(ConcernLabel label) {
  switch (label) {
    case ConcernLabel::Health: return "Health";
    case ConcernLabel::Environment: return "Environment";
    case ConcernLabel::Both: return "Both";
    case ConcernLabel::Unlabeled: return "Unlabeled";
  }
  return "?";
}

std::string_view to_string(AuthorGroup group) {
  return group == AuthorGroup::MeatEater ? "meat_eater" : "vegetarian";
}

std::string_view to_string(Policy policy) {
  return policy == Policy::Baseline ? "baseline" : "strategic";
}

ArgumentType parse_argument_type(std::string_view name) {
  for (auto type : kAllArgumentTypes)
    if (to_string(type) == name) return type;
  throw std::invalid_argument("unknown argument type '" + std::string(name) + "'");
}

Concern parse_concern(std::string_view name) {
  if (name == "Health" || name == "health") return Concern::Health;
  if (name == "Environment" || name == "environment" || name == "environment/animals")
    return Concern::Environment;
  throw std::invalid_argument("unknown concern '" + std::string(name) + "'");
}

ConcernLabel parse_concern_label(std::string_view name) {
  for (auto label : {ConcernLabel::Health, ConcernLabel::Environment,
                     ConcernLabel::Both, ConcernLabel::Unlabeled})
    if (to_string(label) == name) return label;
  throw std::invalid_argument("unknown concern label '" + std::string(name) + "'");
}

AuthorGroup parse_author_group(std::string_view name) {
  if (name == "meat_eater") return AuthorGroup::MeatEater;
  if (name == "vegetarian") return AuthorGroup::Vegetarian;
  throw std::invalid_argument("unknown author group '" + std::string(name) + "'");
}

Policy parse_policy(std::string_view name) {
  if (name == "baseline") return Policy::Baseline;
  if (name == "strategic") return Policy::Strategic;
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

const PopularArgument* KnowledgeBase::find_popular(std::string_view id) const {
  for (const auto& arg : popular_args)
    if (arg.id == id) return &arg;
  return nullptr;
}

const CounterArgument* KnowledgeBase::find_counter(std::string_view id) const {
  for (const auto& arg : counters)
    if (arg.id == id) return &arg;
  return nullptr;
}

std::vector<const CounterArgument*> KnowledgeBase::ranked(ArgumentType type) const {
  std::vector<const CounterArgument*> out;
  for (const auto& c : counters)
    if (c.type == type && !c.target_cluster) out.push_back(&c);
  std::stable_sort(out.begin(), out.end(),
                   [](auto* a, auto* b) { return a->rank < b->rank; });
  return out;
}

std::size_t KnowledgeBase::count(ArgumentType type) const {
  return static_cast<std::size_t>(std::count_if(
      counters.begin(), counters.end(), [&](const auto& c) { return c.type == type; }));
}

bool ValidationReport::supports(Policy policy) const {
  if (!ok()) return false;
  return policy == Policy::Baseline ? baseline_ready : strategic_ready;
}

ValidationReport validate(const KnowledgeBase& kb) {
  ValidationReport report;
  auto issue = [&](const std::string& id, std::string msg) {
    report.issues.push_back({id, std::move(msg)});
  };

  std::set<std::string> popular_ids;
  for (const auto& arg : kb.popular_args) {
    if (arg.id.empty()) issue(arg.id, "popular_argument has empty id");
    if (!popular_ids.insert(arg.id).second)
      issue(arg.id, "duplicate popular_argument id");
    if (arg.text.empty()) issue(arg.id, "popular_argument text is empty");
  }

  std::set<std::string> counter_ids;
  // (type, target) -> ranks
  std::map<std::pair<ArgumentType, std::string>, std::vector<std::pair<int, std::string>>> groups;
  for (const auto& c : kb.counters) {
    if (c.id.empty()) issue(c.id, "counter_argument has empty id");
    if (!counter_ids.insert(c.id).second || popular_ids.count(c.id))
      issue(c.id, "duplicate record id");
    if (c.text.empty()) issue(c.id, "counter_argument text is empty");
    if (c.votes_me < 0 || c.votes_veg < 0) issue(c.id, "negative vote count");
    if (c.rank < 1) issue(c.id, "rank must be a positive integer");
    if (c.type == ArgumentType::DIR) {
      if (!c.target_cluster)
        issue(c.id, "DIR counter_argument has no target_cluster");
      else if (!popular_ids.count(*c.target_cluster))
        issue(c.id, "target_cluster '" + *c.target_cluster +
                        "' does not reference a popular_argument");
    } else if (c.target_cluster) {
      issue(c.id, std::string(to_string(c.type)) +
                      " counter_argument must not have a target_cluster");
    }
    groups[{c.type, c.target_cluster.value_or("")}].emplace_back(c.rank, c.id);
  }

  for (auto& [key, ranks] : groups) {
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      const int expected = static_cast<int>(i) + 1;
      if (ranks[i].first != expected) {
        std::ostringstream msg;
        msg << "rank " << ranks[i].first << " in group " << to_string(key.first);
        if (!key.second.empty()) msg << "/" << key.second;
        msg << (i > 0 && ranks[i].first == ranks[i - 1].first ? " is duplicated"
                                                               : " leaves a gap")
            << " (expected " << expected << ")";
        issue(ranks[i].second, msg.str());
        break;
      }
    }
  }

  report.baseline_ready = true;
  report.strategic_ready = true;
  for (auto type : kConsequentialTypes) {
    const auto n = kb.ranked(type).size();
    if (n < kStrategicPerType) {
      report.strategic_ready = false;
      std::ostringstream msg;
      msg << "strategic policy unavailable: " << to_string(type) << " has " << n
          << " counters (need " << kStrategicPerType << ")";
      report.warnings.push_back(msg.str());
    }
    if (n < kBaselinePerType) {
      report.baseline_ready = false;
      std::ostringstream msg;
      msg << "baseline policy unavailable: " << to_string(type) << " has " << n
          << " counters (need " << kBaselinePerType << ")";
      report.warnings.push_back(msg.str());
    }
  }
  return report;
}

KbParseError::KbParseError(std::size_t line, const std::string& what)
    : KbError("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string join_issues(const std::vector<ValidationIssue>& issues) {
  std::string out = "knowledge base failed validation:";
  for (const auto& i : issues) out += "\n  [" + i.record_id + "] " + i.message;
  return out;
}

Json without(const Json& record, std::initializer_list<const char*> keys) {
  Json extra = record;
  for (const char* k : keys) extra.erase(k);
  return extra;
}

std::string required_string(const Json& record, const char* key) {
  if (!record.contains(key) || !record[key].is_string())
    throw std::invalid_argument(std::string("missing string field '") + key + "'");
  return record[key].get<std::string>();
}

int required_int(const Json& record, const char* key) {
  if (!record.contains(key) || !record[key].is_number_integer())
    throw std::invalid_argument(std::string("missing integer field '") + key + "'");
  return record[key].get<int>();
}

}  // namespace

KbValidationError::KbValidationError(std::vector<ValidationIssue> issues)
    : KbError(join_issues(issues)), issues_(std::move(issues)) {}

PolicyUnavailable::PolicyUnavailable(Policy policy)
    : KbError(std::string(to_string(policy)) + " policy unavailable"), policy_(policy) {}

Json to_json(const PopularArgument& arg) {
  Json out = arg.extra;
  out["kind"] = "popular_argument";
  out["id"] = arg.id;
  out["cluster_name"] = arg.cluster_name;
  out["text"] = arg.text;
  return out;
}

Json to_json(const CounterArgument& arg) {
  Json out = arg.extra;
  out["kind"] = "counter_argument";
  out["id"] = arg.id;
  out["text"] = arg.text;
  out["arg_type"] = std::string(to_string(arg.type));
  if (arg.target_cluster) out["target_cluster"] = *arg.target_cluster;
  out["source_group"] = std::string(to_string(arg.source_group));
  out["votes_me"] = arg.votes_me;
  out["votes_veg"] = arg.votes_veg;
  out["rank"] = arg.rank;
  return out;
}

PopularArgument popular_from_json(const Json& record) {
  PopularArgument arg;
  arg.id = required_string(record, "id");
  arg.cluster_name = record.value("cluster_name", "");
  arg.text = required_string(record, "text");
  arg.extra = without(record, {"kind", "id", "cluster_name", "text"});
  return arg;
}

CounterArgument counter_from_json(const Json& record) {
  CounterArgument arg;
  arg.id = required_string(record, "id");
  arg.text = required_string(record, "text");
  arg.type = parse_argument_type(required_string(record, "arg_type"));
  if (record.contains("target_cluster") && !record["target_cluster"].is_null())
    arg.target_cluster = required_string(record, "target_cluster");
  arg.source_group = parse_author_group(record.value("source_group", "vegetarian"));
  arg.votes_me = record.value("votes_me", 0);
  arg.votes_veg = record.value("votes_veg", 0);
  arg.rank = required_int(record, "rank");
  arg.extra = without(record, {"kind", "id", "text", "arg_type", "target_cluster",
                               "source_group", "votes_me", "votes_veg", "rank"});
  return arg;
}

KnowledgeBase parse_kb(std::istream& in) {
  KnowledgeBase kb;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw KbParseError(lineno, e.what());
    }
    if (!record.is_object() || !record.contains("kind") || !record["kind"].is_string())
      throw KbParseError(lineno, "record has no 'kind'");
    const auto kind = record["kind"].get<std::string>();
    try {
      if (!have_header) {
        if (kind != "header") throw std::invalid_argument("first record must be the header");
        if (record.value("schema_version", 0) != kKbSchemaVersion)
          throw std::invalid_argument("unsupported schema_version");
        kb.metadata = record.value("metadata", Json::object());
        kb.header_extra = without(record, {"kind", "schema_version", "metadata"});
        have_header = true;
      } else if (kind == "popular_argument") {
        kb.popular_args.push_back(popular_from_json(record));
      } else if (kind == "counter_argument") {
        kb.counters.push_back(counter_from_json(record));
      } else {
        throw std::invalid_argument("unknown record kind '" + kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw KbParseError(lineno, e.what());
    } catch (const Json::exception& e) {
      throw KbParseError(lineno, e.what());
    }
  }
  if (!have_header) throw KbParseError(lineno, "missing header record");

  auto report = validate(kb);
  if (!report.ok()) throw KbValidationError(std::move(report.issues));
  return kb;
}

KnowledgeBase load_kb(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw KbError("cannot open knowledge base '" + path + "'");
  return parse_kb(in);
}

void write_kb(const KnowledgeBase& kb, std::ostream& out) {
  Json header = kb.header_extra;
  header["kind"] = "header";
  header["schema_version"] = kKbSchemaVersion;
  header["metadata"] = kb.metadata;
  out << header.dump() << '\n';
  for (const auto& arg : kb.popular_args) out << to_json(arg).dump() << '\n';
  for (const auto& arg : kb.counters) out << to_json(arg).dump() << '\n';
}

void save_kb(const KnowledgeBase& kb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw KbError("cannot write knowledge base '" + path + "'");
  write_kb(kb, out);
}

void require_policy(const KnowledgeBase& kb, Policy policy) {
  if (!validate(kb).supports(policy)) throw PolicyUnavailable(policy);
}

}  // namespace persuade
