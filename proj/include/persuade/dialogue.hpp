#pragma once

// Persuasion dialogue state machine.
//
// Protocol: initial intention -> concern -> main reason for eating meat ->
// twelve counterarguments, each answered agree/disagree. A disagree is
// followed by "Why?"; in Variant II an agree is followed by "Why do you eat
// meat then?". Short replies get one "Could you expand on that?". The chat
// ends by asking for the intention again.
//
// The engine never interprets free text beyond counting words.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "persuade/argument_kb.hpp"

namespace persuade {

enum class IntentionLevel : int {
  DefinitelyWouldnt = 0,
  ProbablyWouldnt = 1,
  Might = 2,
  ProbablyWould = 3,
  DefinitelyWould = 4,
};

inline constexpr IntentionLevel kIntentionLevels[] = {
    IntentionLevel::DefinitelyWouldnt, IntentionLevel::ProbablyWouldnt,
    IntentionLevel::Might, IntentionLevel::ProbablyWould, IntentionLevel::DefinitelyWould};

constexpr int ordinal(IntentionLevel level) { return static_cast<int>(level); }
IntentionLevel intention_from_ordinal(int value);  // throws std::out_of_range
std::string_view to_string(IntentionLevel level);
std::optional<IntentionLevel> parse_intention(std::string_view text);

enum class Variant { I, II };
std::string_view to_string(Variant variant);
Variant parse_variant(std::string_view name);

struct DialogueConfig {
  static constexpr int kCountersTotal = 12;

  Variant variant = Variant::I;
  Policy policy = Policy::Strategic;
  int expand_min_words = 4;    // replies shorter than this trigger an expand prompt
  int max_expand_prompts = 1;  // per harvested argument
  std::uint64_t seed = 0;
  bool shuffle_order = false;  // seeded shuffle of the presentation order

  bool operator==(const DialogueConfig&) const = default;
};

enum class Phase {
  AwaitInitialIntention,
  AwaitConcern,
  AwaitMainArgument,
  PresentCounter,
  AwaitStance,
  AwaitWhy,
  AwaitExpand,
  AwaitWhyEatMeat,
  AwaitFinalIntention,
  Done,
};

struct DialogueState {
  Phase phase = Phase::AwaitInitialIntention;
  int index = 0;  // 1..12 for the per-counter phases, 0 otherwise

  std::string to_string() const;
  static DialogueState parse(std::string_view text);  // throws std::invalid_argument
  bool operator==(const DialogueState&) const = default;
};

enum class Actor { Bot, User };
enum class EventKind { Prompt, Choice, CounterArgument, Stance, FreeText };

std::string_view to_string(Actor actor);
std::string_view to_string(EventKind kind);
Actor parse_actor(std::string_view name);
EventKind parse_event_kind(std::string_view name);

struct Event {
  std::int64_t seq = 0;
  Actor actor = Actor::Bot;
  EventKind kind = EventKind::Prompt;
  std::string payload;  // prompt text, chosen option value, counter id, or user text
  DialogueState state_after;
  std::int64_t timestamp_ms = 0;  // not part of replay comparison

  /// Equality ignoring the timestamp.
  bool same_move(const Event& other) const;
};

struct Option {
  std::string value;
  std::string label;
  bool operator==(const Option&) const = default;
};

/// What the bot is currently waiting for.
struct Prompt {
  DialogueState state;
  std::string text;
  std::vector<Option> options;  // enumerated choices; empty for free text
  bool free_text = false;
  std::optional<std::string> counter_id;  // set while a counterargument is pending

  bool expects_input() const { return state.phase != Phase::Done; }
};

enum class HarvestTrigger { Disagree, Agree };

struct HarvestedArgument {
  std::string text;
  std::string counter_id;  // counterargument the user was replying to
  int index = 0;           // its position in the schedule, 1..12
  HarvestTrigger trigger = HarvestTrigger::Disagree;

  bool operator==(const HarvestedArgument&) const = default;
};

struct Session {
  std::string id;
  DialogueConfig config;
  DialogueState state;
  std::optional<Concern> concern;
  std::optional<std::string> main_argument;  // popular argument id or "other"
  std::optional<IntentionLevel> initial_intention;
  std::optional<IntentionLevel> final_intention;
  std::vector<std::string> schedule;  // fixed once the main argument is chosen
  std::vector<Event> events;
  std::vector<HarvestedArgument> harvested;
  int disagreements = 0;

  // Reply being collected across a why/expand exchange.
  std::string pending_text;
  HarvestTrigger pending_trigger = HarvestTrigger::Disagree;
  int expands_used = 0;

  bool done() const { return state.phase == Phase::Done; }
};

inline constexpr std::string_view kOtherOption = "other";
inline constexpr std::string_view kAgree = "agree";
inline constexpr std::string_view kDisagree = "disagree";
inline constexpr std::string_view kWhyPrompt = "Why?";
inline constexpr std::string_view kWhyEatMeatPrompt = "Why do you eat meat then?";
inline constexpr std::string_view kExpandPrompt = "Could you expand on that?";

class InvalidInput : public std::runtime_error {
 public:
  InvalidInput(const std::string& what, DialogueState state, std::vector<Option> allowed);
  const DialogueState& state() const { return state_; }
  const std::vector<Option>& allowed() const { return allowed_; }

 private:
  DialogueState state_;
  std::vector<Option> allowed_;
};

class SessionDone : public std::runtime_error {
 public:
  SessionDone() : std::runtime_error("session is already done") {}
};

class SessionNotDone : public std::runtime_error {
 public:
  SessionNotDone() : std::runtime_error("session is not done") {}
};

/// Twelve counterargument ids for a policy and declared concern.
/// Strategic: the six best positive and six best negative counters of the
/// concern's scope. Baseline: the three best of each consequential type.
/// Order interleaves positive/negative by ascending rank; with `shuffle` the
/// order is permuted by a seeded draw. Throws PolicyUnavailable.
std::vector<std::string> schedule_counters(Policy policy, Concern concern,
                                           const KnowledgeBase& kb, std::uint64_t seed,
                                           bool shuffle = false);

std::size_t word_count(std::string_view text);

class DialogueEngine {
 public:
  using Clock = std::function<std::int64_t()>;

  /// The knowledge base must outlive the engine.
  explicit DialogueEngine(const KnowledgeBase& kb, Clock clock = {});

  /// Throws PolicyUnavailable when the KB cannot serve config.policy.
  Session new_session(std::string id, const DialogueConfig& config) const;

  /// Applies one user input and appends the resulting events. Returns the
  /// next prompt. On InvalidInput or SessionDone the session is unchanged.
  Prompt apply(Session& session, std::string_view input) const;

  Prompt current_prompt(const Session& session) const;

  const KnowledgeBase& kb() const { return kb_; }

 private:
  void emit(Session& s, Actor actor, EventKind kind, std::string payload) const;
  void present_next(Session& s, int index) const;
  void advance_after(Session& s, EventKind user_kind, std::string payload) const;
  void take_reply(Session& s, std::string_view text, bool first_part) const;
  std::vector<Option> main_argument_options() const;
  static const Option* match_option(const std::vector<Option>& options, std::string_view input);

  const KnowledgeBase& kb_;
  Clock clock_;
  bool baseline_ok_ = false;
  bool strategic_ok_ = false;
};

const std::vector<Option>& intention_options();
const std::vector<Option>& concern_options();
const std::vector<Option>& stance_options();

/// Harvested arguments of a finished session. Throws SessionNotDone.
std::size_t harvest_count(const Session& session);

}  // namespace persuade
