#include "persuade/dialogue.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "persuade/random.hpp"

namespace persuade {

namespace {

constexpr std::string_view kIntentionQuestion =
    "Would you consider reducing your meat consumption?";
constexpr std::string_view kConcernQuestion =
    "What are you more concerned about: the impact that meat consumption has on your "
    "health, or the impact it has on the environment and animals?";
constexpr std::string_view kMainArgumentQuestion =
    "What is your main reason for eating meat?";
constexpr std::string_view kFinalIntentionQuestion =
    "Thanks for chatting. Now, would you consider reducing your meat consumption?";
constexpr std::string_view kClosing = "Thank you for your time. Goodbye!";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::AwaitInitialIntention: return "AwaitInitialIntention";
    case Phase::AwaitConcern: return "AwaitConcern";
    case Phase::AwaitMainArgument: return "AwaitMainArgument";
    case Phase::PresentCounter: return "PresentCounter";
    case Phase::AwaitStance: return "AwaitStance";
    case Phase::AwaitWhy: return "AwaitWhy";
    case Phase::AwaitExpand: return "AwaitExpand";
    case Phase::AwaitWhyEatMeat: return "AwaitWhyEatMeat";
    case Phase::AwaitFinalIntention: return "AwaitFinalIntention";
    case Phase::Done: return "Done";
  }
  return "?";
}

constexpr bool indexed(Phase p) {
  return p == Phase::PresentCounter || p == Phase::AwaitStance || p == Phase::AwaitWhy ||
         p == Phase::AwaitExpand || p == Phase::AwaitWhyEatMeat;
}

constexpr Phase kAllPhases[] = {
    Phase::AwaitInitialIntention, Phase::AwaitConcern, Phase::AwaitMainArgument,
    Phase::PresentCounter,        Phase::AwaitStance,  Phase::AwaitWhy,
    Phase::AwaitExpand,           Phase::AwaitWhyEatMeat, Phase::AwaitFinalIntention,
    Phase::Done};

std::vector<Option> make_options(std::initializer_list<std::string_view> values) {
  std::vector<Option> out;
  for (auto v : values) out.push_back({std::string(v), std::string(v)});
  return out;
}

}  // namespace

IntentionLevel intention_from_ordinal(int value) {
  if (value < 0 || value > 4) throw std::out_of_range("intention ordinal outside 0..4");
  return static_cast<IntentionLevel>(value);
}

std::string_view to_string(IntentionLevel level) {
  switch (level) {
    case IntentionLevel::DefinitelyWouldnt: return "definitely wouldn't";
    case IntentionLevel::ProbablyWouldnt: return "probably wouldn't";
    case IntentionLevel::Might: return "might";
    case IntentionLevel::ProbablyWould: return "probably would";
    case IntentionLevel::DefinitelyWould: return "definitely would";
  }
  return "?";
}

std::optional<IntentionLevel> parse_intention(std::string_view text) {
  const auto t = trim(text);
  for (auto level : kIntentionLevels)
    if (iequals(t, to_string(level))) return level;
  return std::nullopt;
}

std::string_view to_string(Variant variant) { return variant == Variant::I ? "I" : "II"; }

Variant parse_variant(std::string_view name) {
  if (name == "I" || name == "1") return Variant::I;
  if (name == "II" || name == "2") return Variant::II;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

std::string DialogueState::to_string() const {
  std::string out(phase_name(phase));
  if (indexed(phase)) out += "(" + std::to_string(index) + ")";
  return out;
}

DialogueState DialogueState::parse(std::string_view text) {
  for (auto p : kAllPhases) {
    const auto name = phase_name(p);
    if (text.substr(0, name.size()) != name) continue;
    const auto rest = text.substr(name.size());
    if (!indexed(p)) {
      if (rest.empty()) return {p, 0};
      continue;
    }
    if (rest.size() < 3 || rest.front() != '(' || rest.back() != ')') continue;
    try {
      std::size_t used = 0;
      const std::string digits(rest.substr(1, rest.size() - 2));
      const int i = std::stoi(digits, &used);
      if (used == digits.size() && i >= 1 && i <= DialogueConfig::kCountersTotal)
        return {p, i};
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("unknown dialogue state '" + std::string(text) + "'");
}

std::string_view to_string(Actor actor) { return actor == Actor::Bot ? "bot" : "user"; }

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Prompt: return "prompt";
    case EventKind::Choice: return "choice";
    case EventKind::CounterArgument: return "counterargument";
    case EventKind::Stance: return "stance";
    case EventKind::FreeText: return "free_text";
  }
  return "?";
}

Actor parse_actor(std::string_view name) {
  if (name == "bot") return Actor::Bot;
  if (name == "user") return Actor::User;
  throw std::invalid_argument("unknown actor '" + std::string(name) + "'");
}

EventKind parse_event_kind(std::string_view name) {
  for (auto k : {EventKind::Prompt, EventKind::Choice, EventKind::CounterArgument,
                 EventKind::Stance, EventKind::FreeText})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown event kind '" + std::string(name) + "'");
}

bool Event::same_move(const Event& other) const {
  return seq == other.seq && actor == other.actor && kind == other.kind &&
         payload == other.payload && state_after == other.state_after;
}

InvalidInput::InvalidInput(const std::string& what, DialogueState state,
                           std::vector<Option> allowed)
    : std::runtime_error(what), state_(state), allowed_(std::move(allowed)) {}

const std::vector<Option>& intention_options() {
  static const std::vector<Option> options = [] {
    std::vector<Option> out;
    for (auto level : kIntentionLevels)
      out.push_back({std::string(to_string(level)), std::string(to_string(level))});
    return out;
  }();
  return options;
}

const std::vector<Option>& concern_options() {
  static const std::vector<Option> options = {{"health", "health"},
                                              {"environment/animals", "environment/animals"}};
  return options;
}

const std::vector<Option>& stance_options() {
  static const std::vector<Option> options = make_options({kAgree, kDisagree});
  return options;
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char ch : text) {
    const bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::vector<std::string> schedule_counters(Policy policy, Concern concern,
                                           const KnowledgeBase& kb, std::uint64_t seed,
                                           bool shuffle) {
  // Each entry is one (type, per-type count) lane; lanes are interleaved by rank.
  std::vector<ArgumentType> lanes;
  std::size_t per_lane = 0;
  if (policy == Policy::Strategic) {
    const Scope scope = concern == Concern::Health ? Scope::Personal : Scope::Impersonal;
    lanes = {consequential_type(Polarity::Positive, scope),
             consequential_type(Polarity::Negative, scope)};
    per_lane = kStrategicPerType;
  } else {
    lanes = {ArgumentType::PPC, ArgumentType::NPC, ArgumentType::PIC, ArgumentType::NIC};
    per_lane = kBaselinePerType;
  }

  std::vector<std::vector<const CounterArgument*>> ranked;
  for (auto type : lanes) {
    ranked.push_back(kb.ranked(type));
    if (ranked.back().size() < per_lane) throw PolicyUnavailable(policy);
  }

  std::vector<std::string> out;
  out.reserve(DialogueConfig::kCountersTotal);
  for (std::size_t r = 0; r < per_lane; ++r)
    for (const auto& lane : ranked) out.push_back(lane[r]->id);

  if (shuffle) {
    Rng rng(derive_seed(seed, 0x5c4edu));
    shuffle_in_place(out, rng);
  }
  return out;
}

DialogueEngine::DialogueEngine(const KnowledgeBase& kb, Clock clock)
    : kb_(kb), clock_(std::move(clock)) {
  const auto report = validate(kb_);
  baseline_ok_ = report.supports(Policy::Baseline);
  strategic_ok_ = report.supports(Policy::Strategic);
}

Session DialogueEngine::new_session(std::string id, const DialogueConfig& config) const {
  if (!(config.policy == Policy::Baseline ? baseline_ok_ : strategic_ok_))
    throw PolicyUnavailable(config.policy);
  if (config.expand_min_words < 0 || config.max_expand_prompts < 0)
    throw std::invalid_argument("expand settings must be non-negative");
  Session s;
  s.id = std::move(id);
  s.config = config;
  s.state = {Phase::AwaitInitialIntention, 0};
  emit(s, Actor::Bot, EventKind::Prompt, std::string(kIntentionQuestion));
  return s;
}

void DialogueEngine::emit(Session& s, Actor actor, EventKind kind, std::string payload) const {
  Event e;
  e.seq = static_cast<std::int64_t>(s.events.size());
  e.actor = actor;
  e.kind = kind;
  e.payload = std::move(payload);
  e.state_after = s.state;
  e.timestamp_ms = clock_ ? clock_() : 0;
  s.events.push_back(std::move(e));
}

void DialogueEngine::present_next(Session& s, int index) const {
  s.state = {Phase::AwaitStance, index};
  emit(s, Actor::Bot, EventKind::CounterArgument, s.schedule.at(static_cast<std::size_t>(index - 1)));
}

// Records the user's event, then moves on to the next counterargument or the
// closing intention question.
void DialogueEngine::advance_after(Session& s, EventKind user_kind, std::string payload) const {
  const int i = s.state.index;
  if (i < DialogueConfig::kCountersTotal) {
    s.state = {Phase::PresentCounter, i + 1};
    emit(s, Actor::User, user_kind, std::move(payload));
    present_next(s, i + 1);
  } else {
    s.state = {Phase::AwaitFinalIntention, 0};
    emit(s, Actor::User, user_kind, std::move(payload));
    emit(s, Actor::Bot, EventKind::Prompt, std::string(kFinalIntentionQuestion));
  }
}

void DialogueEngine::take_reply(Session& s, std::string_view text, bool first_part) const {
  if (first_part) {
    s.pending_text = std::string(text);
    s.expands_used = 0;
  } else {
    s.pending_text += " ";
    s.pending_text += text;
  }
  const bool short_reply =
      word_count(s.pending_text) < static_cast<std::size_t>(s.config.expand_min_words);
  if (short_reply && s.expands_used < s.config.max_expand_prompts) {
    ++s.expands_used;
    s.state = {Phase::AwaitExpand, s.state.index};
    emit(s, Actor::User, EventKind::FreeText, std::string(text));
    emit(s, Actor::Bot, EventKind::Prompt, std::string(kExpandPrompt));
    return;
  }
  const int i = s.state.index;
  s.harvested.push_back({std::move(s.pending_text), s.schedule.at(static_cast<std::size_t>(i - 1)),
                         i, s.pending_trigger});
  s.pending_text.clear();
  s.expands_used = 0;
  advance_after(s, EventKind::FreeText, std::string(text));
}

std::vector<Option> DialogueEngine::main_argument_options() const {
  std::vector<Option> out;
  for (const auto& arg : kb_.popular_args) out.push_back({arg.id, arg.text});
  out.push_back({std::string(kOtherOption), std::string(kOtherOption)});
  return out;
}

const Option* DialogueEngine::match_option(const std::vector<Option>& options,
                                           std::string_view input) {
  const auto t = trim(input);
  for (const auto& o : options)
    if (iequals(t, o.value) || iequals(t, o.label)) return &o;
  return nullptr;
}

Prompt DialogueEngine::current_prompt(const Session& s) const {
  Prompt p;
  p.state = s.state;
  switch (s.state.phase) {
    case Phase::AwaitInitialIntention:
      p.text = kIntentionQuestion;
      p.options = intention_options();
      break;
    case Phase::AwaitConcern:
      p.text = kConcernQuestion;
      p.options = concern_options();
      break;
    case Phase::AwaitMainArgument:
      p.text = kMainArgumentQuestion;
      p.options = main_argument_options();
      break;
    case Phase::PresentCounter:
    case Phase::AwaitStance: {
      const auto& id = s.schedule.at(static_cast<std::size_t>(s.state.index - 1));
      const auto* counter = kb_.find_counter(id);
      p.text = counter ? counter->text : id;
      p.counter_id = id;
      p.options = stance_options();
      break;
    }
    case Phase::AwaitWhy:
      p.text = kWhyPrompt;
      p.free_text = true;
      break;
    case Phase::AwaitWhyEatMeat:
      p.text = kWhyEatMeatPrompt;
      p.free_text = true;
      break;
    case Phase::AwaitExpand:
      p.text = kExpandPrompt;
      p.free_text = true;
      break;
    case Phase::AwaitFinalIntention:
      p.text = kFinalIntentionQuestion;
      p.options = intention_options();
      break;
    case Phase::Done:
      p.text = kClosing;
      break;
  }
  return p;
}

Prompt DialogueEngine::apply(Session& s, std::string_view input) const {
  if (s.done()) throw SessionDone();

  const Prompt waiting = current_prompt(s);
  if (waiting.free_text) {
    const auto text = trim(input);
    if (text.empty())
      throw InvalidInput("a non-empty reply is required", s.state, {});
    const bool first = s.state.phase != Phase::AwaitExpand;
    if (first)
      s.pending_trigger = s.state.phase == Phase::AwaitWhy ? HarvestTrigger::Disagree
                                                           : HarvestTrigger::Agree;
    take_reply(s, text, first);
    return current_prompt(s);
  }

  const Option* chosen = match_option(waiting.options, input);
  if (!chosen)
    throw InvalidInput("'" + trim(input) + "' is not a valid option in state " +
                           s.state.to_string(),
                       s.state, waiting.options);
  const std::string value = chosen->value;

  switch (s.state.phase) {
    case Phase::AwaitInitialIntention:
      s.initial_intention = parse_intention(value);
      s.state = {Phase::AwaitConcern, 0};
      emit(s, Actor::User, EventKind::Choice, value);
      emit(s, Actor::Bot, EventKind::Prompt, std::string(kConcernQuestion));
      break;
    case Phase::AwaitConcern:
      s.concern = parse_concern(value);
      s.state = {Phase::AwaitMainArgument, 0};
      emit(s, Actor::User, EventKind::Choice, value);
      emit(s, Actor::Bot, EventKind::Prompt, std::string(kMainArgumentQuestion));
      break;
    case Phase::AwaitMainArgument:
      s.schedule = schedule_counters(s.config.policy, *s.concern, kb_, s.config.seed,
                                     s.config.shuffle_order);
      s.main_argument = value;
      s.state = {Phase::PresentCounter, 1};
      emit(s, Actor::User, EventKind::Choice, value);
      present_next(s, 1);
      break;
    case Phase::AwaitStance:
      if (value == kDisagree) {
        ++s.disagreements;
        s.state = {Phase::AwaitWhy, s.state.index};
        emit(s, Actor::User, EventKind::Stance, value);
        emit(s, Actor::Bot, EventKind::Prompt, std::string(kWhyPrompt));
      } else if (s.config.variant == Variant::II) {
        s.state = {Phase::AwaitWhyEatMeat, s.state.index};
        emit(s, Actor::User, EventKind::Stance, value);
        emit(s, Actor::Bot, EventKind::Prompt, std::string(kWhyEatMeatPrompt));
      } else {
        advance_after(s, EventKind::Stance, value);
      }
      break;
    case Phase::AwaitFinalIntention:
      s.final_intention = parse_intention(value);
      s.state = {Phase::Done, 0};
      emit(s, Actor::User, EventKind::Choice, value);
      emit(s, Actor::Bot, EventKind::Prompt, std::string(kClosing));
      break;
    default:
      throw std::logic_error("unexpected dialogue state " + s.state.to_string());
  }
  return current_prompt(s);
}

std::size_t harvest_count(const Session& session) {
  if (!session.done()) throw SessionNotDone();
  return session.harvested.size();
}

}  // namespace persuade
