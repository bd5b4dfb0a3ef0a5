#include "persuade/simulation.hpp"

#include <algorithm>
#include <future>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace persuade {

IntentionLevel PersuadeeModel::final_intention(int matched_agreements) const {
  const int step = agreements_per_level > 0 ? matched_agreements / agreements_per_level : 0;
  return intention_from_ordinal(std::clamp(ordinal(initial_intention) + step, 0, 4));
}

const std::vector<std::string>& default_reply_bank() {
  static const std::vector<std::string> bank = {
      "I really enjoy the taste of meat",
      "It is part of every meal I grew up with",
      "I need the protein for my training",
      "Meat keeps me full for much longer",
      "My family cooks meat almost every day",
      "I do not trust the meat substitutes",
      "It is quick and easy to prepare after work",
      "I think a balanced diet includes some meat",
  };
  return bank;
}

const std::vector<std::string>& terse_reply_bank() {
  static const std::vector<std::string> bank = {"taste", "protein", "habit", "too expensive",
                                                "no time"};
  return bank;
}

Session run_dialogue(const PersuadeeModel& model, const DialogueConfig& config,
                     const DialogueEngine& engine, std::string session_id) {
  if (model.p_agree_matched < 0 || model.p_agree_matched > 1 || model.p_agree_unmatched < 0 ||
      model.p_agree_unmatched > 1)
    throw std::invalid_argument("agreement probabilities must lie in [0, 1]");
  const auto& bank = model.reply_bank.empty() ? default_reply_bank() : model.reply_bank;

  Rng rng(model.seed);
  Session s = engine.new_session(std::move(session_id), config);
  int matched_agreements = 0;
  while (!s.done()) {
    const Prompt prompt = engine.current_prompt(s);
    std::string answer;
    switch (prompt.state.phase) {
      case Phase::AwaitInitialIntention:
        answer = to_string(model.initial_intention);
        break;
      case Phase::AwaitConcern:
        answer = model.concern == Concern::Health ? "health" : "environment/animals";
        break;
      case Phase::AwaitMainArgument:
        answer = prompt.options[uniform_index(rng, prompt.options.size())].value;
        break;
      case Phase::AwaitStance: {
        const auto* counter = engine.kb().find_counter(*prompt.counter_id);
        const bool matched = counter && concern_of(counter->type) == model.concern;
        const bool agree =
            bernoulli(rng, matched ? model.p_agree_matched : model.p_agree_unmatched);
        if (agree && matched) ++matched_agreements;
        answer = agree ? kAgree : kDisagree;
        break;
      }
      case Phase::AwaitWhy:
      case Phase::AwaitWhyEatMeat:
      case Phase::AwaitExpand:
        answer = bank[uniform_index(rng, bank.size())];
        break;
      case Phase::AwaitFinalIntention:
        answer = to_string(model.final_intention(matched_agreements));
        break;
      default:
        throw std::logic_error("simulated persuadee met state " + prompt.state.to_string());
    }
    engine.apply(s, answer);
  }
  return s;
}

PersuadeeModel ModelTemplate::sample(Rng& rng) const {
  PersuadeeModel m;
  m.concern = concern ? *concern
                      : (uniform_index(rng, 2) == 0 ? Concern::Health : Concern::Environment);
  m.initial_intention = initial_intention
                            ? *initial_intention
                            : intention_from_ordinal(static_cast<int>(uniform_index(rng, 5)));
  m.p_agree_matched = p_agree_matched;
  m.p_agree_unmatched = p_agree_unmatched;
  m.agreements_per_level = agreements_per_level;
  m.reply_bank = reply_bank;
  m.seed = rng();
  return m;
}

ModelTemplate ModelTemplate::from_json(const Json& j) {
  ModelTemplate t;
  if (j.contains("concern") && j["concern"] != "random")
    t.concern = parse_concern(j["concern"].get<std::string>());
  if (j.contains("initial_intention") && j["initial_intention"] != "random") {
    const auto level = parse_intention(j["initial_intention"].get<std::string>());
    if (!level) throw std::invalid_argument("unknown initial_intention");
    t.initial_intention = *level;
  }
  t.p_agree_matched = j.value("p_agree_matched", t.p_agree_matched);
  t.p_agree_unmatched = j.value("p_agree_unmatched", t.p_agree_unmatched);
  t.agreements_per_level = j.value("agreements_per_level", t.agreements_per_level);
  if (j.contains("reply_bank")) {
    const auto& bank = j["reply_bank"];
    if (bank.is_string())
      t.reply_bank = bank == "terse" ? terse_reply_bank() : default_reply_bank();
    else
      t.reply_bank = bank.get<std::vector<std::string>>();
  }
  for (double p : {t.p_agree_matched, t.p_agree_unmatched})
    if (p < 0 || p > 1) throw std::invalid_argument("agreement probabilities must lie in [0, 1]");
  return t;
}

Json ModelTemplate::to_json() const {
  return {{"concern", concern ? std::string(persuade::to_string(*concern)) : "random"},
          {"initial_intention",
           initial_intention ? std::string(persuade::to_string(*initial_intention)) : "random"},
          {"p_agree_matched", p_agree_matched},
          {"p_agree_unmatched", p_agree_unmatched},
          {"agreements_per_level", agreements_per_level},
          {"reply_bank", reply_bank}};
}

std::vector<DialogueConfig> all_arms(const DialogueConfig& base) {
  std::vector<DialogueConfig> out;
  for (auto policy : {Policy::Baseline, Policy::Strategic})
    for (auto variant : {Variant::I, Variant::II}) {
      DialogueConfig c = base;
      c.policy = policy;
      c.variant = variant;
      out.push_back(c);
    }
  return out;
}

std::vector<ArmResult> run_experiment(std::size_t n_per_arm, const ModelSampler& models,
                                      std::span<const DialogueConfig> arms,
                                      const DialogueEngine& engine, std::uint64_t seed) {
  if (n_per_arm == 0) throw std::invalid_argument("n_per_arm must be at least 1");

  auto run_arm = [&](std::size_t a) {
    ArmResult result;
    result.config = arms[a];
    result.sessions.reserve(n_per_arm);
    for (std::size_t i = 0; i < n_per_arm; ++i) {
      Rng rng(derive_seed(seed, a, i));
      const PersuadeeModel model = models(rng);
      DialogueConfig config = arms[a];
      config.seed = rng();
      std::ostringstream id;
      id << to_string(config.policy) << "-" << to_string(config.variant) << "-a" << a << "-"
         << std::setw(4) << std::setfill('0') << i;
      result.sessions.push_back(run_dialogue(model, config, engine, id.str()));
    }
    return result;
  };

  std::vector<std::future<ArmResult>> pending;
  for (std::size_t a = 0; a < arms.size(); ++a)
    pending.push_back(std::async(std::launch::async, run_arm, a));
  std::vector<ArmResult> out;
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

}  // namespace persuade
