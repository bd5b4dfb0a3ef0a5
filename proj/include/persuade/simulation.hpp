#pragma once

// Synthetic persuadees and a batch experiment runner. The persuadee dynamics
// are a test harness, not a model of human behaviour.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "persuade/dialogue.hpp"
#include "persuade/random.hpp"

namespace persuade {

struct PersuadeeModel {
  Concern concern = Concern::Health;
  IntentionLevel initial_intention = IntentionLevel::Might;
  double p_agree_matched = 0.8;    // counter addresses the persuadee's concern
  double p_agree_unmatched = 0.5;
  int agreements_per_level = 4;    // matched agreements per +1 intention level
  std::vector<std::string> reply_bank;
  std::uint64_t seed = 0;

  /// initial + matched_agreements / agreements_per_level, capped at the top level.
  IntentionLevel final_intention(int matched_agreements) const;
};

/// Replies of at least four words, so no expand prompt is triggered.
const std::vector<std::string>& default_reply_bank();
/// One- and two-word replies that exercise the expand path.
const std::vector<std::string>& terse_reply_bank();

/// Drives one dialogue to completion. Throws what the engine throws.
Session run_dialogue(const PersuadeeModel& model, const DialogueConfig& config,
                     const DialogueEngine& engine, std::string session_id = "sim");

/// Parameters for drawing persuadees; unset fields are drawn uniformly.
struct ModelTemplate {
  std::optional<Concern> concern;
  std::optional<IntentionLevel> initial_intention;
  double p_agree_matched = 0.8;
  double p_agree_unmatched = 0.5;
  int agreements_per_level = 4;
  std::vector<std::string> reply_bank = default_reply_bank();

  PersuadeeModel sample(Rng& rng) const;

  static ModelTemplate from_json(const Json& j);
  Json to_json() const;
};

using ModelSampler = std::function<PersuadeeModel(Rng&)>;

struct ArmResult {
  DialogueConfig config;
  std::vector<Session> sessions;
};

/// {baseline, strategic} x {Variant I, Variant II}.
std::vector<DialogueConfig> all_arms(const DialogueConfig& base = {});

/// n_per_arm sessions per arm. Each session's stream is derived from
/// (seed, arm index, session index), so arms run concurrently without
/// affecting results. Throws std::invalid_argument if n_per_arm == 0.
std::vector<ArmResult> run_experiment(std::size_t n_per_arm, const ModelSampler& models,
                                      std::span<const DialogueConfig> arms,
                                      const DialogueEngine& engine, std::uint64_t seed);

}  // namespace persuade
