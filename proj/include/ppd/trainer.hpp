#pragma once

#include "ppd/env.hpp"
#include "ppd/qnet.hpp"
#include "ppd/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ppd {

struct TrainConfig {
    int episodes = 200;
    int steps_min = 5;   // per-phase step count range, drawn per episode
    int steps_max = 20;
    double gamma = 0.99;
    int batch_size = 128;
    int target_sync_every = 100;  // environment steps, global counter
    double epsilon_start = 1.0;
    double epsilon_end = 0.1;
    int replay_capacity = 10000;
    int updates_per_step = 1;  // gradient updates per environment step
    std::uint64_t seed = 0;
};

// Linear anneal from epsilon_start to epsilon_end over total_steps,
// clamped thereafter.
double epsilon_at(long step, long total_steps, const TrainConfig& cfg);

// Epsilon-greedy over candidate action encodings; greedy ties go to the
// lowest index. Throws on an empty candidate list.
int select_action(const QNetParams& p, const std::vector<ActionFeatures>& phis,
                  double epsilon, Rng& rng);

struct EpisodeRecord {
    int episode = 0;
    int t_att = 0;
    int t_def = 0;
    double dice_ideal = 0.0;
    double dice_attacked = 0.0;
    double dice_defended = 0.0;
    double loss_att = 0.0;
    double loss_def = 0.0;
};

std::string episode_record_to_json(const EpisodeRecord& r);

// Observer for instrumentation/tests: called after every training
// environment step with the global step counter and both target nets.
struct TrainStepInfo {
    long global_step = 0;
    Phase phase = Phase::attack;
    const QNetParams* target_att = nullptr;
    const QNetParams* target_def = nullptr;
};
using TrainObserver = std::function<void(const TrainStepInfo&)>;

struct TrainResult {
    QNetParams q_att;
    QNetParams q_def;
    std::vector<EpisodeRecord> history;
};

// Alternating adversarial training: per episode, an epsilon-greedy attack
// rollout updating the attacker, a greedy attack rollout producing the
// attacked pool, then an epsilon-greedy defense rollout updating the
// defender. Single-threaded and deterministic in cfg.seed.
TrainResult train_ppd(const std::vector<std::pair<Image, Mask>>& dataset,
                      const TrainConfig& cfg, const SegmenterConfig& seg,
                      int patch_size, int interval,
                      const TrainObserver& observer = nullptr);

// Greedy (epsilon = 0) rollout of a policy for `steps` env steps starting
// from `state`. Requires ground truth in env.
EnvState greedy_rollout(const SceneEnv& env, EnvState state, const QNetParams& q,
                        int steps);

// Defense-only inference: repeatedly deactivate the active prompt with the
// highest Q-value, for at most `budget` steps, stopping early when the
// best Q-value falls below q_threshold or one active prompt remains.
// Never consults ground truth. Throws if the pool has no active prompt.
PromptPool infer_defense(const QNetParams& q_def, const SceneEnv& env,
                         PromptPool pool, int budget, double q_threshold = 0.0);

}  // namespace ppd
