#pragma once

#include "ppd/image.hpp"
#include "ppd/metrics.hpp"
#include "ppd/patch_grid.hpp"
#include "ppd/prompts.hpp"
#include "ppd/segmenter.hpp"

#include <array>
#include <optional>
#include <vector>

namespace ppd {

enum class Phase { attack, defense };

inline constexpr int kActionFeatureDim = 12;
using ActionFeatures = std::array<double, kActionFeatureDim>;

// Immutable per-image context: the dual-space graph plus the normalizers
// used by the action encoding. gt may be null (inference).
struct SceneEnv {
    const Image* img = nullptr;
    const Mask* gt = nullptr;
    PatchGrid grid;
    DualSpaceGraph graph;
    SegmenterConfig seg;
    double f_max = 1.0;    // max entry of m_f, distance normalizer
    double img_diag = 1.0; // sqrt(W^2 + H^2)
};

SceneEnv build_scene_env(const Image& img, const Mask* gt, int patch_size,
                         const SegmenterConfig& seg);

struct EnvState {
    Phase phase = Phase::attack;
    PromptPool pool;
    int step = 0;
    int max_steps = 0;
    std::optional<double> last_dice;  // absent at inference (no ground truth)
    bool terminal = false;
};

struct StepResult {
    double reward = 0.0;
    Mask pred;
};

// Attack phase: ids of inactive prompts; defense phase: ids of active
// prompts. Ascending id order. Throws on a terminal state.
std::vector<int> legal_actions(const EnvState& state);

// 12-entry action encoding. Never reads the ground truth.
//  [0] candidate polarity (+1 positive / -1 negative)
//  [1] candidate status (1 active / 0 inactive)
//  [2] phase flag (1 attack / 0 defense)
//  [3,4] min/mean feature distance to patches of active positive prompts, / f_max
//  [5,6] min/mean feature distance to patches of active negative prompts, / f_max
//  [7,8] min/mean physical distance to all active prompts, / img_diag
//  [9] fraction of the pool active
//  [10] fraction of active prompts that are positive
//  [11] fraction of steps consumed (step / max_steps; 0 when max_steps = 0)
// Empty reference groups encode as the maximal-distance sentinel 1.0.
ActionFeatures encode_action_features(const SceneEnv& env, const EnvState& state,
                                      int action);

EnvState env_reset(const SceneEnv& env, PromptPool pool, Phase phase, int max_steps);

// Toggles the chosen prompt, reruns the segmenter, and rewards the Dice
// delta (negated in the attack phase). Requires ground truth in env.
StepResult env_step(const SceneEnv& env, EnvState& state, int action);

}  // namespace ppd
