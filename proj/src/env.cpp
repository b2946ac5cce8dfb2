#include "ppd/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ppd {
namespace {

bool has_legal_action(const PromptPool& pool, Phase phase) {
    for (const auto& p : pool.prompts) {
        bool legal = phase == Phase::attack ? p.status == Status::inactive
                                            : p.status == Status::active;
        if (legal) return true;
    }
    return false;
}

}  // namespace

SceneEnv build_scene_env(const Image& img, const Mask* gt, int patch_size,
                         const SegmenterConfig& seg) {
    SceneEnv env;
    env.img = &img;
    env.gt = gt;
    env.grid = build_patch_grid(img, patch_size);
    env.graph = build_dual_space_graph(env.grid);
    env.seg = seg;
    env.f_max = env.graph.m_f.max_entry();
    if (env.f_max <= 0) env.f_max = 1.0;  // uniform image: any divisor works
    env.img_diag = std::sqrt(static_cast<double>(img.width) * img.width +
                             static_cast<double>(img.height) * img.height);
    return env;
}

std::vector<int> legal_actions(const EnvState& state) {
    if (state.terminal) throw std::logic_error("legal_actions on terminal state");
    std::vector<int> out;
    for (const auto& p : state.pool.prompts) {
        bool legal = state.phase == Phase::attack ? p.status == Status::inactive
                                                  : p.status == Status::active;
        if (legal) out.push_back(p.id);
    }
    return out;
}

ActionFeatures encode_action_features(const SceneEnv& env, const EnvState& state,
                                      int action) {
    const auto& pool = state.pool;
    if (action < 0 || action >= pool.size())
        throw std::invalid_argument("invalid prompt id");
    const PromptPoint& cand = pool.prompts[action];

    double min_f_pos = 1.0, sum_f_pos = 0.0;
    double min_f_neg = 1.0, sum_f_neg = 0.0;
    double min_p_all = 1.0, sum_p_all = 0.0;
    double min_p_opp = 1.0;
    int n_pos = 0, n_neg = 0, n_act = 0, n_opp = 0;
    for (const auto& p : pool.prompts) {
        if (p.status != Status::active) continue;
        ++n_act;
        double df = env.graph.m_f(cand.patch_index, p.patch_index) / env.f_max;
        double dp = env.graph.m_p(cand.patch_index, p.patch_index) / env.img_diag;
        sum_p_all += dp;
        min_p_all = n_act == 1 ? dp : std::min(min_p_all, dp);
        if (p.polarity != cand.polarity) {
            ++n_opp;
            min_p_opp = n_opp == 1 ? dp : std::min(min_p_opp, dp);
        }
        if (p.polarity == Polarity::positive) {
            ++n_pos;
            sum_f_pos += df;
            min_f_pos = n_pos == 1 ? df : std::min(min_f_pos, df);
        } else {
            ++n_neg;
            sum_f_neg += df;
            min_f_neg = n_neg == 1 ? df : std::min(min_f_neg, df);
        }
    }

    ActionFeatures phi{};
    phi[0] = cand.polarity == Polarity::positive ? 1.0 : -1.0;
    phi[1] = cand.status == Status::active ? 1.0 : 0.0;
    phi[2] = state.phase == Phase::attack ? 1.0 : 0.0;
    phi[3] = n_pos > 0 ? min_f_pos : 1.0;
    phi[4] = n_pos > 0 ? sum_f_pos / n_pos : 1.0;
    phi[5] = n_neg > 0 ? min_f_neg : 1.0;
    phi[6] = n_neg > 0 ? sum_f_neg / n_neg : 1.0;
    phi[7] = n_act > 0 ? min_p_all : 1.0;
    phi[8] = n_act > 0 ? sum_p_all / n_act : 1.0;
    phi[9] = pool.size() > 0 ? static_cast<double>(n_act) / pool.size() : 0.0;
    phi[10] = n_act > 0 ? static_cast<double>(n_pos) / n_act : 0.0;
    phi[11] = n_opp > 0 ? min_p_opp : 1.0;
    return phi;
}

EnvState env_reset(const SceneEnv& env, PromptPool pool, Phase phase, int max_steps) {
    if (pool.prompts.empty()) throw std::invalid_argument("empty prompt pool");
    EnvState state;
    state.phase = phase;
    state.pool = std::move(pool);
    state.step = 0;
    state.max_steps = max_steps;
    if (env.gt != nullptr) {
        Mask pred = segment(*env.img, state.pool, env.seg);
        state.last_dice = dice(pred, *env.gt);
    }
    state.terminal = max_steps == 0 || !has_legal_action(state.pool, phase);
    return state;
}

StepResult env_step(const SceneEnv& env, EnvState& state, int action) {
    if (env.gt == nullptr)
        throw std::logic_error("env_step requires ground truth");
    if (state.terminal) throw std::logic_error("env_step on terminal state");
    if (action < 0 || action >= state.pool.size())
        throw std::invalid_argument("invalid prompt id");
    PromptPoint& p = state.pool.prompts[action];
    bool legal = state.phase == Phase::attack ? p.status == Status::inactive
                                              : p.status == Status::active;
    if (!legal) throw std::invalid_argument("illegal action for current phase");

    p.status = p.status == Status::active ? Status::inactive : Status::active;

    StepResult result;
    result.pred = segment(*env.img, state.pool, env.seg);
    double d = dice(result.pred, *env.gt);
    double delta = d - state.last_dice.value();
    result.reward = state.phase == Phase::attack ? -delta : delta;
    state.last_dice = d;
    ++state.step;
    state.terminal = state.step == state.max_steps || !has_legal_action(state.pool, state.phase);
    return result;
}

}  // namespace ppd
