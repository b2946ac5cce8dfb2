#include "ppd/trainer.hpp"

#include "ppd/replay.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace ppd {
namespace {

std::vector<ActionFeatures> encode_all(const SceneEnv& env, const EnvState& state,
                                       const std::vector<int>& actions) {
    std::vector<ActionFeatures> phis;
    phis.reserve(actions.size());
    for (int a : actions) phis.push_back(encode_action_features(env, state, a));
    return phis;
}

int argmax_q(const QNetParams& q, const std::vector<ActionFeatures>& phis) {
    int best = 0;
    double best_q = qnet_forward(q, phis[0]);
    for (std::size_t i = 1; i < phis.size(); ++i) {
        double v = qnet_forward(q, phis[i]);
        if (v > best_q) {
            best_q = v;
            best = static_cast<int>(i);
        }
    }
    return best;
}

struct SceneCache {
    SceneEnv env;
    PromptPool ideal_pool;  // all active
    double dice_ideal = 0.0;
};

// One agent's training loop state.
struct AgentState {
    QNetParams online;
    QNetParams target;
    AdamState adam;
    ReplayBuffer buffer;

    AgentState(Rng& init_rng, const TrainConfig& cfg)
        : online(QNetParams::glorot_init(init_rng)),
          target(sync_target(online)),
          adam(AdamState::for_params(online)),
          buffer(static_cast<std::size_t>(cfg.replay_capacity)) {}
};

}  // namespace

double epsilon_at(long step, long total_steps, const TrainConfig& cfg) {
    if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
    double t = static_cast<double>(step) / static_cast<double>(total_steps);
    if (t <= 0.0) return cfg.epsilon_start;
    if (t >= 1.0) return cfg.epsilon_end;
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * t;
}

int select_action(const QNetParams& p, const std::vector<ActionFeatures>& phis,
                  double epsilon, Rng& rng) {
    if (phis.empty()) throw std::invalid_argument("no candidate actions");
    if (rng.next_float() < epsilon)
        return static_cast<int>(rng.next_int(phis.size()));
    return argmax_q(p, phis);
}

std::string episode_record_to_json(const EpisodeRecord& r) {
    nlohmann::ordered_json j{{"episode", r.episode},
                             {"t_att", r.t_att},
                             {"t_def", r.t_def},
                             {"dice_ideal", r.dice_ideal},
                             {"dice_attacked", r.dice_attacked},
                             {"dice_defended", r.dice_defended},
                             {"loss_att", r.loss_att},
                             {"loss_def", r.loss_def}};
    return j.dump();
}

EnvState greedy_rollout(const SceneEnv& env, EnvState state, const QNetParams& q,
                        int steps) {
    for (int s = 0; s < steps && !state.terminal; ++s) {
        std::vector<int> actions = legal_actions(state);
        std::vector<ActionFeatures> phis = encode_all(env, state, actions);
        env_step(env, state, actions[argmax_q(q, phis)]);
    }
    return state;
}

TrainResult train_ppd(const std::vector<std::pair<Image, Mask>>& dataset,
                      const TrainConfig& cfg, const SegmenterConfig& seg,
                      int patch_size, int interval, const TrainObserver& observer) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    if (cfg.steps_min > cfg.steps_max || cfg.steps_min < 0)
        throw std::invalid_argument("bad step range");

    Rng init_rng(cfg.seed, 0);
    AgentState att(init_rng, cfg);
    AgentState def(init_rng, cfg);
    Rng rng(cfg.seed, 1);

    std::vector<SceneCache> scenes;
    scenes.reserve(dataset.size());
    for (const auto& [img, mask] : dataset) {
        SceneCache sc;
        sc.env = build_scene_env(img, &mask, patch_size, seg);
        sc.ideal_pool = init_ideal_prompts(mask, interval, sc.env.grid);
        sc.dice_ideal = dice(segment(img, sc.ideal_pool, seg), mask);
        scenes.push_back(std::move(sc));
    }

    const long total_anneal_steps =
        std::max<long>(1, static_cast<long>(cfg.episodes) * (cfg.steps_min + cfg.steps_max));
    long global_step = 0;
    long target_version = 0;  // bumped on every target sync

    // One epsilon-greedy rollout with learning for one agent.
    auto run_phase = [&](AgentState& agent, const SceneEnv& env, EnvState& state,
                         Phase phase, double* loss_sum, int* loss_count) {
        while (!state.terminal) {
            std::vector<int> actions = legal_actions(state);
            std::vector<ActionFeatures> phis = encode_all(env, state, actions);
            double eps = epsilon_at(global_step, total_anneal_steps, cfg);
            int idx = select_action(agent.online, phis, eps, rng);

            Transition t;
            t.phi = phis[idx];
            StepResult r = env_step(env, state, actions[idx]);
            t.reward = r.reward;
            t.terminal = state.terminal;
            if (!state.terminal)
                t.next_phis = encode_all(env, state, legal_actions(state));
            agent.buffer.push(std::move(t));

            if (agent.buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
                for (int u = 0; u < cfg.updates_per_step; ++u) {
                    auto batch = agent.buffer.sample_ptrs(cfg.batch_size, rng);
                    auto [loss, grad] = td_loss_and_grad(agent.online, agent.target, batch,
                                                         cfg.gamma, target_version);
                    adam_step(agent.online, agent.adam, grad);
                    *loss_sum += loss;
                    ++*loss_count;
                }
            }

            ++global_step;
            if (global_step % cfg.target_sync_every == 0) {
                att.target = sync_target(att.online);
                def.target = sync_target(def.online);
                ++target_version;
            }
            if (observer)
                observer(TrainStepInfo{global_step, phase, &att.target, &def.target});
        }
    };

    TrainResult result{att.online, def.online, {}};
    for (int episode = 0; episode < cfg.episodes; ++episode) {
        SceneCache& sc = scenes[episode % scenes.size()];
        int t_att = static_cast<int>(rng.next_range(cfg.steps_min, cfg.steps_max));
        int t_def = static_cast<int>(rng.next_range(cfg.steps_min, cfg.steps_max));

        EpisodeRecord rec;
        rec.episode = episode;
        rec.t_att = t_att;
        rec.t_def = t_def;
        rec.dice_ideal = sc.dice_ideal;

        // Attack phase: learn on an epsilon-greedy rollout.
        PromptPool pool = sc.ideal_pool;
        set_attack_start_statuses(pool);
        EnvState att_state = env_reset(sc.env, pool, Phase::attack, t_att);
        int att_updates = 0;
        run_phase(att, sc.env, att_state, Phase::attack, &rec.loss_att, &att_updates);
        if (att_updates > 0) rec.loss_att /= att_updates;

        // Greedy attack rollout produces the attacked pool.
        PromptPool pool2 = sc.ideal_pool;
        set_attack_start_statuses(pool2);
        EnvState attacked =
            greedy_rollout(sc.env, env_reset(sc.env, pool2, Phase::attack, t_att),
                           att.online, t_att);
        rec.dice_attacked = attacked.last_dice.value();

        // Defense phase: learn starting from the attacked pool.
        EnvState def_state = env_reset(sc.env, attacked.pool, Phase::defense, t_def);
        int def_updates = 0;
        run_phase(def, sc.env, def_state, Phase::defense, &rec.loss_def, &def_updates);
        if (def_updates > 0) rec.loss_def /= def_updates;
        rec.dice_defended = def_state.last_dice.value();

        result.history.push_back(rec);
    }

    result.q_att = std::move(att.online);
    result.q_def = std::move(def.online);
    return result;
}

PromptPool infer_defense(const QNetParams& q_def, const SceneEnv& env,
                         PromptPool pool, int budget, double q_threshold) {
    if (pool.active_count() == 0) throw std::invalid_argument("no active prompts");

    EnvState state;
    state.phase = Phase::defense;
    state.pool = std::move(pool);
    state.max_steps = budget;

    for (int s = 0; s < budget; ++s) {
        if (state.pool.active_count() <= 1) break;
        std::vector<int> actions = legal_actions(state);
        std::vector<ActionFeatures> phis = encode_all(env, state, actions);
        int idx = argmax_q(q_def, phis);
        if (qnet_forward(q_def, phis[idx]) < q_threshold) break;
        state.pool.prompts[actions[idx]].status = Status::inactive;
        ++state.step;
    }
    return state.pool;
}

}  // namespace ppd
