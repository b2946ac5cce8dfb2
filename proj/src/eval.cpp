#include "ppd/eval.hpp"

#include "ppd/metrics.hpp"
#include "ppd/trainer.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace ppd {
namespace {

struct Accumulator {
    std::vector<double> dices, ious;

    void add(const Mask& pred, const Mask& gt) {
        dices.push_back(dice(pred, gt));
        ious.push_back(iou(pred, gt));
    }

    EvalRow row(const std::string& name) const {
        auto stats = [](const std::vector<double>& xs) {
            double mean = 0;
            for (double x : xs) mean += x;
            mean /= xs.empty() ? 1 : xs.size();
            double var = 0;
            for (double x : xs) var += (x - mean) * (x - mean);
            var /= xs.empty() ? 1 : xs.size();
            return std::pair{mean, std::sqrt(var)};
        };
        auto [md, sd] = stats(dices);
        auto [mi, si] = stats(ious);
        return EvalRow{name, md, sd, mi, si};
    }
};

int effective_budget(const EvalOptions& opts, const PromptPool& pool) {
    if (opts.defend_budget >= 0) return opts.defend_budget;
    return std::max(0, pool.active_count() - 1);
}

}  // namespace

std::vector<EvalRow> eval_ablation(const std::vector<std::pair<Image, Mask>>& dataset,
                                   const QNetParams& q_att, const QNetParams& q_def,
                                   const EvalOptions& opts) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    Accumulator ideal, attacked, defended;
    for (const auto& [img, mask] : dataset) {
        SceneEnv env = build_scene_env(img, &mask, opts.patch_size, opts.seg);
        PromptPool pool = init_ideal_prompts(mask, opts.interval, env.grid);
        ideal.add(segment(img, pool, opts.seg), mask);

        PromptPool start = pool;
        set_attack_start_statuses(start);
        EnvState att_state = greedy_rollout(
            env, env_reset(env, start, Phase::attack, opts.attack_steps), q_att,
            opts.attack_steps);
        attacked.add(segment(img, att_state.pool, opts.seg), mask);

        PromptPool refined = infer_defense(q_def, env, att_state.pool,
                                           effective_budget(opts, att_state.pool),
                                           opts.q_threshold);
        defended.add(segment(img, refined, opts.seg), mask);
    }
    return {ideal.row("ideal_prompts"), attacked.row("attacked_ideal_prompts"),
            defended.row("defense_against_attacks")};
}

std::vector<EvalRow> eval_fm(const std::vector<std::pair<Image, Mask>>& dataset,
                             const QNetParams& q_def, const EvalOptions& opts) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    const Image& ref_img = dataset[0].first;
    const Mask& ref_mask = dataset[0].second;

    Accumulator raw, refined_acc;
    for (const auto& [img, mask] : dataset) {
        PromptPool fm = feature_match_prompts(ref_img, ref_mask, img, opts.patch_size);
        SceneEnv env = build_scene_env(img, &mask, opts.patch_size, opts.seg);
        raw.add(segment(img, fm, opts.seg), mask);

        PromptPool refined = infer_defense(q_def, env, fm, effective_budget(opts, fm),
                                           opts.q_threshold);
        refined_acc.add(segment(img, refined, opts.seg), mask);
    }
    return {raw.row("feature_matching"), refined_acc.row("feature_matching_ppd")};
}

std::string report_to_json(const std::string& mode, const std::vector<EvalRow>& rows) {
    nlohmann::ordered_json out;
    out["mode"] = mode;
    out["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        out["rows"].push_back({{"name", r.name},
                               {"mean_dice", r.mean_dice},
                               {"std_dice", r.std_dice},
                               {"mean_iou", r.mean_iou},
                               {"std_iou", r.std_iou}});
    return out.dump(2);
}

}  // namespace ppd
