#pragma once

#include "ppd/env.hpp"
#include "ppd/qnet.hpp"
#include "ppd/segmenter.hpp"

#include <string>
#include <utility>
#include <vector>

namespace ppd {

struct EvalOptions {
    int patch_size = 8;
    int interval = 8;
    SegmenterConfig seg;
    int attack_steps = 12;     // greedy attack rollout length per scene
    int defend_budget = -1;    // -1: up to (active count - 1) deactivations
    double q_threshold = 0.0;  // defense stop rule
};

struct EvalRow {
    std::string name;
    double mean_dice = 0.0;
    double std_dice = 0.0;
    double mean_iou = 0.0;
    double std_iou = 0.0;
};

// Rows: ideal prompts / attacked ideal prompts / defense against attacks.
std::vector<EvalRow> eval_ablation(const std::vector<std::pair<Image, Mask>>& dataset,
                                   const QNetParams& q_att, const QNetParams& q_def,
                                   const EvalOptions& opts);

// Rows: feature-matched prompts / feature-matched prompts + defense.
// Scene 0 of the dataset is the reference image.
std::vector<EvalRow> eval_fm(const std::vector<std::pair<Image, Mask>>& dataset,
                             const QNetParams& q_def, const EvalOptions& opts);

std::string report_to_json(const std::string& mode, const std::vector<EvalRow>& rows);

}  // namespace ppd
