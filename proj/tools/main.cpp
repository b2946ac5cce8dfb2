#include "ppd/env.hpp"
#include "ppd/eval.hpp"
#include "ppd/image.hpp"
#include "ppd/metrics.hpp"
#include "ppd/prompts.hpp"
#include "ppd/qnet.hpp"
#include "ppd/synthdata.hpp"
#include "ppd/trainer.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

int log_level() {
    const char* v = std::getenv("PPD_LOG");
    if (!v) return 1;
    std::string s(v);
    if (s == "quiet") return 0;
    if (s == "debug") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << msg << "\n";
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ppd::TrainConfig train;
    ppd::SceneSpec scene;
    int patch_size = 8;
    int interval = 8;
    ppd::SegmenterConfig seg;
};

std::string train_config_json(const ppd::TrainConfig& c, int patch_size, int interval,
                              double alpha) {
    ordered_json j{{"train.episodes", c.episodes},
                   {"train.steps_min", c.steps_min},
                   {"train.steps_max", c.steps_max},
                   {"train.gamma", c.gamma},
                   {"train.batch_size", c.batch_size},
                   {"train.target_sync_every", c.target_sync_every},
                   {"train.epsilon_start", c.epsilon_start},
                   {"train.epsilon_end", c.epsilon_end},
                   {"train.replay_capacity", c.replay_capacity},
                   {"train.updates_per_step", c.updates_per_step},
                   {"seed", c.seed},
                   {"patch_size", patch_size},
                   {"interval", interval},
                   {"segmenter.alpha", alpha}};
    return j.dump();
}

// Flat dotted-key config; unknown keys are rejected.
RunConfig parse_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "train.episodes") cfg.train.episodes = value.get<int>();
            else if (key == "train.steps_min") cfg.train.steps_min = value.get<int>();
            else if (key == "train.steps_max") cfg.train.steps_max = value.get<int>();
            else if (key == "train.gamma") cfg.train.gamma = value.get<double>();
            else if (key == "train.batch_size") cfg.train.batch_size = value.get<int>();
            else if (key == "train.target_sync_every") cfg.train.target_sync_every = value.get<int>();
            else if (key == "train.epsilon_start") cfg.train.epsilon_start = value.get<double>();
            else if (key == "train.epsilon_end") cfg.train.epsilon_end = value.get<double>();
            else if (key == "train.replay_capacity") cfg.train.replay_capacity = value.get<int>();
            else if (key == "train.updates_per_step") cfg.train.updates_per_step = value.get<int>();
            else if (key == "seed") cfg.train.seed = value.get<std::uint64_t>();
            else if (key == "patch_size") cfg.patch_size = value.get<int>();
            else if (key == "interval") cfg.interval = value.get<int>();
            else if (key == "segmenter.alpha") cfg.seg.alpha = value.get<double>();
            else if (key == "scene.size") cfg.scene.size = value.get<int>();
            else if (key == "scene.blob_count") cfg.scene.blob_count = value.get<int>();
            else if (key == "scene.noise_amp") cfg.scene.noise_amp = value.get<int>();
            else if (key == "scene.stripe_period") cfg.scene.stripe_period = value.get<int>();
            else throw ConfigError("unknown config key: " + key);
        } catch (const json::exception&) {
            throw ConfigError("bad value for config key: " + key);
        }
    }
    if (cfg.train.episodes < 0) throw ConfigError("bad value for config key: train.episodes");
    if (cfg.train.steps_min > cfg.train.steps_max)
        throw ConfigError("bad value for config key: train.steps_min");
    if (cfg.seg.alpha < 0.0 || cfg.seg.alpha > 1.0)
        throw ConfigError("bad value for config key: segmenter.alpha");
    return cfg;
}

ppd::QNetParams load_checkpoint_kind(const std::string& path, const std::string& want) {
    std::string kind;
    ppd::QNetParams q = ppd::read_checkpoint(path, &kind);
    if (kind != want)
        throw ConfigError("checkpoint " + path + " has kind '" + kind + "', expected '" +
                          want + "'");
    return q;
}

struct TraceRecord {
    std::string phase;
    int step;
    int action;
    double reward;
    double dice;
};

void write_trace(const std::string& path, const std::vector<TraceRecord>& trace) {
    ordered_json arr = ordered_json::array();
    for (const auto& t : trace)
        arr.push_back({{"phase", t.phase},
                       {"step", t.step},
                       {"action", t.action},
                       {"reward", t.reward},
                       {"dice", t.dice}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << arr.dump(2) << "\n";
}

int cmd_gen_data(const std::string& out_dir, int count, std::uint64_t seed, int size,
                 int blob_count, int noise_amp, int stripe_period) {
    ppd::SceneSpec tmpl;
    tmpl.size = size;
    tmpl.blob_count = blob_count;
    tmpl.noise_amp = noise_amp;
    tmpl.stripe_period = stripe_period;
    auto scenes = ppd::gen_dataset(count, seed, tmpl);
    ppd::write_dataset(out_dir, scenes, seed);
    log_info("wrote " + std::to_string(count) + " scenes to " + out_dir);
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir) {
    RunConfig cfg = parse_run_config(config_path);
    auto dataset = ppd::load_dataset(data_dir);
    log_info("training on " + std::to_string(dataset.size()) + " scenes, " +
             std::to_string(cfg.train.episodes) + " episodes");
    ppd::TrainResult result =
        ppd::train_ppd(dataset, cfg.train, cfg.seg, cfg.patch_size, cfg.interval);

    fs::create_directories(out_dir);
    std::string cfg_json =
        train_config_json(cfg.train, cfg.patch_size, cfg.interval, cfg.seg.alpha);
    ppd::write_checkpoint((fs::path(out_dir) / "q_att.json").string(), result.q_att,
                          "attack", cfg_json, cfg.train.seed);
    ppd::write_checkpoint((fs::path(out_dir) / "q_def.json").string(), result.q_def,
                          "defense", cfg_json, cfg.train.seed);
    {
        std::ofstream hist((fs::path(out_dir) / "history.jsonl").string());
        if (!hist) throw std::runtime_error("cannot write history.jsonl");
        for (const auto& rec : result.history)
            hist << ppd::episode_record_to_json(rec) << "\n";
    }

    double mi = 0, ma = 0, md = 0;
    int n = 0;
    for (std::size_t i = result.history.size() >= 10 ? result.history.size() - 10 : 0;
         i < result.history.size(); ++i, ++n) {
        mi += result.history[i].dice_ideal;
        ma += result.history[i].dice_attacked;
        md += result.history[i].dice_defended;
    }
    if (n > 0)
        std::cout << "final-10 mean dice: ideal=" << mi / n << " attacked=" << ma / n
                  << " defended=" << md / n << "\n";
    return 0;
}

int cmd_attack(const std::string& ckpt, const std::string& image_path,
               const std::string& mask_path, int steps, const std::string& trace_path,
               const std::string& out_dir, int patch_size, int interval, double alpha) {
    ppd::QNetParams q_att = load_checkpoint_kind(ckpt, "attack");
    ppd::Image img = ppd::read_ppm(image_path);
    ppd::Mask mask = ppd::read_pgm(mask_path);
    ppd::SegmenterConfig seg{alpha};
    ppd::SceneEnv env = ppd::build_scene_env(img, &mask, patch_size, seg);

    ppd::PromptPool pool = ppd::init_ideal_prompts(mask, interval, env.grid);
    ppd::set_attack_start_statuses(pool);
    ppd::EnvState state = ppd::env_reset(env, pool, ppd::Phase::attack, steps);
    double dice_before = state.last_dice.value();

    std::vector<TraceRecord> trace;
    ppd::Rng dummy(0);
    while (!state.terminal) {
        auto actions = ppd::legal_actions(state);
        std::vector<ppd::ActionFeatures> phis;
        for (int a : actions) phis.push_back(ppd::encode_action_features(env, state, a));
        int idx = ppd::select_action(q_att, phis, 0.0, dummy);
        ppd::StepResult r = ppd::env_step(env, state, actions[idx]);
        trace.push_back({"attack", state.step, actions[idx], r.reward,
                         state.last_dice.value()});
    }
    double dice_after = state.last_dice.value();

    fs::create_directories(out_dir);
    ppd::write_pool((fs::path(out_dir) / "attacked_prompts.json").string(), state.pool);
    ppd::write_pgm((fs::path(out_dir) / "attacked_pred.pgm").string(),
                   ppd::segment(img, state.pool, seg));
    if (!trace_path.empty()) write_trace(trace_path, trace);
    std::cout << "dice_before=" << dice_before << " dice_after=" << dice_after << "\n";
    return 0;
}

int cmd_defend(const std::string& ckpt, const std::string& image_path,
               const std::string& prompts_path, int budget, const std::string& mask_path,
               const std::string& out_path, const std::string& out_mask_path,
               int patch_size, double alpha, double q_threshold) {
    ppd::QNetParams q_def = load_checkpoint_kind(ckpt, "defense");
    ppd::Image img = ppd::read_ppm(image_path);
    ppd::SegmenterConfig seg{alpha};

    ppd::Mask mask;
    bool have_mask = !mask_path.empty();
    if (have_mask) mask = ppd::read_pgm(mask_path);

    // Ground truth is never consulted for defense decisions.
    ppd::SceneEnv env = ppd::build_scene_env(img, nullptr, patch_size, seg);
    ppd::PromptPool pool = ppd::read_pool(prompts_path, env.grid);
    if (pool.active_count() == 0) throw ConfigError("input prompts have no active prompt");

    double dice_before = have_mask ? ppd::dice(ppd::segment(img, pool, seg), mask) : 0.0;
    ppd::PromptPool refined = ppd::infer_defense(q_def, env, pool, budget, q_threshold);

    ppd::write_pool(out_path, refined);
    ppd::Mask pred = ppd::segment(img, refined, seg);
    if (!out_mask_path.empty()) ppd::write_pgm(out_mask_path, pred);
    if (have_mask)
        std::cout << "dice_before=" << dice_before
                  << " dice_after=" << ppd::dice(pred, mask) << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_att, const std::string& ckpt_def,
             const std::string& data_dir, const std::string& mode,
             const std::string& out_path, const ppd::EvalOptions& opts) {
    ppd::QNetParams q_def = load_checkpoint_kind(ckpt_def, "defense");
    auto dataset = ppd::load_dataset(data_dir);
    if (dataset.empty()) throw ConfigError("empty dataset");

    std::vector<ppd::EvalRow> rows;
    if (mode == "ablation") {
        if (ckpt_att.empty()) throw ConfigError("--ckpt-att is required for mode ablation");
        ppd::QNetParams q_att = load_checkpoint_kind(ckpt_att, "attack");
        rows = ppd::eval_ablation(dataset, q_att, q_def, opts);
    } else {
        rows = ppd::eval_fm(dataset, q_def, opts);
    }

    std::string report = ppd::report_to_json(mode, rows);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << report << "\n";
    for (const auto& r : rows)
        std::cout << r.name << ": mean_dice=" << r.mean_dice << " mean_iou=" << r.mean_iou
                  << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial point-prompt optimization for promptable segmentation"};
    app.require_subcommand(1);

    // gen-data
    std::string gd_out;
    int gd_count = 100, gd_size = 64, gd_blobs = 2, gd_noise = 8, gd_stripes = 0;
    std::uint64_t gd_seed = 0;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic image/mask dataset");
    gen->add_option("--out", gd_out, "Output directory")->required();
    gen->add_option("--count", gd_count, "Number of scenes")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gd_seed, "Base seed");
    gen->add_option("--size", gd_size, "Image size in pixels")->check(CLI::Range(32, 4096));
    gen->add_option("--blob-count", gd_blobs, "Blobs per scene")->check(CLI::Range(1, 3));
    gen->add_option("--noise-amp", gd_noise, "Noise amplitude")->check(CLI::Range(0, 30));
    gen->add_option("--stripe-period", gd_stripes, "Background stripe period (0 = off)");

    // train
    std::string tr_data, tr_config, tr_out;
    auto* train = app.add_subcommand("train", "Train attack and defense agents");
    train->add_option("--data", tr_data, "Dataset directory")->required();
    train->add_option("--config", tr_config, "JSON config file (flat dotted keys)");
    train->add_option("--out", tr_out, "Output directory")->required();

    // attack
    std::string at_ckpt, at_image, at_mask, at_trace, at_out = ".";
    int at_steps = 12, at_patch = 8, at_interval = 8;
    double at_alpha = 0.5;
    auto* attack = app.add_subcommand("attack", "Run greedy attack steps on ideal prompts");
    attack->add_option("--ckpt", at_ckpt, "Attack checkpoint")->required();
    attack->add_option("--image", at_image, "Input PPM image")->required();
    attack->add_option("--mask", at_mask, "Ground-truth PGM mask")->required();
    attack->add_option("--steps", at_steps, "Greedy attack steps")->check(CLI::NonNegativeNumber);
    attack->add_option("--trace", at_trace, "Step trace JSON output");
    attack->add_option("--out", at_out, "Output directory");
    attack->add_option("--patch-size", at_patch, "Patch size");
    attack->add_option("--interval", at_interval, "Prompt sampling interval");
    attack->add_option("--alpha", at_alpha, "Segmenter spatial weight");

    // defend
    std::string df_ckpt, df_image, df_prompts, df_mask, df_out, df_out_mask;
    int df_budget = 64, df_patch = 8;
    double df_alpha = 0.5, df_threshold = 0.0;
    auto* defend = app.add_subcommand("defend", "Filter prompts with the defense agent");
    defend->add_option("--ckpt", df_ckpt, "Defense checkpoint")->required();
    defend->add_option("--image", df_image, "Input PPM image")->required();
    defend->add_option("--prompts", df_prompts, "Prompt pool JSON")->required();
    defend->add_option("--budget", df_budget, "Max deactivations")->check(CLI::NonNegativeNumber);
    defend->add_option("--mask", df_mask, "Optional ground truth (reporting only)");
    defend->add_option("--out", df_out, "Refined prompt JSON output")->required();
    defend->add_option("--out-mask", df_out_mask, "Predicted mask PGM output");
    defend->add_option("--patch-size", df_patch, "Patch size");
    defend->add_option("--alpha", df_alpha, "Segmenter spatial weight");
    defend->add_option("--q-threshold", df_threshold, "Stop when best Q falls below this");

    // eval
    std::string ev_att, ev_def, ev_data, ev_mode = "ablation", ev_out;
    ppd::EvalOptions ev_opts;
    auto* eval = app.add_subcommand("eval", "Evaluate checkpoints over a dataset");
    eval->add_option("--ckpt-att", ev_att, "Attack checkpoint (ablation mode)");
    eval->add_option("--ckpt-def", ev_def, "Defense checkpoint")->required();
    eval->add_option("--data", ev_data, "Dataset directory")->required();
    eval->add_option("--mode", ev_mode, "ablation | fm")
        ->check(CLI::IsMember({"ablation", "fm"}));
    eval->add_option("--out", ev_out, "Report JSON output")->required();
    eval->add_option("--attack-steps", ev_opts.attack_steps, "Greedy attack steps per scene");
    eval->add_option("--budget", ev_opts.defend_budget, "Defense budget (-1 = active-1)");
    eval->add_option("--patch-size", ev_opts.patch_size, "Patch size");
    eval->add_option("--interval", ev_opts.interval, "Prompt sampling interval");
    eval->add_option("--alpha", ev_opts.seg.alpha, "Segmenter spatial weight");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen_data(gd_out, gd_count, gd_seed, gd_size, gd_blobs, gd_noise,
                                gd_stripes);
        if (train->parsed()) return cmd_train(tr_data, tr_config, tr_out);
        if (attack->parsed())
            return cmd_attack(at_ckpt, at_image, at_mask, at_steps, at_trace, at_out,
                              at_patch, at_interval, at_alpha);
        if (defend->parsed())
            return cmd_defend(df_ckpt, df_image, df_prompts, df_budget, df_mask, df_out,
                              df_out_mask, df_patch, df_alpha, df_threshold);
        if (eval->parsed())
            return cmd_eval(ev_att, ev_def, ev_data, ev_mode, ev_out, ev_opts);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
