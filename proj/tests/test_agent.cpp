#include "ppd/replay.hpp"
#include "ppd/rng.hpp"
#include "ppd/synthdata.hpp"
#include "ppd/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <doctest.h>

using namespace ppd;

namespace {

ActionFeatures random_phi(Rng& rng) {
    ActionFeatures phi{};
    for (auto& v : phi) v = rng.next_float() * 2.0 - 1.0;
    return phi;
}

QNetParams random_params(std::uint64_t seed) {
    Rng rng(seed);
    return QNetParams::glorot_init(rng);
}

// Independent matrix-vector forward pass (no caching, explicit loops).
double forward_oracle(const QNetParams& p, const ActionFeatures& phi) {
    std::vector<double> x(phi.begin(), phi.end());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const Layer& L = p.layers[l];
        std::vector<double> y(L.rows, 0.0);
        for (int i = 0; i < L.rows; ++i) {
            y[i] = L.b[i];
            for (int j = 0; j < L.cols; ++j) y[i] += L.w[std::size_t(i) * L.cols + j] * x[j];
            if (l + 1 < p.layers.size() && y[i] < 0) y[i] = 0;
        }
        x = y;
    }
    return x[0];
}

double* param_ptr(QNetParams& p, std::size_t flat_index) {
    for (auto& L : p.layers) {
        if (flat_index < L.w.size()) return &L.w[flat_index];
        flat_index -= L.w.size();
        if (flat_index < L.b.size()) return &L.b[flat_index];
        flat_index -= L.b.size();
    }
    return nullptr;
}

double grad_entry(const Gradients& g, std::size_t flat_index) {
    Gradients& gm = const_cast<Gradients&>(g);
    return *param_ptr(gm, flat_index);
}

double batch_loss(const QNetParams& online, const QNetParams& target,
                  const std::vector<Transition>& batch, double gamma) {
    return td_loss_and_grad(online, target, batch, gamma).first;
}

}  // namespace

TEST_CASE("parameter count is 5057") {
    CHECK(QNetParams::zeros().param_count() == 5057);
}

TEST_CASE("zero network outputs zero; output bias passes through") {
    QNetParams p = QNetParams::zeros();
    Rng rng(1);
    CHECK(qnet_forward(p, random_phi(rng)) == 0.0);
    p.layers.back().b[0] = 0.37;
    CHECK(qnet_forward(p, random_phi(rng)) == doctest::Approx(0.37));
}

TEST_CASE("forward pass matches an independent oracle") {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        QNetParams p = random_params(100 + t);
        ActionFeatures phi = random_phi(rng);
        CHECK(qnet_forward(p, phi) == doctest::Approx(forward_oracle(p, phi)).epsilon(1e-12));
    }
}

TEST_CASE("td loss arithmetic on crafted single transitions") {
    // Online net outputs exactly 1.0; target net outputs exactly 1.0.
    QNetParams online = QNetParams::zeros();
    online.layers.back().b[0] = 1.0;
    QNetParams target = online;

    Transition t;
    t.reward = 0.2;
    t.terminal = false;
    t.next_phis.push_back(ActionFeatures{});
    auto [loss, grad] = td_loss_and_grad(online, target, std::vector<Transition>{t}, 0.95);
    CHECK(loss == doctest::Approx((0.2 + 0.95 - 1.0) * (0.2 + 0.95 - 1.0)));

    QNetParams online2 = QNetParams::zeros();
    online2.layers.back().b[0] = 0.3;
    Transition t2;
    t2.reward = 0.3;
    t2.terminal = true;
    CHECK(batch_loss(online2, target, {t2}, 0.95) == doctest::Approx(0.0));
}

TEST_CASE("td loss rejects an empty batch") {
    QNetParams p = QNetParams::zeros();
    CHECK_THROWS(td_loss_and_grad(p, p, std::vector<Transition>{}, 0.99));
}

TEST_CASE("analytic td gradient matches central finite differences") {
    Rng rng(3);
    double max_rel_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        QNetParams online = random_params(500 + trial);
        QNetParams target = random_params(900 + trial);
        std::vector<Transition> batch;
        for (int i = 0; i < 4; ++i) {
            Transition t;
            t.phi = random_phi(rng);
            t.reward = rng.next_float() - 0.5;
            t.terminal = i % 3 == 0;
            if (!t.terminal)
                for (int k = 0; k < 3; ++k) t.next_phis.push_back(random_phi(rng));
            batch.push_back(t);
        }
        auto [loss, grad] = td_loss_and_grad(online, target, batch, 0.99);

        const double h = 1e-5;
        std::size_t count = online.param_count();
        for (int probe = 0; probe < 25; ++probe) {
            std::size_t idx = rng.next_int(count);
            double analytic = grad_entry(grad, idx);
            QNetParams plus = online, minus = online;
            *param_ptr(plus, idx) += h;
            *param_ptr(minus, idx) -= h;
            double numeric = (batch_loss(plus, target, batch, 0.99) -
                              batch_loss(minus, target, batch, 0.99)) /
                             (2 * h);
            double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
            max_rel_err = std::max(max_rel_err, std::fabs(analytic - numeric) / denom);
        }
    }
    CHECK(max_rel_err <= 1e-4);
}

TEST_CASE("adam leaves parameters unchanged on a zero gradient") {
    QNetParams p = random_params(7);
    QNetParams before = p;
    AdamState a = AdamState::for_params(p);
    adam_step(p, a, QNetParams::zeros());
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        CHECK(p.layers[l].w == before.layers[l].w);
        CHECK(p.layers[l].b == before.layers[l].b);
    }
}

TEST_CASE("adam first step moves by about lr against the gradient sign") {
    QNetParams p = QNetParams::zeros();
    AdamState a = AdamState::for_params(p, 1e-4);
    Gradients g = QNetParams::zeros();
    g.layers.back().b[0] = 3.5;
    adam_step(p, a, g);
    CHECK(p.layers.back().b[0] == doctest::Approx(-1e-4).epsilon(1e-4));
}

TEST_CASE("adam drives w^2 down monotonically") {
    // Run ten steps on f(w) = w^2 embedded in the output bias.
    QNetParams p = QNetParams::zeros();
    p.layers.back().b[0] = 1.0;
    AdamState a = AdamState::for_params(p, 0.1);
    double prev = 1.0;
    for (int i = 0; i < 10; ++i) {
        Gradients g = QNetParams::zeros();
        g.layers.back().b[0] = 2.0 * p.layers.back().b[0];
        adam_step(p, a, g);
        CHECK(p.layers.back().b[0] < prev);
        prev = p.layers.back().b[0];
    }
}

TEST_CASE("select_action greedy argmax with lowest-index tie break") {
    // Zero weights except a single first-layer weight reading phi[0],
    // wired through positive diagonal-ish paths is overkill; instead use
    // the output bias trick: all candidates score equally -> index 0.
    QNetParams p = QNetParams::zeros();
    Rng rng(4);
    std::vector<ActionFeatures> phis(3);
    CHECK(select_action(p, phis, 0.0, rng) == 0);

    // Make the score follow phi[0] through one positive path.
    p.layers[0].w[0] = 1.0;       // hidden1[0] = relu(phi[0])
    p.layers[1].w[0] = 1.0;       // hidden2[0] = relu(hidden1[0])
    p.layers[2].w[0] = 1.0;       // out = hidden2[0]
    phis[0][0] = 0.1;
    phis[1][0] = 0.7;
    phis[2][0] = 0.3;
    CHECK(select_action(p, phis, 0.0, rng) == 1);
    CHECK_THROWS(select_action(p, {}, 0.0, rng));
}

TEST_CASE("select_action epsilon=1 is empirically uniform") {
    QNetParams p = QNetParams::zeros();
    Rng rng(5);
    std::vector<ActionFeatures> phis(4);
    std::array<int, 4> counts{};
    for (int i = 0; i < 10000; ++i) ++counts[select_action(p, phis, 1.0, rng)];
    for (int c : counts) {
        CHECK(c >= 2300);
        CHECK(c <= 2700);
    }
}

TEST_CASE("greedy choice is invariant under positive affine Q transforms") {
    // Scaling all inputs' first feature by a positive factor scales the
    // linear path's outputs; argmax must not move.
    QNetParams p = QNetParams::zeros();
    p.layers[0].w[0] = 1.0;
    p.layers[1].w[0] = 1.0;
    p.layers[2].w[0] = 1.0;
    Rng rng(6);
    std::vector<ActionFeatures> phis(5);
    for (auto& phi : phis) phi[0] = rng.next_float();
    int base = select_action(p, phis, 0.0, rng);
    p.layers[2].w[0] = 4.0;       // scale
    p.layers[2].b[0] = 2.5;       // shift
    CHECK(select_action(p, phis, 0.0, rng) == base);
}

TEST_CASE("epsilon schedule endpoints, midpoint, monotonicity") {
    TrainConfig cfg;
    CHECK(epsilon_at(0, 1000, cfg) == doctest::Approx(1.0));
    CHECK(epsilon_at(1000, 1000, cfg) == doctest::Approx(0.1));
    CHECK(epsilon_at(500, 1000, cfg) == doctest::Approx(0.55));
    CHECK(epsilon_at(99999, 1000, cfg) == doctest::Approx(0.1));
    double prev = 2.0;
    for (long s = 0; s <= 1200; s += 7) {
        double e = epsilon_at(s, 1000, cfg);
        CHECK(e <= prev);
        CHECK(e >= 0.1 - 1e-12);
        CHECK(e <= 1.0);
        prev = e;
    }
}

TEST_CASE("sync_target is a deep copy") {
    QNetParams online = random_params(8);
    QNetParams target = sync_target(online);
    Rng rng(9);
    ActionFeatures phi = random_phi(rng);
    CHECK(qnet_forward(target, phi) == qnet_forward(online, phi));

    AdamState a = AdamState::for_params(online);
    Gradients g = QNetParams::zeros();
    g.layers[0].w[0] = 1.0;
    adam_step(online, a, g);
    CHECK(qnet_forward(target, phi) != qnet_forward(online, phi));
    CHECK(sync_target(online).layers[0].w == online.layers[0].w);
}

TEST_CASE("replay buffer is a FIFO ring") {
    ReplayBuffer buf(5);
    for (int i = 0; i < 8; ++i) {
        Transition t;
        t.reward = i;
        buf.push(t);
        CHECK(buf.size() <= 5);
    }
    // After 8 insertions into capacity 5, rewards 0..2 are gone.
    std::vector<double> rewards;
    for (std::size_t i = 0; i < buf.size(); ++i) rewards.push_back(buf.at(i).reward);
    std::sort(rewards.begin(), rewards.end());
    CHECK(rewards == std::vector<double>{3, 4, 5, 6, 7});
}

TEST_CASE("checkpoint json round trip preserves weights and kind") {
    QNetParams p = random_params(10);
    std::string text = checkpoint_to_json(p, "defense", "{\"seed\": 3}", 3);
    std::string kind;
    QNetParams back = checkpoint_from_json(text, &kind);
    CHECK(kind == "defense");
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        CHECK(back.layers[l].w == p.layers[l].w);
        CHECK(back.layers[l].b == p.layers[l].b);
    }
}

TEST_CASE("train_ppd with zero episodes returns fresh networks and empty history") {
    auto scenes = gen_dataset(2, 40, SceneSpec{});
    std::vector<std::pair<Image, Mask>> dataset;
    for (auto& s : scenes) dataset.emplace_back(s.image, s.mask);
    TrainConfig cfg;
    cfg.episodes = 0;
    cfg.seed = 21;
    TrainResult r = train_ppd(dataset, cfg, SegmenterConfig{}, 8, 8);
    CHECK(r.history.empty());

    Rng init(21, 0);
    QNetParams expect_att = QNetParams::glorot_init(init);
    QNetParams expect_def = QNetParams::glorot_init(init);
    CHECK(r.q_att.layers[0].w == expect_att.layers[0].w);
    CHECK(r.q_def.layers[0].w == expect_def.layers[0].w);
}

TEST_CASE("train_ppd is deterministic in the seed") {
    auto scenes = gen_dataset(3, 50, SceneSpec{});
    std::vector<std::pair<Image, Mask>> dataset;
    for (auto& s : scenes) dataset.emplace_back(s.image, s.mask);
    TrainConfig cfg;
    cfg.episodes = 4;
    cfg.steps_min = 2;
    cfg.steps_max = 5;
    cfg.batch_size = 8;
    cfg.seed = 99;

    TrainResult a = train_ppd(dataset, cfg, SegmenterConfig{}, 8, 8);
    TrainResult b = train_ppd(dataset, cfg, SegmenterConfig{}, 8, 8);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i)
        CHECK(episode_record_to_json(a.history[i]) == episode_record_to_json(b.history[i]));
    for (std::size_t l = 0; l < a.q_att.layers.size(); ++l) {
        CHECK(a.q_att.layers[l].w == b.q_att.layers[l].w);
        CHECK(a.q_def.layers[l].w == b.q_def.layers[l].w);
        CHECK(a.q_att.layers[l].b == b.q_att.layers[l].b);
        CHECK(a.q_def.layers[l].b == b.q_def.layers[l].b);
    }
}

TEST_CASE("infer_defense budget 0 and single-active stop rule") {
    Scene scene = gen_scene(SceneSpec{.seed = 60});
    SceneEnv env = build_scene_env(scene.image, nullptr, 8, SegmenterConfig{});
    PromptPool pool = init_ideal_prompts(scene.mask, 8, env.grid);
    QNetParams q = random_params(11);

    PromptPool same = infer_defense(q, env, pool, 0);
    CHECK(same.active_count() == pool.active_count());

    PromptPool single = pool;
    for (int i = 1; i < single.size(); ++i) single.prompts[i].status = Status::inactive;
    PromptPool out = infer_defense(q, env, single, 100, -1e9);
    CHECK(out.active_count() == 1);
    CHECK(out.prompts[0].status == Status::active);

    PromptPool none = pool;
    for (auto& p : none.prompts) p.status = Status::inactive;
    CHECK_THROWS(infer_defense(q, env, none, 5));
}

TEST_CASE("infer_defense only ever deactivates") {
    Scene scene = gen_scene(SceneSpec{.seed = 61});
    SceneEnv env = build_scene_env(scene.image, nullptr, 8, SegmenterConfig{});
    PromptPool pool = init_ideal_prompts(scene.mask, 8, env.grid);
    pool.prompts[7].status = Status::inactive;
    QNetParams q = random_params(12);

    PromptPool out = infer_defense(q, env, pool, 10, -1e9);
    REQUIRE(out.size() == pool.size());
    for (int i = 0; i < pool.size(); ++i) {
        if (pool.prompts[i].status == Status::inactive)
            CHECK(out.prompts[i].status == Status::inactive);
        CHECK(out.prompts[i].polarity == pool.prompts[i].polarity);
        CHECK(out.prompts[i].x == pool.prompts[i].x);
    }
    CHECK(out.active_count() == pool.active_count() - 10);
}
