#pragma once

#include "ppd/env.hpp"
#include "ppd/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ppd {

struct Layer {
    int rows = 0;  // outputs
    int cols = 0;  // inputs
    std::vector<double> w;  // row-major rows x cols
    std::vector<double> b;  // rows
};

// Action-scoring network, 12 -> 64 -> 64 -> 1, ReLU hidden layers,
// identity output. The same network scores every candidate action.
struct QNetParams {
    std::vector<Layer> layers;

    std::size_t param_count() const;

    static QNetParams zeros();
    // Glorot-uniform weights, zero biases.
    static QNetParams glorot_init(Rng& rng);
};

using Gradients = QNetParams;

double qnet_forward(const QNetParams& p, const ActionFeatures& phi);

// Deep copy; later online updates do not touch the copy.
QNetParams sync_target(const QNetParams& online);

struct Transition {
    ActionFeatures phi{};                  // features of the action taken
    double reward = 0.0;
    std::vector<ActionFeatures> next_phis; // legal actions in the successor
    bool terminal = false;

    // Cached max_a' Q_target over next_phis; valid while the target
    // network version matches. Purely an evaluation cache: reusing it
    // never changes results, only avoids recomputing a frozen quantity.
    mutable long target_version = -1;
    mutable double target_max = 0.0;
};

// Mean squared TD error over the batch with targets
//   y = r                         (terminal)
//   y = r + gamma * max_a' Q_target(phi')   (otherwise)
// Gradient flows through the online network only. Throws on empty batch.
std::pair<double, Gradients> td_loss_and_grad(const QNetParams& online,
                                              const QNetParams& target,
                                              const std::vector<Transition>& batch,
                                              double gamma);

// Pointer batch variant. When target_version >= 0, each transition's
// target max is cached under that version and reused on later calls with
// the same version (the target network is frozen between syncs).
std::pair<double, Gradients> td_loss_and_grad(const QNetParams& online,
                                              const QNetParams& target,
                                              const std::vector<const Transition*>& batch,
                                              double gamma, long target_version = -1);

struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Layer> m;  // first moments, shaped like the parameters
    std::vector<Layer> v;  // second moments

    static AdamState for_params(const QNetParams& p, double lr = 1e-4);
};

void adam_step(QNetParams& p, AdamState& a, const Gradients& g);

// Checkpoint JSON: {"version":1,"kind":...,"layers":[{rows,cols,w,b}],...}
std::string checkpoint_to_json(const QNetParams& p, const std::string& kind,
                               const std::string& config_json, std::uint64_t seed);
QNetParams checkpoint_from_json(const std::string& text, std::string* kind_out);

void write_checkpoint(const std::string& path, const QNetParams& p,
                      const std::string& kind, const std::string& config_json,
                      std::uint64_t seed);
QNetParams read_checkpoint(const std::string& path, std::string* kind_out);

}  // namespace ppd
