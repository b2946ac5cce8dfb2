#include "ppd/qnet.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ppd {
namespace {

constexpr int kSizes[] = {kActionFeatureDim, 64, 64, 1};
constexpr int kNumLayers = 3;

std::vector<Layer> zero_layers() {
    std::vector<Layer> layers(kNumLayers);
    for (int l = 0; l < kNumLayers; ++l) {
        layers[l].rows = kSizes[l + 1];
        layers[l].cols = kSizes[l];
        layers[l].w.assign(static_cast<std::size_t>(kSizes[l + 1]) * kSizes[l], 0.0);
        layers[l].b.assign(kSizes[l + 1], 0.0);
    }
    return layers;
}

void check_shapes(const QNetParams& p) {
    if (p.layers.size() != kNumLayers) throw std::invalid_argument("bad layer count");
    for (int l = 0; l < kNumLayers; ++l) {
        const Layer& L = p.layers[l];
        if (L.rows != kSizes[l + 1] || L.cols != kSizes[l] ||
            L.w.size() != static_cast<std::size_t>(L.rows) * L.cols ||
            L.b.size() != static_cast<std::size_t>(L.rows))
            throw std::invalid_argument("bad layer shape");
    }
}

// Forward pass keeping per-layer pre-activations for backprop.
double forward_cached(const QNetParams& p, const ActionFeatures& phi,
                      std::vector<std::vector<double>>* acts) {
    std::vector<double> cur(phi.begin(), phi.end());
    if (acts) {
        acts->clear();
        acts->push_back(cur);
    }
    for (int l = 0; l < kNumLayers; ++l) {
        const Layer& L = p.layers[l];
        std::vector<double> next(L.rows);
        for (int i = 0; i < L.rows; ++i) {
            double s = L.b[i];
            const double* wrow = &L.w[static_cast<std::size_t>(i) * L.cols];
            for (int j = 0; j < L.cols; ++j) s += wrow[j] * cur[j];
            next[i] = l + 1 < kNumLayers ? (s > 0 ? s : 0.0) : s;  // ReLU hidden
        }
        cur = std::move(next);
        if (acts) acts->push_back(cur);
    }
    return cur[0];
}

}  // namespace

std::size_t QNetParams::param_count() const {
    std::size_t n = 0;
    for (const auto& L : layers) n += L.w.size() + L.b.size();
    return n;
}

QNetParams QNetParams::zeros() {
    QNetParams p;
    p.layers = zero_layers();
    return p;
}

QNetParams QNetParams::glorot_init(Rng& rng) {
    QNetParams p = zeros();
    for (auto& L : p.layers) {
        double bound = std::sqrt(6.0 / (L.rows + L.cols));
        for (auto& w : L.w) w = (rng.next_float() * 2.0 - 1.0) * bound;
    }
    return p;
}

double qnet_forward(const QNetParams& p, const ActionFeatures& phi) {
    check_shapes(p);
    return forward_cached(p, phi, nullptr);
}

QNetParams sync_target(const QNetParams& online) { return online; }

std::pair<double, Gradients> td_loss_and_grad(const QNetParams& online,
                                              const QNetParams& target,
                                              const std::vector<Transition>& batch,
                                              double gamma) {
    std::vector<const Transition*> ptrs;
    ptrs.reserve(batch.size());
    for (const Transition& t : batch) ptrs.push_back(&t);
    return td_loss_and_grad(online, target, ptrs, gamma, -1);
}

namespace {

double target_max_q(const QNetParams& target, const Transition& t, long version) {
    if (version >= 0 && t.target_version == version) return t.target_max;
    double best = 0.0;
    bool first = true;
    for (const auto& phi : t.next_phis) {
        double q = forward_cached(target, phi, nullptr);
        if (first || q > best) {
            best = q;
            first = false;
        }
    }
    if (version >= 0) {
        t.target_version = version;
        t.target_max = best;
    }
    return best;
}

}  // namespace

std::pair<double, Gradients> td_loss_and_grad(const QNetParams& online,
                                              const QNetParams& target,
                                              const std::vector<const Transition*>& batch,
                                              double gamma, long target_version) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    check_shapes(online);
    check_shapes(target);

    Gradients grad = QNetParams::zeros();
    double loss = 0.0;
    const double inv_n = 1.0 / batch.size();
    std::vector<std::vector<double>> acts;

    for (const Transition* tp : batch) {
        const Transition& t = *tp;
        double y = t.reward;
        if (!t.terminal && !t.next_phis.empty())
            y += gamma * target_max_q(target, t, target_version);

        double q = forward_cached(online, t.phi, &acts);
        double err = y - q;
        loss += err * err * inv_n;

        // d(loss)/dq for this sample.
        double dq = -2.0 * err * inv_n;
        std::vector<double> delta{dq};
        for (int l = kNumLayers - 1; l >= 0; --l) {
            const Layer& L = online.layers[l];
            Layer& G = grad.layers[l];
            const std::vector<double>& input = acts[l];
            std::vector<double> prev(L.cols, 0.0);
            for (int i = 0; i < L.rows; ++i) {
                double d = delta[i];
                if (d == 0.0) continue;
                G.b[i] += d;
                double* grow = &G.w[static_cast<std::size_t>(i) * L.cols];
                const double* wrow = &L.w[static_cast<std::size_t>(i) * L.cols];
                for (int j = 0; j < L.cols; ++j) {
                    grow[j] += d * input[j];
                    prev[j] += d * wrow[j];
                }
            }
            if (l > 0) {
                // ReLU mask of the previous layer's output.
                const std::vector<double>& out_prev = acts[l];
                for (int j = 0; j < L.cols; ++j)
                    if (out_prev[j] <= 0.0) prev[j] = 0.0;
                delta = std::move(prev);
            }
        }
    }
    return {loss, grad};
}

AdamState AdamState::for_params(const QNetParams& p, double lr) {
    AdamState a;
    a.lr = lr;
    a.m = p.layers;
    a.v = p.layers;
    for (auto* moments : {&a.m, &a.v})
        for (auto& L : *moments) {
            std::fill(L.w.begin(), L.w.end(), 0.0);
            std::fill(L.b.begin(), L.b.end(), 0.0);
        }
    return a;
}

void adam_step(QNetParams& p, AdamState& a, const Gradients& g) {
    if (a.m.size() != p.layers.size() || g.layers.size() != p.layers.size())
        throw std::invalid_argument("shape mismatch");
    ++a.step;
    double bc1 = 1.0 - std::pow(a.beta1, a.step);
    double bc2 = 1.0 - std::pow(a.beta2, a.step);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        Layer& P = p.layers[l];
        const Layer& G = g.layers[l];
        if (G.w.size() != P.w.size() || G.b.size() != P.b.size())
            throw std::invalid_argument("shape mismatch");
        auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                          std::vector<double>& m, std::vector<double>& v) {
            for (std::size_t i = 0; i < param.size(); ++i) {
                m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * grad[i];
                v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * grad[i] * grad[i];
                double mh = m[i] / bc1;
                double vh = v[i] / bc2;
                param[i] -= a.lr * mh / (std::sqrt(vh) + a.eps);
            }
        };
        update(P.w, G.w, a.m[l].w, a.v[l].w);
        update(P.b, G.b, a.m[l].b, a.v[l].b);
    }
}

std::string checkpoint_to_json(const QNetParams& p, const std::string& kind,
                               const std::string& config_json, std::uint64_t seed) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& L : p.layers)
        layers.push_back({{"rows", L.rows}, {"cols", L.cols}, {"w", L.w}, {"b", L.b}});
    nlohmann::json j{{"version", 1},
                     {"kind", kind},
                     {"layers", layers},
                     {"config", nlohmann::json::parse(config_json)},
                     {"seed", seed}};
    return j.dump();
}

QNetParams checkpoint_from_json(const std::string& text, std::string* kind_out) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported checkpoint version");
    if (kind_out) *kind_out = j.at("kind").get<std::string>();
    QNetParams p;
    for (const auto& e : j.at("layers")) {
        Layer L;
        L.rows = e.at("rows").get<int>();
        L.cols = e.at("cols").get<int>();
        L.w = e.at("w").get<std::vector<double>>();
        L.b = e.at("b").get<std::vector<double>>();
        p.layers.push_back(std::move(L));
    }
    check_shapes(p);
    return p;
}

void write_checkpoint(const std::string& path, const QNetParams& p,
                      const std::string& kind, const std::string& config_json,
                      std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << checkpoint_to_json(p, kind, config_json, seed) << "\n";
}

QNetParams read_checkpoint(const std::string& path, std::string* kind_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str(), kind_out);
}

}  // namespace ppd
