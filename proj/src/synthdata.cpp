#include "ppd/synthdata.hpp"

#include "ppd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ppd {
namespace {

struct Ellipse {
    double cx, cy, a, b, theta;
};

double color_separation(const std::array<int, 3>& c0, const std::array<int, 3>& c1) {
    double s = 0;
    for (int k = 0; k < 3; ++k) {
        double d = c0[k] - c1[k];
        s += d * d;
    }
    return std::sqrt(s);
}

std::uint8_t clamp_u8(int v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace

Scene gen_scene(const SceneSpec& spec) {
    if (spec.size < 32) throw std::invalid_argument("scene size must be >= 32");
    if (spec.blob_count < 1 || spec.blob_count > 3)
        throw std::invalid_argument("blob_count must be in 1..3");
    if (color_separation(spec.fg_color, spec.bg_color) < 60.0)
        throw std::invalid_argument("fg/bg colors too close");

    Rng rng(spec.seed, 7);
    const int n = spec.size;
    const double ax_min = n / 8.0;
    const double ax_max = n / 3.0;

    Mask mask(n, n, 0);
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        std::vector<Ellipse> blobs;
        for (int b = 0; b < spec.blob_count; ++b) {
            Ellipse e;
            e.a = ax_min + rng.next_float() * (ax_max - ax_min);
            e.b = ax_min + rng.next_float() * (ax_max - ax_min);
            e.theta = rng.next_float() * 3.14159265358979323846;
            double r = std::max(e.a, e.b);
            e.cx = r + rng.next_float() * (n - 2 * r);
            e.cy = r + rng.next_float() * (n - 2 * r);
            blobs.push_back(e);
        }
        std::fill(mask.data.begin(), mask.data.end(), 0);
        std::size_t fg = 0;
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                for (const Ellipse& e : blobs) {
                    double dx = x - e.cx, dy = y - e.cy;
                    double u = dx * std::cos(e.theta) + dy * std::sin(e.theta);
                    double v = -dx * std::sin(e.theta) + dy * std::cos(e.theta);
                    if ((u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0) {
                        mask.at(x, y) = 1;
                        ++fg;
                        break;
                    }
                }
            }
        }
        double frac = static_cast<double>(fg) / (static_cast<double>(n) * n);
        ok = frac >= 0.05 && frac <= 0.60;
    }
    if (!ok) throw std::runtime_error("foreground area constraint unsatisfiable");

    Image img(n, n);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            bool fg = mask.at(x, y) != 0;
            const auto& base = fg ? spec.fg_color : spec.bg_color;
            int stripe = 0;
            if (!fg && spec.stripe_period > 0 &&
                y % spec.stripe_period < spec.stripe_period / 2)
                stripe = 18;
            for (int c = 0; c < 3; ++c) {
                int noise = spec.noise_amp > 0
                                ? static_cast<int>(rng.next_range(-spec.noise_amp,
                                                                  spec.noise_amp))
                                : 0;
                img.at(x, y, c) = clamp_u8(base[c] + stripe + noise);
            }
        }
    }
    return Scene{std::move(img), std::move(mask), spec};
}

std::vector<Scene> gen_dataset(int count, std::uint64_t base_seed,
                               const SceneSpec& tmpl) {
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    std::vector<Scene> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        SceneSpec spec = tmpl;
        spec.seed = base_seed + static_cast<std::uint64_t>(i);
        Rng color_rng(spec.seed, 99);
        double sep = 0;
        do {
            for (int c = 0; c < 3; ++c) spec.fg_color[c] = static_cast<int>(color_rng.next_int(256));
            for (int c = 0; c < 3; ++c) spec.bg_color[c] = static_cast<int>(color_rng.next_int(256));
            sep = color_separation(spec.fg_color, spec.bg_color);
            // Colors distinct enough for a reliable signal but weak enough
            // that spatial proximity still decides contested pixels.
        } while (sep < 60.0 || sep > 90.0);
        out.push_back(gen_scene(spec));
    }
    return out;
}

namespace {

nlohmann::ordered_json spec_to_json(const SceneSpec& s) {
    return {{"size", s.size},
            {"blob_count", s.blob_count},
            {"fg_color", s.fg_color},
            {"bg_color", s.bg_color},
            {"noise_amp", s.noise_amp},
            {"stripe_period", s.stripe_period},
            {"seed", s.seed}};
}

}  // namespace

void write_dataset(const std::string& dir, const std::vector<Scene>& scenes,
                   std::uint64_t base_seed) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["count"] = scenes.size();
    manifest["base_seed"] = base_seed;
    manifest["scenes"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        std::string img_name = std::to_string(i) + ".ppm";
        std::string mask_name = std::to_string(i) + "_mask.pgm";
        write_ppm((fs::path(dir) / img_name).string(), scenes[i].image);
        write_pgm((fs::path(dir) / mask_name).string(), scenes[i].mask);
        manifest["scenes"].push_back({{"index", i},
                                      {"image", img_name},
                                      {"mask", mask_name},
                                      {"spec", spec_to_json(scenes[i].spec)}});
    }
    std::ofstream out((fs::path(dir) / "manifest.json").string());
    if (!out) throw std::runtime_error("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

std::vector<std::pair<Image, Mask>> load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in((fs::path(dir) / "manifest.json").string());
    if (!in) throw std::runtime_error("cannot open manifest in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(in);
    std::vector<std::pair<Image, Mask>> out;
    for (const auto& e : manifest.at("scenes")) {
        Image img = read_ppm((fs::path(dir) / e.at("image").get<std::string>()).string());
        Mask mask = read_pgm((fs::path(dir) / e.at("mask").get<std::string>()).string());
        if (mask.width != img.width || mask.height != img.height)
            throw std::runtime_error("image/mask size mismatch in " + dir);
        out.emplace_back(std::move(img), std::move(mask));
    }
    return out;
}

}  // namespace ppd
