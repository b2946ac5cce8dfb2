#include "ppd/prompts.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ppd {

int PromptPool::active_count() const {
    int n = 0;
    for (const auto& p : prompts) n += p.status == Status::active;
    return n;
}

std::vector<PromptPoint> PromptPool::active_prompts() const {
    std::vector<PromptPoint> out;
    for (const auto& p : prompts)
        if (p.status == Status::active) out.push_back(p);
    return out;
}

PromptPool init_ideal_prompts(const Mask& mask, int interval, const PatchGrid& grid) {
    if (interval < 1) throw std::invalid_argument("interval must be >= 1");
    const int cols = mask.width / interval;
    const int rows = mask.height / interval;
    if (cols < 1 || rows < 1) throw std::invalid_argument("no candidate point fits");

    PromptPool pool;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            PromptPoint p;
            p.id = static_cast<int>(pool.prompts.size());
            p.x = c * interval + interval / 2;
            p.y = r * interval + interval / 2;
            p.polarity = mask.at(p.x, p.y) ? Polarity::positive : Polarity::negative;
            p.status = Status::active;
            p.patch_index = grid.patch_at(p.x, p.y);
            pool.prompts.push_back(p);
        }
    }
    return pool;
}

void set_attack_start_statuses(PromptPool& pool) {
    for (auto& p : pool.prompts)
        p.status = p.polarity == Polarity::positive ? Status::active : Status::inactive;
}

PromptPool feature_match_prompts(const Image& ref_img, const Mask& ref_mask,
                                 const Image& target_img, int patch_size) {
    PatchGrid ref = build_patch_grid(ref_img, patch_size);
    PatchGrid target = build_patch_grid(target_img, patch_size);

    PromptPool pool;
    pool.prompts.reserve(target.count());
    for (int i = 0; i < target.count(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < ref.count(); ++j) {
            double s = 0;
            for (int k = 0; k < kDescriptorDim; ++k) {
                double d = target.descriptors[i][k] - ref.descriptors[j][k];
                s += d * d;
            }
            if (s < best_d) {  // strict: ties keep the lowest reference index
                best_d = s;
                best = j;
            }
        }
        PromptPoint p;
        p.id = i;
        p.x = static_cast<int>(target.centers[i][0]);
        p.y = static_cast<int>(target.centers[i][1]);
        int rx = static_cast<int>(ref.centers[best][0]);
        int ry = static_cast<int>(ref.centers[best][1]);
        p.polarity = ref_mask.at(rx, ry) ? Polarity::positive : Polarity::negative;
        p.status = Status::active;
        p.patch_index = i;
        pool.prompts.push_back(p);
    }
    return pool;
}

std::string pool_to_json(const PromptPool& pool) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : pool.prompts) {
        arr.push_back({{"id", p.id},
                       {"x", p.x},
                       {"y", p.y},
                       {"polarity", p.polarity == Polarity::positive ? "pos" : "neg"},
                       {"status", p.status == Status::active ? "active" : "inactive"}});
    }
    return nlohmann::json{{"prompts", arr}}.dump();
}

PromptPool pool_from_json(const std::string& text, const PatchGrid& grid) {
    nlohmann::json j = nlohmann::json::parse(text);
    PromptPool pool;
    for (const auto& e : j.at("prompts")) {
        PromptPoint p;
        p.id = e.at("id").get<int>();
        p.x = e.at("x").get<int>();
        p.y = e.at("y").get<int>();
        std::string pol = e.at("polarity").get<std::string>();
        std::string st = e.at("status").get<std::string>();
        if (pol != "pos" && pol != "neg") throw std::runtime_error("bad polarity: " + pol);
        if (st != "active" && st != "inactive") throw std::runtime_error("bad status: " + st);
        p.polarity = pol == "pos" ? Polarity::positive : Polarity::negative;
        p.status = st == "active" ? Status::active : Status::inactive;
        p.patch_index = grid.patch_at(p.x, p.y);
        pool.prompts.push_back(p);
    }
    for (std::size_t i = 0; i < pool.prompts.size(); ++i)
        if (pool.prompts[i].id != static_cast<int>(i))
            throw std::runtime_error("prompt ids must be 0..len-1");
    return pool;
}

void write_pool(const std::string& path, const PromptPool& pool) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << pool_to_json(pool) << "\n";
}

PromptPool read_pool(const std::string& path, const PatchGrid& grid) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return pool_from_json(ss.str(), grid);
}

}  // namespace ppd
