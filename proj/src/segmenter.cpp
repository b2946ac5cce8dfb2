#include "ppd/segmenter.hpp"

#include <cmath>
#include <stdexcept>

namespace ppd {

Mask segment(const Image& img, const std::vector<PromptPoint>& active,
             const SegmenterConfig& cfg) {
    Mask out(img.width, img.height, 0);
    if (active.empty()) return out;

    for (const auto& p : active)
        if (!img.contains(p.x, p.y))
            throw std::invalid_argument("prompt outside image");

    const double diag = std::sqrt(static_cast<double>(img.width) * img.width +
                                  static_cast<double>(img.height) * img.height);
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);

    // Prompt colors sampled once from the image.
    std::vector<std::array<double, 3>> pc(active.size());
    for (std::size_t k = 0; k < active.size(); ++k)
        for (int c = 0; c < 3; ++c)
            pc[k][c] = img.at(active[k].x, active[k].y, c) / 255.0;

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double qc[3] = {img.at(x, y, 0) / 255.0, img.at(x, y, 1) / 255.0,
                            img.at(x, y, 2) / 255.0};
            double best = 0;
            std::size_t best_k = 0;
            for (std::size_t k = 0; k < active.size(); ++k) {
                double dx = x - active[k].x;
                double dy = y - active[k].y;
                double spatial = std::sqrt(dx * dx + dy * dy) / diag;
                double c0 = qc[0] - pc[k][0];
                double c1 = qc[1] - pc[k][1];
                double c2 = qc[2] - pc[k][2];
                double color = std::sqrt(c0 * c0 + c1 * c1 + c2 * c2) * inv_sqrt3;
                double d = cfg.alpha * spatial + (1.0 - cfg.alpha) * color;
                // Strict less: ties keep the earlier (lowest-id) prompt.
                if (k == 0 || d < best) {
                    best = d;
                    best_k = k;
                }
            }
            out.at(x, y) = active[best_k].polarity == Polarity::positive ? 1 : 0;
        }
    }
    return out;
}

Mask segment(const Image& img, const PromptPool& pool, const SegmenterConfig& cfg) {
    return segment(img, pool.active_prompts(), cfg);
}

}  // namespace ppd
