#pragma once

#include "ppd/image.hpp"
#include "ppd/prompts.hpp"

namespace ppd {

struct SegmenterConfig {
    double alpha = 0.5;  // spatial weight; (1 - alpha) weighs color
};

// Deterministic promptable segmenter: each pixel takes the polarity of its
// nearest active prompt under
//   d(q, p) = alpha * |pos(q) - pos(p)| / diag + (1 - alpha) * |c(q) - c(p)| / sqrt(3)
// with c(.) the RGB/255 color at a pixel and diag = sqrt(W^2 + H^2).
// Exact ties go to the lowest prompt id. No active prompts -> all background.
// Throws if a prompt lies outside the image.
Mask segment(const Image& img, const std::vector<PromptPoint>& active,
             const SegmenterConfig& cfg);

Mask segment(const Image& img, const PromptPool& pool, const SegmenterConfig& cfg);

}  // namespace ppd
