#pragma once

#include "ppd/image.hpp"

#include <string>

namespace ppd {

struct Metrics {
    double dice = 0.0;
    double iou = 0.0;
};

// 2|A∩B| / (|A|+|B|); both masks empty -> 1.0. Throws on shape mismatch.
double dice(const Mask& a, const Mask& b);

// |A∩B| / |A∪B|; both masks empty -> 1.0. Throws on shape mismatch.
double iou(const Mask& a, const Mask& b);

Metrics compute_metrics(const Mask& pred, const Mask& gt);

// {"dice": ..., "iou": ...}
std::string metrics_to_json(const Metrics& m);

}  // namespace ppd
