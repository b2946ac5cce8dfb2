#include "ppd/metrics.hpp"

#include <sstream>
#include <stdexcept>

namespace ppd {
namespace {

struct Counts {
    std::size_t a = 0, b = 0, inter = 0;
};

Counts count_overlap(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("shape mismatch");
    Counts c;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        c.a += a.data[i] != 0;
        c.b += b.data[i] != 0;
        c.inter += (a.data[i] != 0) && (b.data[i] != 0);
    }
    return c;
}

}  // namespace

double dice(const Mask& a, const Mask& b) {
    Counts c = count_overlap(a, b);
    if (c.a + c.b == 0) return 1.0;  // empty vs empty: perfect agreement
    return 2.0 * static_cast<double>(c.inter) / static_cast<double>(c.a + c.b);
}

double iou(const Mask& a, const Mask& b) {
    Counts c = count_overlap(a, b);
    std::size_t uni = c.a + c.b - c.inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(c.inter) / static_cast<double>(uni);
}

Metrics compute_metrics(const Mask& pred, const Mask& gt) {
    return Metrics{dice(pred, gt), iou(pred, gt)};
}

std::string metrics_to_json(const Metrics& m) {
    std::ostringstream out;
    out.precision(17);
    out << "{\"dice\": " << m.dice << ", \"iou\": " << m.iou << "}";
    return out.str();
}

}  // namespace ppd
