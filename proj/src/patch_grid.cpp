#include "ppd/patch_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace ppd {
namespace {

double luminance(const Image& img, int x, int y) {
    return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
}

}  // namespace

double Matrix::max_entry() const {
    double m = 0.0;
    for (double x : v)
        if (x > m) m = x;
    return m;
}

Descriptor compute_descriptor(const Image& img, int x0, int y0, int patch_size) {
    const int n = patch_size * patch_size;
    double sum[3] = {0, 0, 0};
    double lum_sum = 0, lum_sq = 0;
    for (int y = y0; y < y0 + patch_size; ++y) {
        for (int x = x0; x < x0 + patch_size; ++x) {
            for (int c = 0; c < 3; ++c) sum[c] += img.at(x, y, c);
            double l = luminance(img, x, y);
            lum_sum += l;
            lum_sq += l * l;
        }
    }
    double lum_mean = lum_sum / n;
    double var = lum_sq / n - lum_mean * lum_mean;
    if (var < 0) var = 0;

    // Gradient-orientation histogram over the patch interior, central
    // differences, bins at 0/45/90/135 degrees, magnitude-weighted.
    double hist[4] = {0, 0, 0, 0};
    for (int y = y0 + 1; y < y0 + patch_size - 1; ++y) {
        for (int x = x0 + 1; x < x0 + patch_size - 1; ++x) {
            double gx = (luminance(img, x + 1, y) - luminance(img, x - 1, y)) / 2.0;
            double gy = (luminance(img, x, y + 1) - luminance(img, x, y - 1)) / 2.0;
            double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0) continue;
            double theta = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
            if (theta < 0) theta += 180.0;
            if (theta >= 180.0) theta -= 180.0;
            int bin = static_cast<int>(std::lround(theta / 45.0)) % 4;
            hist[bin] += mag;
        }
    }
    double mass = hist[0] + hist[1] + hist[2] + hist[3];

    Descriptor d{};
    d[0] = sum[0] / n / 255.0;
    d[1] = sum[1] / n / 255.0;
    d[2] = sum[2] / n / 255.0;
    d[3] = std::sqrt(var) / 255.0;
    for (int k = 0; k < 4; ++k) d[4 + k] = mass > 0 ? hist[k] / mass : 0.0;
    return d;
}

PatchGrid build_patch_grid(const Image& img, int patch_size) {
    if (patch_size < 2) throw std::invalid_argument("patch_size must be >= 2");
    if (img.width < patch_size || img.height < patch_size)
        throw std::invalid_argument("image smaller than one patch");

    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.rows = img.height / patch_size;
    grid.cols = img.width / patch_size;
    grid.centers.reserve(grid.count());
    grid.descriptors.reserve(grid.count());
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            grid.centers.push_back({c * patch_size + patch_size / 2.0,
                                    r * patch_size + patch_size / 2.0});
            grid.descriptors.push_back(
                compute_descriptor(img, c * patch_size, r * patch_size, patch_size));
        }
    }
    return grid;
}

Matrix feature_distance_matrix(const PatchGrid& grid) {
    const int n = grid.count();
    Matrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < kDescriptorDim; ++k) {
                double d = grid.descriptors[i][k] - grid.descriptors[j][k];
                s += d * d;
            }
            double dist = std::sqrt(s);
            m(i, j) = dist;
            m(j, i) = dist;
        }
    }
    return m;
}

Matrix physical_distance_matrix(const PatchGrid& grid) {
    const int n = grid.count();
    Matrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double dx = grid.centers[i][0] - grid.centers[j][0];
            double dy = grid.centers[i][1] - grid.centers[j][1];
            double dist = std::sqrt(dx * dx + dy * dy);
            m(i, j) = dist;
            m(j, i) = dist;
        }
    }
    return m;
}

DualSpaceGraph build_dual_space_graph(const PatchGrid& grid) {
    DualSpaceGraph g;
    g.n = grid.count();
    g.m_f = feature_distance_matrix(grid);
    g.m_p = physical_distance_matrix(grid);
    return g;
}

}  // namespace ppd
