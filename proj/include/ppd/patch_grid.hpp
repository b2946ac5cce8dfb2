#pragma once

#include "ppd/image.hpp"

#include <array>
#include <vector>

namespace ppd {

inline constexpr int kDescriptorDim = 8;

// Handcrafted per-patch descriptor: [mean R, mean G, mean B, std of
// luminance, 4-bin gradient-orientation histogram of luminance].
// The first four entries are scaled to [0,1]; the histogram is
// mass-normalized (all zeros for flat patches).
using Descriptor = std::array<double, kDescriptorDim>;

struct PatchGrid {
    int patch_size = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::array<double, 2>> centers;  // (x, y) per patch, row-major
    std::vector<Descriptor> descriptors;

    int count() const { return rows * cols; }

    // Patch containing pixel (x, y); clamped to the last row/column for
    // pixels in the residual border.
    int patch_at(int x, int y) const {
        int c = x / patch_size;
        int r = y / patch_size;
        if (c >= cols) c = cols - 1;
        if (r >= rows) r = rows - 1;
        return r * cols + c;
    }
};

// Dense symmetric matrix with zero diagonal.
struct Matrix {
    int n = 0;
    std::vector<double> v;

    Matrix() = default;
    explicit Matrix(int size) : n(size), v(static_cast<std::size_t>(size) * size, 0.0) {}

    double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * n + j]; }
    double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * n + j]; }

    double max_entry() const;
};

struct DualSpaceGraph {
    int n = 0;
    Matrix m_f;  // pairwise descriptor distances
    Matrix m_p;  // pairwise patch-center distances, pixels
};

// Non-overlapping partition; residual border pixels are ignored.
// Throws if the image is smaller than one patch.
PatchGrid build_patch_grid(const Image& img, int patch_size);

Descriptor compute_descriptor(const Image& img, int x0, int y0, int patch_size);

Matrix feature_distance_matrix(const PatchGrid& grid);
Matrix physical_distance_matrix(const PatchGrid& grid);

DualSpaceGraph build_dual_space_graph(const PatchGrid& grid);

}  // namespace ppd
