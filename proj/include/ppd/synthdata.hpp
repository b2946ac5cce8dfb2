#pragma once

#include "ppd/image.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ppd {

struct SceneSpec {
    int size = 64;                 // square images
    int blob_count = 2;            // 1..3 elliptical blobs
    std::array<int, 3> fg_color = {204, 88, 60};
    std::array<int, 3> bg_color = {46, 94, 160};
    int noise_amp = 8;             // uniform per-channel noise, 0..30
    int stripe_period = 0;         // background luminance stripes; 0 = none
    std::uint64_t seed = 0;
};

struct Scene {
    Image image;
    Mask mask;
    SceneSpec spec;
};

// Deterministic scene: union of random ellipses over a textured
// background. Foreground area is kept within [5%, 60%] of the image
// (ellipses are resampled up to 100 times, then an error is raised).
Scene gen_scene(const SceneSpec& spec);

// Scene i uses seed base_seed + i; fg/bg colors are drawn per scene with
// an enforced minimum RGB separation.
std::vector<Scene> gen_dataset(int count, std::uint64_t base_seed,
                               const SceneSpec& tmpl);

// Writes {index}.ppm, {index}_mask.pgm and manifest.json.
void write_dataset(const std::string& dir, const std::vector<Scene>& scenes,
                   std::uint64_t base_seed);

// Reads a directory written by write_dataset (or any manifest-listed
// PPM/PGM pairs).
std::vector<std::pair<Image, Mask>> load_dataset(const std::string& dir);

}  // namespace ppd
