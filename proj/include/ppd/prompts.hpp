#pragma once

#include "ppd/image.hpp"
#include "ppd/patch_grid.hpp"

#include <string>
#include <vector>

namespace ppd {

enum class Polarity { positive, negative };
enum class Status { active, inactive };

struct PromptPoint {
    int id = 0;
    int x = 0;
    int y = 0;
    Polarity polarity = Polarity::positive;
    Status status = Status::active;
    int patch_index = 0;
};

struct PromptPool {
    std::vector<PromptPoint> prompts;

    int size() const { return static_cast<int>(prompts.size()); }
    int active_count() const;
    std::vector<PromptPoint> active_prompts() const;
};

// Grid-sampled prompts labeled by the ground-truth mask: one point per
// interval cell fully inside the image, positive iff the mask is
// foreground at that pixel. All statuses active.
PromptPool init_ideal_prompts(const Mask& mask, int interval, const PatchGrid& grid);

// Positive prompts stay active, negative prompts start inactive (the
// attack phase's starting configuration).
void set_attack_start_statuses(PromptPool& pool);

// One prompt per target patch, placed at the patch center; polarity taken
// from the reference mask at the center of the nearest-descriptor
// reference patch (ties to the lowest reference index). All active.
PromptPool feature_match_prompts(const Image& ref_img, const Mask& ref_mask,
                                 const Image& target_img, int patch_size);

std::string pool_to_json(const PromptPool& pool);
PromptPool pool_from_json(const std::string& text, const PatchGrid& grid);

void write_pool(const std::string& path, const PromptPool& pool);
PromptPool read_pool(const std::string& path, const PatchGrid& grid);

}  // namespace ppd
