#pragma once

#include "ppd/qnet.hpp"
#include "ppd/rng.hpp"

#include <cstddef>
#include <vector>

namespace ppd {

// Fixed-capacity FIFO ring of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {}

    void push(Transition t) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(t));
        } else {
            items_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }

    const Transition& at(std::size_t i) const { return items_[i]; }

    // Uniform sample with replacement.
    std::vector<Transition> sample(std::size_t n, Rng& rng) const {
        std::vector<Transition> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(items_[rng.next_int(items_.size())]);
        return out;
    }

    // Same draw sequence as sample(), without copying; pointers stay valid
    // until the slot is overwritten.
    std::vector<const Transition*> sample_ptrs(std::size_t n, Rng& rng) const {
        std::vector<const Transition*> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(&items_[rng.next_int(items_.size())]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> items_;
};

}  // namespace ppd
