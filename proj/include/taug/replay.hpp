#pragma once

#include "taug/augment.hpp"

namespace taug {

// Time-ordered deep copies of the augmentation policy with geometric
// priorities p_i = gamma^(S-i) (1-indexed; the newest entry has priority 1).
class ReplayBuffer {
public:
    explicit ReplayBuffer(Real gamma = 0.99, int store_every = 10);

    void store(const AugmentationPolicy& live);
    std::size_t size() const { return snapshots_.size(); }
    Real gamma() const { return gamma_; }
    int store_every() const { return store_every_; }
    const AugmentationPolicy& snapshot(std::size_t i) const;

    // Normalized gamma^(count - i) priorities for i = 1..count.
    std::vector<Real> probabilities(std::size_t count) const;

    // Draw among stored snapshots only. Throws on an empty buffer.
    std::size_t sample_index(RngStream& rng) const;

    // Trainer path: the live policy joins as the implicit newest entry with
    // priority 1; an empty buffer falls back to the live policy without
    // consuming randomness.
    const AugmentationPolicy& sample(const AugmentationPolicy& live, RngStream& rng) const;

private:
    Real gamma_;
    int store_every_;
    std::vector<AugmentationPolicy> snapshots_;
};

}  // namespace taug
