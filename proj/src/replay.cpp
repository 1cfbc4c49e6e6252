#include "taug/replay.hpp"

#include <cmath>

namespace taug {

ReplayBuffer::ReplayBuffer(Real gamma, int store_every)
    : gamma_(gamma), store_every_(store_every) {
    if (!(gamma > 0 && gamma <= 1)) throw ConfigError("ReplayBuffer: gamma must lie in (0, 1]");
    if (store_every <= 0) throw ConfigError("ReplayBuffer: store cadence must be positive");
}

void ReplayBuffer::store(const AugmentationPolicy& live) {
    snapshots_.push_back(live.clone(false));
}

const AugmentationPolicy& ReplayBuffer::snapshot(std::size_t i) const {
    if (i >= snapshots_.size()) throw DimensionError("ReplayBuffer: snapshot index out of range");
    return snapshots_[i];
}

std::vector<Real> ReplayBuffer::probabilities(std::size_t count) const {
    std::vector<Real> p(count);
    Real total = 0;
    for (std::size_t i = 1; i <= count; ++i) {
        p[i - 1] = std::pow(gamma_, static_cast<Real>(count - i));
        total += p[i - 1];
    }
    for (auto& v : p) v /= total;
    return p;
}

namespace {
std::size_t weighted_draw(const std::vector<Real>& probs, RngStream& rng) {
    const Real u = rng.uniform();
    Real acc = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}
}  // namespace

std::size_t ReplayBuffer::sample_index(RngStream& rng) const {
    if (snapshots_.empty()) throw ConfigError("ReplayBuffer: sample from empty buffer");
    return weighted_draw(probabilities(snapshots_.size()), rng);
}

const AugmentationPolicy& ReplayBuffer::sample(const AugmentationPolicy& live,
                                               RngStream& rng) const {
    if (snapshots_.empty()) return live;
    const std::size_t idx = weighted_draw(probabilities(snapshots_.size() + 1), rng);
    return idx == snapshots_.size() ? live : snapshots_[idx];
}

}  // namespace taug
