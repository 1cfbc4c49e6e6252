#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taug/augment.hpp"

namespace taug {

struct Dataset {
    int height = 0, width = 0, classes = 0;
    std::vector<Real> pixels;  // [N, H, W, 3], values in [0, 1]
    std::vector<int> labels;   // in [0, classes)

    std::int64_t count() const { return static_cast<std::int64_t>(labels.size()); }
    void validate() const;
};

// Synthetic colored-shapes dataset: one shape per image (disc / square /
// triangle decides the class), shape color drawn from a class-conditional
// palette so color carries class information too. Identical spec + seed
// produce identical tensors.
struct ShapesSpec {
    int count = 2000;
    int height = 32;
    int width = 32;
    int classes = 3;
    Real background_noise = 0.05;
    std::uint64_t seed = 0;
};

Dataset generate_shapes(const ShapesSpec& spec);

// Binary small-image dataset format: records of 1 label byte followed by 3072
// channel-planar pixel bytes (32x32 RGB). Pixels are scaled to [0,1] and
// converted to interleaved HWC.
Dataset read_cifar_binary(const std::string& path, int classes = 10);
void write_cifar_binary(const std::string& path, const Dataset& ds);

// Build an ImageBatch (pixel copies + one-hot labels) from dataset rows.
ImageBatch make_batch(const Dataset& ds, const std::vector<int>& indices);

// Epoch-wise shuffled fixed-size batches; the last short batch is dropped.
// The shuffle depends only on (stream, epoch).
class Batches {
public:
    Batches(const Dataset& ds, int batch_size, const RngStream& stream, int epoch);
    std::size_t count() const { return order_.size() / batch_; }
    ImageBatch get(std::size_t i) const;
    std::vector<int> indices(std::size_t i) const;

private:
    const Dataset* ds_;
    int batch_;
    std::vector<int> order_;
};

}  // namespace taug
