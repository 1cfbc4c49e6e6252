#include "taug/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace taug {

void Dataset::validate() const {
    if (pixels.size() != static_cast<std::size_t>(count()) * height * width * 3)
        throw DimensionError("Dataset: pixel buffer size mismatch");
    for (int l : labels)
        if (l < 0 || l >= classes) throw DimensionError("Dataset: label out of range");
    for (Real v : pixels)
        if (!(v >= 0 && v <= 1)) throw DimensionError("Dataset: pixel outside [0,1]");
}

Dataset generate_shapes(const ShapesSpec& spec) {
    if (spec.classes != 3) throw ConfigError("generate_shapes: exactly 3 shape classes");
    if (spec.height < 16 || spec.width < 16)
        throw ConfigError("generate_shapes: images must be at least 16x16");
    Dataset ds;
    ds.height = spec.height;
    ds.width = spec.width;
    ds.classes = spec.classes;
    ds.pixels.assign(static_cast<std::size_t>(spec.count) * spec.height * spec.width * 3, 0);
    ds.labels.resize(spec.count);

    auto rng = RngStream::from_seed(spec.seed);
    for (int i = 0; i < spec.count; ++i) {
        const int label = i % spec.classes;
        ds.labels[i] = label;
        Real* img = ds.pixels.data() +
                    static_cast<std::size_t>(i) * spec.height * spec.width * 3;

        const Real bg = rng.uniform(0.05, 0.25);
        // class palette: one dominant channel per class
        Real color[3];
        for (int c = 0; c < 3; ++c)
            color[c] = (c == label) ? rng.uniform(0.60, 0.95) : rng.uniform(0.05, 0.35);
        const Real size = rng.uniform(5.0, 9.0);
        const Real cx = rng.uniform(size + 2.0, spec.width - size - 2.0);
        const Real cy = rng.uniform(size + 2.0, spec.height - size - 2.0);

        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                const Real dx = x - cx, dy = y - cy;
                Real dist;  // positive inside, ~1 px soft edge
                if (label == 0) {
                    dist = size - std::sqrt(dx * dx + dy * dy);
                } else if (label == 1) {
                    dist = size - std::max(std::fabs(dx), std::fabs(dy));
                } else {
                    // triangle, apex up
                    const Real half_width = (dy + size) / 2;
                    dist = std::min(half_width - std::fabs(dx), size - dy);
                }
                const Real cov = std::clamp(dist + Real(0.5), Real(0), Real(1));
                Real* px = img + (static_cast<std::size_t>(y) * spec.width + x) * 3;
                for (int c = 0; c < 3; ++c) {
                    const Real noise = rng.uniform(-spec.background_noise, spec.background_noise);
                    const Real v = bg + cov * (color[c] - bg) + noise;
                    px[c] = std::clamp(v, Real(0), Real(1));
                }
            }
    }
    return ds;
}

Dataset read_cifar_binary(const std::string& path, int classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("read_cifar_binary: cannot open " + path);
    in.seekg(0, std::ios::end);
    const std::int64_t file_size = in.tellg();
    in.seekg(0, std::ios::beg);
    constexpr std::int64_t kRecord = 1 + 3072;
    if (file_size % kRecord != 0)
        throw FormatError("read_cifar_binary: truncated record at byte offset " +
                          std::to_string((file_size / kRecord) * kRecord) + " in " + path);
    const std::int64_t n = file_size / kRecord;

    Dataset ds;
    ds.height = 32;
    ds.width = 32;
    ds.classes = classes;
    ds.labels.resize(n);
    ds.pixels.assign(static_cast<std::size_t>(n) * 32 * 32 * 3, 0);

    std::vector<unsigned char> rec(kRecord);
    for (std::int64_t i = 0; i < n; ++i) {
        if (!in.read(reinterpret_cast<char*>(rec.data()), kRecord))
            throw FormatError("read_cifar_binary: short read at record " + std::to_string(i));
        const int label = rec[0];
        if (label >= classes)
            throw FormatError("read_cifar_binary: label " + std::to_string(label) +
                              " out of range in record " + std::to_string(i));
        ds.labels[i] = label;
        Real* img = ds.pixels.data() + static_cast<std::size_t>(i) * 32 * 32 * 3;
        for (int c = 0; c < 3; ++c)
            for (int p = 0; p < 1024; ++p)
                img[static_cast<std::size_t>(p) * 3 + c] =
                    static_cast<Real>(rec[1 + c * 1024 + p]) / Real(255);
    }
    return ds;
}

void write_cifar_binary(const std::string& path, const Dataset& ds) {
    if (ds.height != 32 || ds.width != 32)
        throw FormatError("write_cifar_binary: format requires 32x32 images");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("write_cifar_binary: cannot open " + path);
    std::vector<unsigned char> rec(1 + 3072);
    for (std::int64_t i = 0; i < ds.count(); ++i) {
        rec[0] = static_cast<unsigned char>(ds.labels[i]);
        const Real* img = ds.pixels.data() + static_cast<std::size_t>(i) * 32 * 32 * 3;
        for (int c = 0; c < 3; ++c)
            for (int p = 0; p < 1024; ++p) {
                const Real v = img[static_cast<std::size_t>(p) * 3 + c];
                rec[1 + c * 1024 + p] =
                    static_cast<unsigned char>(std::lround(std::clamp(v, Real(0), Real(1)) * 255));
            }
        out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
}

ImageBatch make_batch(const Dataset& ds, const std::vector<int>& indices) {
    const int b = static_cast<int>(indices.size());
    ImageBatch batch;
    batch.pixels = Tensor::create({b, ds.height, ds.width, 3});
    batch.labels = Tensor::create({b, ds.classes});
    batch.label_ids.resize(b);
    const std::size_t stride = static_cast<std::size_t>(ds.height) * ds.width * 3;
    for (int i = 0; i < b; ++i) {
        const int idx = indices[i];
        if (idx < 0 || idx >= ds.count()) throw DimensionError("make_batch: index out of range");
        std::copy_n(ds.pixels.data() + idx * stride, stride,
                    batch.pixels->value.data() + i * stride);
        batch.label_ids[i] = ds.labels[idx];
        batch.labels->value[static_cast<std::size_t>(i) * ds.classes + ds.labels[idx]] = 1;
    }
    return batch;
}

Batches::Batches(const Dataset& ds, int batch_size, const RngStream& stream, int epoch)
    : ds_(&ds), batch_(batch_size) {
    if (batch_size < 2) throw ConfigError("batches: batch size must be at least 2");
    if (batch_size > ds.count()) throw ConfigError("batches: batch size exceeds dataset size");
    order_.resize(ds.count());
    for (std::int64_t i = 0; i < ds.count(); ++i) order_[i] = static_cast<int>(i);
    auto rng = stream.split(static_cast<std::uint64_t>(epoch));
    for (std::int64_t i = ds.count() - 1; i > 0; --i)
        std::swap(order_[i], order_[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
    order_.resize((ds.count() / batch_size) * batch_size);  // drop the short tail
}

std::vector<int> Batches::indices(std::size_t i) const {
    if (i >= count()) throw DimensionError("batches: batch index out of range");
    return {order_.begin() + static_cast<std::ptrdiff_t>(i) * batch_,
            order_.begin() + static_cast<std::ptrdiff_t>(i + 1) * batch_};
}

ImageBatch Batches::get(std::size_t i) const { return make_batch(*ds_, indices(i)); }

}  // namespace taug
