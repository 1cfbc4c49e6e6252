#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "taug/error.hpp"

namespace taug {

using Real = double;

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

std::int64_t shape_size(const std::vector<int>& shape);

// Dense row-major tensor. `grad` is allocated (zero-filled, same length as
// `value`) iff requires_grad.
class Tensor {
public:
    std::vector<int> shape;
    std::vector<Real> value;
    std::vector<Real> grad;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<int> s, bool rg);

    static TensorPtr create(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr scalar(Real v, bool requires_grad = false);
    static TensorPtr full(std::vector<int> shape, Real v, bool requires_grad = false);
    static TensorPtr from_data(std::vector<int> shape, std::vector<Real> data,
                               bool requires_grad = false);

    std::int64_t size() const { return static_cast<std::int64_t>(value.size()); }
    int dim(std::size_t i) const;
    int rows() const;  // first extent (1 for scalars)
    int cols() const;  // product of remaining extents
    Real item() const;

    void set_requires_grad(bool rg);
    void zero_grad();
    bool value_finite() const;
    bool grad_finite() const;
    TensorPtr clone(bool requires_grad) const;
};

// Reverse-mode tape. Ops append backward closures during the forward pass;
// backward() replays them newest-first. A tape is single-threaded; parallel
// evaluation needs one tape per thread.
class Tape {
public:
    void record(std::function<void()> fn) {
        if (enabled_) ops_.push_back(std::move(fn));
    }
    bool enabled() const { return enabled_; }
    void set_enabled(bool e) { enabled_ = e; }
    void backward(const TensorPtr& root);
    void clear();
    std::size_t size() const { return ops_.size(); }

    struct NoGrad {
        explicit NoGrad(Tape& t) : tape(t), prev(t.enabled_) { t.enabled_ = false; }
        ~NoGrad() { tape.enabled_ = prev; }
        NoGrad(const NoGrad&) = delete;
        NoGrad& operator=(const NoGrad&) = delete;
        Tape& tape;
        bool prev;
    };

private:
    std::vector<std::function<void()>> ops_;
    bool enabled_ = true;
};

struct NamedParam {
    std::string name;
    TensorPtr tensor;
};

}  // namespace taug
