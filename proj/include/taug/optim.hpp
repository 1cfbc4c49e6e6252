#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taug/tensor.hpp"

namespace taug {

// Momentum SGD (optional Nesterov, coupled L2 decay) and AdamW (decoupled
// decay). Both abort with diagnostics on non-finite gradients.
class Optimizer {
public:
    struct SgdOptions {
        Real lr = 0.05;
        Real momentum = 0.9;
        Real weight_decay = 0;
        bool nesterov = true;
    };
    struct AdamWOptions {
        Real lr = 1e-3;
        Real beta1 = 0.9;
        Real beta2 = 0.999;
        Real eps = 1e-8;
        Real weight_decay = 1e-2;
    };

    static Optimizer sgd(std::vector<NamedParam> params, const SgdOptions& opt);
    static Optimizer adamw(std::vector<NamedParam> params, const AdamWOptions& opt);

    void step();
    void zero_grad();
    std::uint64_t step_count() const { return step_count_; }
    void set_step_count(std::uint64_t t) { step_count_ = t; }
    void set_lr(Real lr) { lr_ = lr; }
    Real lr() const { return lr_; }

    // moment buffers, exposed for checkpointing: SGD has one buffer per param
    // (velocity), AdamW has two (m then v), named <param>.<buffer>.
    std::vector<NamedParam> state_buffers();

private:
    enum class Kind { sgd, adamw };
    Kind kind_ = Kind::sgd;
    std::vector<NamedParam> params_;
    std::vector<TensorPtr> buf_a_;  // velocity / first moment
    std::vector<TensorPtr> buf_b_;  // second moment (adamw)
    Real lr_ = 0, momentum_ = 0, weight_decay_ = 0;
    bool nesterov_ = false;
    Real beta1_ = 0, beta2_ = 0, eps_ = 0;
    std::uint64_t step_count_ = 0;
};

}  // namespace taug
