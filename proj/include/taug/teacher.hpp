#pragma once

#include "taug/model.hpp"

namespace taug {

// Elementwise shadow <- decay * shadow + (1 - decay) * source over parameter
// lists; shapes must match pairwise.
void ema_update_params(std::vector<NamedParam> shadow, const std::vector<NamedParam>& source,
                       Real decay);

// Teacher model: an EMA shadow of the target or a frozen pretrained copy.
// Teacher parameters never require grad, so objectives can differentiate
// through teacher predictions with respect to the input pixels only.
struct TeacherState {
    enum class Kind { ema, pretrained };

    Kind kind = Kind::ema;
    Real decay = 0.999;
    TargetModel model;

    // EMA teacher initialized as an exact copy of the target.
    static TeacherState ema_from(const TargetModel& target, Real decay);
    static TeacherState pretrained_from(const TargetModel& frozen);

    void ema_update(const TargetModel& target);

    // Eval-mode forward; no grad reaches teacher parameters.
    TensorPtr forward(Tape& tape, const TensorPtr& pixels) const;

    std::vector<NamedParam> params(const std::string& prefix) const {
        return model.params(prefix);
    }
};

}  // namespace taug
