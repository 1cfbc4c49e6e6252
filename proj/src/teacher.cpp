#include "taug/teacher.hpp"

namespace taug {

void ema_update_params(std::vector<NamedParam> shadow, const std::vector<NamedParam>& source,
                       Real decay) {
    if (shadow.size() != source.size())
        throw DimensionError("ema_update: parameter count mismatch");
    for (std::size_t i = 0; i < shadow.size(); ++i) {
        auto& s = *shadow[i].tensor;
        const auto& t = *source[i].tensor;
        if (s.shape != t.shape)
            throw DimensionError("ema_update: shape mismatch at " + shadow[i].name);
        for (std::int64_t j = 0; j < s.size(); ++j)
            s.value[j] = decay * s.value[j] + (Real(1) - decay) * t.value[j];
    }
}

TeacherState TeacherState::ema_from(const TargetModel& target, Real decay) {
    TeacherState t;
    t.kind = Kind::ema;
    t.decay = decay;
    t.model = target.clone(false);
    return t;
}

TeacherState TeacherState::pretrained_from(const TargetModel& frozen) {
    TeacherState t;
    t.kind = Kind::pretrained;
    t.model = frozen.clone(false);
    return t;
}

void TeacherState::ema_update(const TargetModel& target) {
    if (kind != Kind::ema) throw ConfigError("ema_update: teacher is not an EMA teacher");
    ema_update_params(model.params("teacher"), target.params("target"), decay);
}

TensorPtr TeacherState::forward(Tape& tape, const TensorPtr& pixels) const {
    return model.forward(tape, pixels);
}

}  // namespace taug
