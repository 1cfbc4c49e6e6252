#include "taug/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace taug {

Real finite_diff_coord(const std::function<Real()>& f, Tensor& param, std::int64_t idx,
                       Real eps) {
    const Real saved = param.value[idx];
    param.value[idx] = saved + eps;
    const Real fp = f();
    param.value[idx] = saved - eps;
    const Real fm = f();
    param.value[idx] = saved;
    return (fp - fm) / (Real(2) * eps);
}

std::vector<Real> finite_diff_grad(const std::function<Real()>& f, Tensor& param, Real eps) {
    std::vector<Real> g(param.value.size());
    for (std::int64_t i = 0; i < param.size(); ++i) g[i] = finite_diff_coord(f, param, i, eps);
    return g;
}

Real rel_err(Real analytic, Real numeric, Real floor) {
    const Real denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
    return std::fabs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(const std::string& name,
                                const std::function<TensorPtr(Tape&)>& build,
                                const std::vector<TensorPtr>& params, int probes_per_param,
                                Real eps, Real tol, Real floor, RngStream& probe_rng) {
    GradCheckResult res;
    res.path = name;

    for (const auto& p : params) p->zero_grad();
    Tape tape;
    auto loss = build(tape);
    tape.backward(loss);

    std::vector<std::vector<Real>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p->grad);

    auto value_of = [&]() {
        Tape t;
        t.set_enabled(false);
        return build(t)->item();
    };

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& param = *params[pi];
        const std::int64_t n = param.size();
        std::set<std::int64_t> coords;
        if (n <= probes_per_param) {
            for (std::int64_t i = 0; i < n; ++i) coords.insert(i);
        } else {
            while (static_cast<int>(coords.size()) < probes_per_param)
                coords.insert(static_cast<std::int64_t>(probe_rng.uniform_int(n)));
        }
        for (std::int64_t idx : coords) {
            const Real numeric = finite_diff_coord(value_of, param, idx, eps);
            const Real err = rel_err(analytic[pi][idx], numeric, floor);
            res.max_rel_err = std::max(res.max_rel_err, err);
            ++res.coords_checked;
        }
    }
    res.pass = res.max_rel_err < tol;
    return res;
}

}  // namespace taug
