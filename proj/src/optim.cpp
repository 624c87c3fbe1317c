#include "ipvi/optim.hpp"

#include <cmath>

#include "ipvi/errors.hpp"

namespace ipvi {

void sga_step(Tensor& param, const Tensor& grad, double rate) {
    if (!param.same_shape(grad)) {
        throw DimensionError("sga_step: parameter shape " + shape_str(param.shape()) +
                             " vs gradient " + shape_str(grad.shape()));
    }
    auto& p = param.raw();
    const auto& g = grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += rate * g[i];
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double rate, double beta1,
               double beta2, double eps) {
    if (!param.same_shape(grad)) {
        throw DimensionError("adam_step: parameter shape " + shape_str(param.shape()) +
                             " vs gradient " + shape_str(grad.shape()));
    }
    if (state.step == 0) {
        state.m = Tensor::zeros(param.shape());
        state.v = Tensor::zeros(param.shape());
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    auto& p = param.raw();
    auto& m = state.m.raw();
    auto& v = state.v.raw();
    const auto& g = grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] += rate * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace ipvi
