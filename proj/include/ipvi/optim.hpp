#pragma once

#include "ipvi/tensor.hpp"

namespace ipvi {

/// Per-parameter Adam moment buffers.
struct AdamState {
    Tensor m;
    Tensor v;
    long step = 0;
};

/// Plain stochastic gradient ascent: p <- p + rate * g.
void sga_step(Tensor& param, const Tensor& grad, double rate);

/// Adam ascent step with bias correction (beta1=0.9, beta2=0.999, eps=1e-8).
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double rate,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace ipvi
