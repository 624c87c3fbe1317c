#pragma once

#include "ipvi/tensor.hpp"

namespace ipvi {

/// RBF-ARD hyperparameters, stored in log space so optimization is
/// unconstrained and the exponentials stay positive.
struct KernelHyper {
    Tensor log_lengthscales;     // {D}
    Tensor log_signal_variance;  // scalar, log sigma_f^2

    static KernelHyper unit(std::size_t input_dim) {
        return KernelHyper{Tensor::zeros({input_dim}), Tensor(0.0)};
    }
};

/// K[i,j] = sigma_f^2 * exp(-1/2 sum_d (a[i,d]-b[j,d])^2 / l_d^2).
/// Differentiable w.r.t. both inputs and both hyperparameter tensors.
Tensor rbf_ard(const Tensor& a, const Tensor& b, const Tensor& log_lengthscales,
               const Tensor& log_signal_variance);

inline Tensor rbf_ard(const Tensor& a, const Tensor& b, const KernelHyper& h) {
    return rbf_ard(a, b, h.log_lengthscales, h.log_signal_variance);
}

struct JitterChol {
    Tensor factor;  // lower-triangular
    double jitter;  // value that succeeded
};

/// Cholesky with escalating jitter {1e-8, 1e-6, 1e-4} * mean(diag K).
/// Failed attempts are probed off-tape so they leave no junk nodes.
JitterChol jitter_chol(const Tensor& k);

}  // namespace ipvi
