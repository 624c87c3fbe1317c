#include "ipvi/kernel.hpp"

#include "ipvi/ops.hpp"

namespace ipvi {

Tensor rbf_ard(const Tensor& a, const Tensor& b, const Tensor& log_lengthscales,
               const Tensor& log_signal_variance) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("rbf_ard: inputs must be rank-2");
    }
    const std::size_t d = log_lengthscales.size();
    if (a.cols() != d || b.cols() != d) {
        throw DimensionError("rbf_ard: input width " + std::to_string(a.cols()) + "/" +
                             std::to_string(b.cols()) + " vs " + std::to_string(d) +
                             " lengthscales");
    }
    Tensor inv_ls = exp(scale(log_lengthscales, -1.0));
    Tensor ah = mul(a, inv_ls);
    Tensor bh = mul(b, inv_ls);
    Tensor a2 = sum(square(ah), 1);                      // {n}
    Tensor b2 = sum(square(bh), 1);                      // {m}
    Tensor cross = matmul(ah, transpose(bh));            // {n, m}
    Tensor sq = colwise_add(add(scale(cross, -2.0), b2), a2);
    sq = clamp_min(sq, 0.0);  // guard tiny negative round-off
    return mul(exp(scale(sq, -0.5)), exp(log_signal_variance));
}

JitterChol jitter_chol(const Tensor& k) {
    const std::size_t n = k.rows();
    if (k.cols() != n) throw DimensionError("jitter_chol: matrix must be square");
    double diag_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_mean += k(i, i);
    diag_mean /= static_cast<double>(n);

    for (double level : {1e-8, 1e-6, 1e-4}) {
        const double jitter = level * diag_mean;
        Tensor probe = k.detached();
        for (std::size_t i = 0; i < n; ++i) probe.at(i, i) += jitter;
        try {
            cholesky(probe);
        } catch (const NotPositiveDefiniteError&) {
            continue;
        }
        Tensor shifted = add(k, scale(Tensor::eye(n), jitter));
        return JitterChol{cholesky(shifted), jitter};
    }
    throw NotPositiveDefiniteError("jitter_chol: factorization failed at all jitter levels");
}

}  // namespace ipvi
