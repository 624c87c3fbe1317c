#pragma once

#include "ipvi/tape.hpp"
#include "ipvi/tensor.hpp"

namespace ipvi {

// Differentiable tensor operations. Every function computes eagerly and, when
// an operand is tape-linked, records a node with the matching backward rule.
// Binary elementwise ops support exact-shape operands, a row-vector {cols}
// broadcast against a matrix, and a scalar broadcast against anything.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

/// a * c and a + c for a plain scalar constant c.
Tensor scale(const Tensor& a, double c);
Tensor shift(const Tensor& a, double c);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);     // domain error on input <= 0
Tensor sqrt(const Tensor& a);    // domain error on input <= 0
Tensor square(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.2);
Tensor clamp_min(const Tensor& a, double floor);

/// v[i] added to / multiplied into every entry of row i (v has length rows).
Tensor colwise_add(const Tensor& m, const Tensor& v);
Tensor colwise_mul(const Tensor& m, const Tensor& v);

Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, std::size_t axis);

/// Per-row log(sum_j exp(m[i,j])), computed with the max trick.
Tensor logsumexp_rows(const Tensor& m);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor tile_rows(const Tensor& v, std::size_t n);            // {d} -> {n, d}
Tensor tile_vertical(const Tensor& m, std::size_t k);        // {r, c} -> {k*r, c}
Tensor repeat_each_row(const Tensor& m, std::size_t k);      // row i -> k consecutive copies
Tensor slice_rows(const Tensor& m, std::size_t start, std::size_t count);
Tensor diagonal(const Tensor& m);                            // {n, n} -> {n}

/// Lower Cholesky factor of a symmetric positive-definite matrix. Only the
/// lower triangle of the input is read. Backward uses the standard reverse-
/// mode rule with a symmetrized input gradient.
Tensor cholesky(const Tensor& a);

/// Solve L x = b (or L^T x = b when transpose) for lower-triangular L.
Tensor tri_solve(const Tensor& l, const Tensor& b, bool transpose_l);

/// Map an unconstrained square matrix to a lower-triangular factor with a
/// softplus-positive diagonal; the strict upper triangle is ignored.
Tensor lower_tri_softplus_diag(const Tensor& raw);

void backward(Tape& tape, const Tensor& loss);

}  // namespace ipvi
