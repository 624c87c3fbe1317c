#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ipvi/ops.hpp"
#include "ipvi/rng.hpp"
#include "ipvi/tape.hpp"
#include "ipvi/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace ipvi;
using testsupport::gradcheck;

TEST_CASE("tensor shape invariants") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), DimensionError);
    Tensor t = Tensor::matrix(2, 2, {1, 2, 3, 4});
    CHECK(t(1, 0) == 3.0);
    CHECK(Tensor(5.0).is_scalar());
    CHECK(shape_size({}) == 1);
}

TEST_CASE("matmul identity and projector") {
    Tensor i2 = Tensor::eye(2);
    Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
    Tensor r = matmul(i2, a);
    for (std::size_t k = 0; k < 4; ++k) CHECK(r.data()[k] == a.data()[k]);

    Tensor p = Tensor::matrix(2, 2, {1, 0, 0, 0});
    Tensor b = Tensor::matrix(2, 2, {5, 6, 7, 8});
    Tensor pr = matmul(p, b);
    CHECK(pr(0, 0) == 5.0);
    CHECK(pr(0, 1) == 6.0);
    CHECK(pr(1, 0) == 0.0);
    CHECK(pr(1, 1) == 0.0);

    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
    Rng rng(7);
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) { return sum(matmul(p[0], p[1])); },
        {rng.normal_tensor({3, 4}), rng.normal_tensor({4, 2})});
    CHECK(res.max_rel_err <= 1e-6);
}

TEST_CASE("elementwise forward values") {
    CHECK(sigmoid(Tensor(0.0)).value() == doctest::Approx(0.5));
    CHECK(leaky_relu(Tensor(-1.0), 0.2).value() == doctest::Approx(-0.2));
    CHECK(leaky_relu(Tensor(3.0), 0.2).value() == doctest::Approx(3.0));
    CHECK(softplus(Tensor(0.0)).value() == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(log(Tensor(0.0)), DomainError);
    CHECK_THROWS_AS(sqrt(Tensor(-1.0)), DomainError);
}

TEST_CASE("sigmoid derivative at zero via tape") {
    Tape tape;
    Tensor x = tape.leaf(Tensor(0.0));
    Tensor y = sigmoid(x);
    tape.backward(y);
    CHECK(tape.grad(x).value() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("broadcast add/sub/mul") {
    Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor v = Tensor::vector({10, 20, 30});
    Tensor r = add(m, v);
    CHECK(r(1, 2) == 36.0);
    Tensor s = mul(m, Tensor(2.0));
    CHECK(s(0, 1) == 4.0);
    Tensor d = sub(v, m);  // row-vector on the left
    CHECK(d(0, 0) == 9.0);
    CHECK_THROWS_AS(add(m, Tensor::vector({1.0, 2.0})), DimensionError);

    Rng rng(3);
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            return sum(mul(add(p[0], p[1]), sub(p[0], p[2])));
        },
        {rng.normal_tensor({3, 4}), rng.normal_tensor({4}), Tensor(0.7)});
    CHECK(res.max_rel_err <= 1e-6);
}

TEST_CASE("reductions") {
    CHECK(sum(Tensor::vector({1, 2, 3})).value() == doctest::Approx(6.0));
    Tensor m = Tensor::matrix(2, 2, {1, 3, 3, 5});
    Tensor col_means = mean(m, 0);
    CHECK(col_means(0) == doctest::Approx(2.0));
    CHECK(col_means(1) == doctest::Approx(4.0));

    Tape tape;
    Tensor x = tape.leaf(Tensor::vector({1, 2, 3, 4}));
    tape.backward(mean(x));
    Tensor g = tape.grad(x);
    for (double v : g.data()) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("reduction/axis gradients") {
    Rng rng(11);
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            return add(sum(mean(p[0], 0)), mean(sum(square(p[0]), 1)));
        },
        {rng.normal_tensor({3, 5})});
    CHECK(res.max_rel_err <= 1e-6);
}

TEST_CASE("structural op gradients") {
    Rng rng(13);
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            Tensor c = concat_cols(p[0], transpose(p[1]));
            Tensor t = tile_vertical(c, 2);
            Tensor r = repeat_each_row(p[1], 3);
            return add(sum(square(slice_rows(t, 1, 2))), sum(mul(r, r)));
        },
        {rng.normal_tensor({2, 3}), rng.normal_tensor({4, 2})});
    CHECK(res.max_rel_err <= 1e-6);

    auto res2 = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            return sum(square(tile_rows(p[0], 4)));
        },
        {rng.normal_tensor({3})});
    CHECK(res2.max_rel_err <= 1e-6);
}

TEST_CASE("colwise ops and logsumexp gradients") {
    Rng rng(17);
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            Tensor a = colwise_add(p[0], p[1]);
            Tensor b = colwise_mul(p[0], p[2]);
            return add(sum(logsumexp_rows(a)), sum(square(b)));
        },
        {rng.normal_tensor({4, 3}), rng.normal_tensor({4}), rng.normal_tensor({4})});
    CHECK(res.max_rel_err <= 1e-6);
}

TEST_CASE("cholesky forward") {
    Tensor a = Tensor::matrix(2, 2, {4, 2, 2, 3});
    Tensor l = cholesky(a);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 0) == doctest::Approx(1.0));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK(l(0, 1) == 0.0);

    Tensor i3 = cholesky(Tensor::eye(3));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(i3(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));

    CHECK_THROWS_AS(cholesky(Tensor::matrix(2, 2, {1, 2, 2, 1})), NotPositiveDefiniteError);
}

TEST_CASE("cholesky round trip on random SPD") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.index(6);
        Tensor b = rng.normal_tensor({n, n});
        Tensor a = add(matmul(b, transpose(b)), Tensor::eye(n));
        Tensor l = cholesky(a);
        Tensor rec = matmul(l, transpose(l));
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            num += (rec.data()[i] - a.data()[i]) * (rec.data()[i] - a.data()[i]);
            den += a.data()[i] * a.data()[i];
        }
        CHECK(std::sqrt(num / den) <= 1e-10);
    }
}

TEST_CASE("cholesky gradient vs finite differences") {
    Rng rng(29);
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            Tensor a = add(matmul(p[0], transpose(p[0])), Tensor::eye(3));
            Tensor l = cholesky(a);
            return sum(mul(l, p[1]));
        },
        {rng.normal_tensor({3, 3}), rng.normal_tensor({3, 3})});
    CHECK(res.max_rel_err <= 1e-5);
}

TEST_CASE("tri_solve forward and gradient") {
    Tensor l = Tensor::matrix(2, 2, {2, 0, 1, 1});
    Tensor x = tri_solve(l, Tensor::vector({2, 2}), false);
    CHECK(x(0) == doctest::Approx(1.0));
    CHECK(x(1) == doctest::Approx(1.0));

    Tensor i = Tensor::eye(3);
    Tensor b = Tensor::vector({3, 4, 5});
    Tensor xi = tri_solve(i, b, false);
    for (std::size_t k = 0; k < 3; ++k) CHECK(xi(k) == b(k));

    CHECK_THROWS_AS(tri_solve(Tensor::matrix(2, 2, {0, 0, 1, 1}), Tensor::vector({1, 1}), false),
                    SingularMatrixError);

    Rng rng(31);
    for (bool tr : {false, true}) {
        auto res = gradcheck(
            [tr](Tape&, std::vector<Tensor>& p) {
                Tensor lf = cholesky(add(matmul(p[0], transpose(p[0])), Tensor::eye(3)));
                return sum(square(tri_solve(lf, p[1], tr)));
            },
            {rng.normal_tensor({3, 3}), rng.normal_tensor({3, 2})});
        CHECK(res.max_rel_err <= 1e-6);
    }
}

TEST_CASE("lower_tri_softplus_diag") {
    Rng rng(37);
    Tensor raw = rng.normal_tensor({3, 3});
    Tensor l = lower_tri_softplus_diag(raw);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(l(i, i) > 0.0);
        for (std::size_t j = i + 1; j < 3; ++j) CHECK(l(i, j) == 0.0);
    }
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            return sum(square(lower_tri_softplus_diag(p[0])));
        },
        {rng.normal_tensor({4, 4})});
    CHECK(res.max_rel_err <= 1e-6);
}

TEST_CASE("backward contract") {
    Tape tape;
    Tensor x = tape.leaf(Tensor(3.0));
    Tensor y = square(x);
    tape.backward(y);
    CHECK(tape.grad(x).value() == doctest::Approx(6.0));
    CHECK_THROWS_AS(tape.backward(y), ContractError);

    Tape t2;
    Tensor v = t2.leaf(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(t2.backward(v), ContractError);

    // disjoint leaf gets a zero gradient
    Tape t3;
    Tensor used = t3.leaf(Tensor(2.0));
    Tensor unused = t3.leaf(Tensor::vector({1, 2, 3}));
    t3.backward(square(used));
    Tensor g = t3.grad(unused);
    for (double gv : g.data()) CHECK(gv == 0.0);
}

TEST_CASE("composite loss gradient: sum(sigmoid(W x))") {
    Rng rng(41);
    auto res = gradcheck(
        [](Tape&, std::vector<Tensor>& p) {
            return sum(sigmoid(matmul(p[0], p[1])));
        },
        {rng.normal_tensor({4, 3}), rng.normal_tensor({3, 2})});
    CHECK(res.max_rel_err <= 1e-6);
}

TEST_CASE("every differentiable op against finite differences, random trials") {
    Rng rng(101);
    int trials = 0;
    double worst = 0.0;
    while (trials < 100) {
        const std::size_t r = 2 + rng.index(3), c = 2 + rng.index(3);
        Tensor a = rng.normal_tensor({r, c});
        Tensor b = rng.normal_tensor({r, c});
        for (double& v : a.raw()) v = std::clamp(v, -2.0, 2.0);
        for (double& v : b.raw()) v = std::clamp(v, -2.0, 2.0);
        auto res = gradcheck(
            [](Tape&, std::vector<Tensor>& p) {
                Tensor s = sigmoid(p[0]);
                Tensor t = softplus(sub(p[0], p[1]));
                Tensor u = leaky_relu(mul(p[0], p[1]), 0.2);
                Tensor w = exp(scale(p[1], 0.5));
                Tensor lg = log(shift(square(p[0]), 1.0));
                Tensor sq = sqrt(shift(square(p[1]), 0.5));
                Tensor cl = clamp_min(p[0], 0.25);
                return add(sum(s), add(sum(t), add(sum(u), add(sum(w),
                       add(sum(lg), add(sum(sq), sum(cl)))))));
            },
            {a, b});
        worst = std::max(worst, res.max_rel_err);
        ++trials;
    }
    CHECK(worst <= 1e-5);
}
