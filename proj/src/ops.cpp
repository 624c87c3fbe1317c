#include "ipvi/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace ipvi {
namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const MatRM>;
using MMap = Eigen::Map<MatRM>;

CMap cmap(const Tensor& t, std::size_t r, std::size_t c) {
    return CMap(t.data().data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

MMap mmap(Tensor& t, std::size_t r, std::size_t c) {
    return MMap(t.raw().data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

void check_finite(const char* op, const Tensor& t) {
    if (!t.all_finite()) {
        throw DomainError(std::string(op) + ": non-finite value in result");
    }
}

Tensor finish(Tensor out, const char* op, Tape* tp, Tape::BackwardFn fn) {
    check_finite(op, out);
    if (tp != nullptr) return tp->attach(std::move(out), std::move(fn));
    return out;
}

// ---- elementwise plumbing ------------------------------------------------

enum class Bcast { same, b_rowvec, b_scalar, a_rowvec, a_scalar };

Bcast classify(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() == b.shape()) return Bcast::same;
    if (b.is_scalar()) return Bcast::b_scalar;
    if (a.is_scalar()) return Bcast::a_scalar;
    if (a.rank() == 2 && b.rank() == 1 && b.shape()[0] == a.shape()[1]) return Bcast::b_rowvec;
    if (b.rank() == 2 && a.rank() == 1 && a.shape()[0] == b.shape()[1]) return Bcast::a_rowvec;
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
}

// Value of operand `t` at flat output position i under the given broadcast.
inline double pick(const Tensor& t, Bcast kind, bool is_a, std::size_t i, std::size_t ocols) {
    switch (kind) {
        case Bcast::same:
            return t.data()[i];
        case Bcast::b_scalar:
            return is_a ? t.data()[i] : t.data()[0];
        case Bcast::a_scalar:
            return is_a ? t.data()[0] : t.data()[i];
        case Bcast::b_rowvec:
            return is_a ? t.data()[i] : t.data()[i % ocols];
        case Bcast::a_rowvec:
            return is_a ? t.data()[i % ocols] : t.data()[i];
    }
    return 0.0;
}

// Sum `g` (shaped like the broadcast output) down to the shape of the
// broadcast operand.
Tensor reduce_to(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g.detached();
    if (target.empty()) {
        double s = 0.0;
        for (double v : g.data()) s += v;
        return Tensor(s);
    }
    // row-vector target {c} from {r, c}
    const std::size_t c = target[0];
    const std::size_t r = g.size() / c;
    Tensor out = Tensor::zeros(target);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out.raw()[j] += g.data()[i * c + j];
    }
    return out;
}

template <typename Fwd, typename BackA, typename BackB>
Tensor binary_ew(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, BackA da,
                 BackB db) {
    const Bcast kind = classify(a, b, op);
    const Tensor& big = (kind == Bcast::a_rowvec || kind == Bcast::a_scalar) ? b : a;
    const std::size_t ocols = big.rank() == 2 ? big.shape()[1] : big.size();
    Tensor out = Tensor::zeros(big.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.raw()[i] = fwd(pick(a, kind, true, i, ocols), pick(b, kind, false, i, ocols));
    }
    Tape* tp = joint_tape(a, b);
    if (tp == nullptr) return finish(std::move(out), op, nullptr, {});
    const int an = a.node(), bn = b.node();
    Tensor av = a.detached(), bv = b.detached();
    Shape ashape = a.shape(), bshape = b.shape();
    auto back = [=](Tape& t, const Tensor& g) {
        if (an >= 0) {
            Tensor ga = Tensor::zeros(g.shape());
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.raw()[i] = g.data()[i] * da(pick(av, kind, true, i, ocols),
                                               pick(bv, kind, false, i, ocols));
            }
            t.accumulate(an, reduce_to(ga, ashape));
        }
        if (bn >= 0) {
            Tensor gb = Tensor::zeros(g.shape());
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb.raw()[i] = g.data()[i] * db(pick(av, kind, true, i, ocols),
                                               pick(bv, kind, false, i, ocols));
            }
            t.accumulate(bn, reduce_to(gb, bshape));
        }
    };
    return finish(std::move(out), op, tp, back);
}

template <typename Fwd, typename Dfdx>
Tensor unary_ew(const char* op, const Tensor& a, Fwd fwd, Dfdx dfdx) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.raw()[i] = fwd(a.data()[i]);
    Tape* tp = joint_tape(a);
    if (tp == nullptr) return finish(std::move(out), op, nullptr, {});
    const int an = a.node();
    Tensor av = a.detached(), ov = out.detached();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::zeros(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga.raw()[i] = g.data()[i] * dfdx(av.data()[i], ov.data()[i]);
        }
        t.accumulate(an, ga);
    };
    return finish(std::move(out), op, tp, back);
}

Tensor lower_masked(const Tensor& g) {
    const std::size_t n = g.rows();
    Tensor out = g.detached();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) out.at(i, j) = 0.0;
    }
    return out;
}

}  // namespace

// ---- linear algebra ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    const bool vec_rhs = (b.rank() == 1);
    if (a.rank() != 2 || (b.rank() != 2 && !vec_rhs)) {
        throw DimensionError("matmul: need rank-2 operands, got " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1];
    const std::size_t kb = vec_rhs ? b.shape()[0] : b.shape()[0];
    const std::size_t n = vec_rhs ? 1 : b.shape()[1];
    if (k != kb) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    Tensor out = Tensor::zeros(vec_rhs ? Shape{m} : Shape{m, n});
    mmap(out, m, n).noalias() = cmap(a, m, k) * cmap(b, k, n);
    Tape* tp = joint_tape(a, b);
    if (tp == nullptr) return finish(std::move(out), "matmul", nullptr, {});
    const int an = a.node(), bn = b.node();
    Tensor av = a.detached(), bv = b.detached();
    auto back = [=](Tape& t, const Tensor& g) {
        if (an >= 0) {
            Tensor ga = Tensor::zeros(Shape{m, k});
            mmap(ga, m, k).noalias() = cmap(g, m, n) * cmap(bv, k, n).transpose();
            t.accumulate(an, ga);
        }
        if (bn >= 0) {
            Tensor gb = Tensor::zeros(bv.shape());
            mmap(gb, k, n).noalias() = cmap(av, m, k).transpose() * cmap(g, m, n);
            t.accumulate(bn, gb);
        }
    };
    return finish(std::move(out), "matmul", tp, back);
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({c, r});
    mmap(out, c, r) = cmap(a, r, c).transpose();
    Tape* tp = joint_tape(a);
    if (tp == nullptr) return finish(std::move(out), "transpose", nullptr, {});
    const int an = a.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::zeros({r, c});
        mmap(ga, r, c) = cmap(g, c, r).transpose();
        t.accumulate(an, ga);
    };
    return finish(std::move(out), "transpose", tp, back);
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_ew(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_ew(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_ew(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double c) {
    return unary_ew(
        "scale", a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor shift(const Tensor& a, double c) {
    return unary_ew(
        "shift", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& a) {
    return unary_ew(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double v : a.data()) {
        if (v <= 0.0) throw DomainError("log: non-positive input " + std::to_string(v));
    }
    return unary_ew(
        "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    for (double v : a.data()) {
        if (v <= 0.0) throw DomainError("sqrt: non-positive input " + std::to_string(v));
    }
    return unary_ew(
        "sqrt", a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& a) {
    return unary_ew(
        "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sigmoid(const Tensor& a) {
    auto sig = [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    };
    return unary_ew("sigmoid", a, sig, [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& a) {
    auto sp = [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); };
    auto dsp = [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    };
    return unary_ew("softplus", a, sp, dsp);
}

Tensor leaky_relu(const Tensor& a, double slope) {
    return unary_ew(
        "leaky_relu", a, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor clamp_min(const Tensor& a, double floor) {
    return unary_ew(
        "clamp_min", a, [floor](double x) { return x < floor ? floor : x; },
        [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Tensor colwise_add(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1 || v.shape()[0] != m.rows()) {
        throw DimensionError("colwise_add: shapes " + shape_str(m.shape()) + " and " +
                             shape_str(v.shape()));
    }
    const std::size_t r = m.rows(), c = m.cols();
    Tensor out = m.detached();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) += v.data()[i];
    }
    Tape* tp = joint_tape(m, v);
    if (tp == nullptr) return finish(std::move(out), "colwise_add", nullptr, {});
    const int mn = m.node(), vn = v.node();
    auto back = [=](Tape& t, const Tensor& g) {
        if (mn >= 0) t.accumulate(mn, g);
        if (vn >= 0) {
            Tensor gv = Tensor::zeros({r});
            for (std::size_t i = 0; i < r; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < c; ++j) s += g(i, j);
                gv.raw()[i] = s;
            }
            t.accumulate(vn, gv);
        }
    };
    return finish(std::move(out), "colwise_add", tp, back);
}

Tensor colwise_mul(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1 || v.shape()[0] != m.rows()) {
        throw DimensionError("colwise_mul: shapes " + shape_str(m.shape()) + " and " +
                             shape_str(v.shape()));
    }
    const std::size_t r = m.rows(), c = m.cols();
    Tensor out = m.detached();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) *= v.data()[i];
    }
    Tape* tp = joint_tape(m, v);
    if (tp == nullptr) return finish(std::move(out), "colwise_mul", nullptr, {});
    const int mn = m.node(), vn = v.node();
    Tensor mv = m.detached(), vv = v.detached();
    auto back = [=](Tape& t, const Tensor& g) {
        if (mn >= 0) {
            Tensor gm = Tensor::zeros({r, c});
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) gm.at(i, j) = g(i, j) * vv.data()[i];
            }
            t.accumulate(mn, gm);
        }
        if (vn >= 0) {
            Tensor gv = Tensor::zeros({r});
            for (std::size_t i = 0; i < r; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < c; ++j) s += g(i, j) * mv(i, j);
                gv.raw()[i] = s;
            }
            t.accumulate(vn, gv);
        }
    };
    return finish(std::move(out), "colwise_mul", tp, back);
}

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out(s);
    Tape* tp = joint_tape(a);
    if (tp == nullptr) return finish(std::move(out), "sum", nullptr, {});
    const int an = a.node();
    Shape ashape = a.shape();
    auto back = [=](Tape& t, const Tensor& g) {
        t.accumulate(an, Tensor::full(ashape, g.value()));
    };
    return finish(std::move(out), "sum", tp, back);
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw DimensionError("mean of an empty tensor");
    const double n = static_cast<double>(a.size());
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor out(s / n);
    Tape* tp = joint_tape(a);
    if (tp == nullptr) return finish(std::move(out), "mean", nullptr, {});
    const int an = a.node();
    Shape ashape = a.shape();
    auto back = [=](Tape& t, const Tensor& g) {
        t.accumulate(an, Tensor::full(ashape, g.value() / n));
    };
    return finish(std::move(out), "mean", tp, back);
}

namespace {

Tensor axis_reduce(const char* op, const Tensor& a, std::size_t axis, bool take_mean) {
    if (a.rank() != 2) throw DimensionError(std::string(op) + ": axis form needs rank 2");
    if (axis > 1) throw DimensionError(std::string(op) + ": axis out of bounds");
    const std::size_t r = a.rows(), c = a.cols();
    const std::size_t out_len = (axis == 0) ? c : r;
    const double denom = take_mean ? static_cast<double>(axis == 0 ? r : c) : 1.0;
    Tensor out = Tensor::zeros({out_len});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out.raw()[axis == 0 ? j : i] += a(i, j);
        }
    }
    for (double& v : out.raw()) v /= denom;
    Tape* tp = joint_tape(a);
    if (tp == nullptr) return finish(std::move(out), op, nullptr, {});
    const int an = a.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor ga = Tensor::zeros({r, c});
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                ga.at(i, j) = g.data()[axis == 0 ? j : i] / denom;
            }
        }
        t.accumulate(an, ga);
    };
    return finish(std::move(out), op, tp, back);
}

}  // namespace

Tensor sum(const Tensor& a, std::size_t axis) { return axis_reduce("sum", a, axis, false); }
Tensor mean(const Tensor& a, std::size_t axis) { return axis_reduce("mean", a, axis, true); }

Tensor logsumexp_rows(const Tensor& m) {
    const std::size_t r = m.rows(), c = m.cols();
    if (c == 0) throw DimensionError("logsumexp_rows: empty rows");
    Tensor out = Tensor::zeros({r});
    Tensor soft = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        double mx = m(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, m(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(m(i, j) - mx);
        out.raw()[i] = mx + std::log(s);
        for (std::size_t j = 0; j < c; ++j) soft.at(i, j) = std::exp(m(i, j) - mx) / s;
    }
    Tape* tp = joint_tape(m);
    if (tp == nullptr) return finish(std::move(out), "logsumexp_rows", nullptr, {});
    const int mn = m.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor gm = Tensor::zeros({r, c});
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gm.at(i, j) = g.data()[i] * soft(i, j);
        }
        t.accumulate(mn, gm);
    };
    return finish(std::move(out), "logsumexp_rows", tp, back);
}

// ---- structural ------------------------------------------------------------

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows()) {
        throw DimensionError("concat_cols: shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
    Tensor out = Tensor::zeros({r, ca + cb});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = a(i, j);
        for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = b(i, j);
    }
    Tape* tp = joint_tape(a, b);
    if (tp == nullptr) return finish(std::move(out), "concat_cols", nullptr, {});
    const int an = a.node(), bn = b.node();
    auto back = [=](Tape& t, const Tensor& g) {
        if (an >= 0) {
            Tensor ga = Tensor::zeros({r, ca});
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < ca; ++j) ga.at(i, j) = g(i, j);
            t.accumulate(an, ga);
        }
        if (bn >= 0) {
            Tensor gb = Tensor::zeros({r, cb});
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < cb; ++j) gb.at(i, j) = g(i, ca + j);
            t.accumulate(bn, gb);
        }
    };
    return finish(std::move(out), "concat_cols", tp, back);
}

Tensor tile_rows(const Tensor& v, std::size_t n) {
    if (v.rank() != 1) throw DimensionError("tile_rows: need a vector");
    const std::size_t d = v.shape()[0];
    Tensor out = Tensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) = v.data()[j];
    Tape* tp = joint_tape(v);
    if (tp == nullptr) return finish(std::move(out), "tile_rows", nullptr, {});
    const int vn = v.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor gv = Tensor::zeros({d});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) gv.raw()[j] += g(i, j);
        t.accumulate(vn, gv);
    };
    return finish(std::move(out), "tile_rows", tp, back);
}

Tensor tile_vertical(const Tensor& m, std::size_t k) {
    const std::size_t r = m.rows(), c = m.cols();
    Tensor out = Tensor::zeros({k * r, c});
    for (std::size_t b = 0; b < k; ++b) {
        std::copy(m.data().begin(), m.data().end(), out.raw().begin() + b * r * c);
    }
    Tape* tp = joint_tape(m);
    if (tp == nullptr) return finish(std::move(out), "tile_vertical", nullptr, {});
    const int mn = m.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor gm = Tensor::zeros({r, c});
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t i = 0; i < r * c; ++i) gm.raw()[i] += g.data()[b * r * c + i];
        }
        t.accumulate(mn, gm);
    };
    return finish(std::move(out), "tile_vertical", tp, back);
}

Tensor repeat_each_row(const Tensor& m, std::size_t k) {
    const std::size_t r = m.rows(), c = m.cols();
    Tensor out = Tensor::zeros({r * k, c});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t t = 0; t < k; ++t) {
            std::copy(m.data().begin() + i * c, m.data().begin() + (i + 1) * c,
                      out.raw().begin() + (i * k + t) * c);
        }
    }
    Tape* tp = joint_tape(m);
    if (tp == nullptr) return finish(std::move(out), "repeat_each_row", nullptr, {});
    const int mn = m.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor gm = Tensor::zeros({r, c});
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t rep = 0; rep < k; ++rep) {
                for (std::size_t j = 0; j < c; ++j) gm.at(i, j) += g(i * k + rep, j);
            }
        }
        t.accumulate(mn, gm);
    };
    return finish(std::move(out), "repeat_each_row", tp, back);
}

Tensor slice_rows(const Tensor& m, std::size_t start, std::size_t count) {
    const std::size_t r = m.rows(), c = m.cols();
    if (start + count > r) throw DimensionError("slice_rows: range out of bounds");
    Tensor out = Tensor::zeros({count, c});
    std::copy(m.data().begin() + start * c, m.data().begin() + (start + count) * c,
              out.raw().begin());
    Tape* tp = joint_tape(m);
    if (tp == nullptr) return finish(std::move(out), "slice_rows", nullptr, {});
    const int mn = m.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor gm = Tensor::zeros({r, c});
        std::copy(g.data().begin(), g.data().end(), gm.raw().begin() + start * c);
        t.accumulate(mn, gm);
    };
    return finish(std::move(out), "slice_rows", tp, back);
}

Tensor diagonal(const Tensor& m) {
    const std::size_t n = m.rows();
    if (m.cols() != n) throw DimensionError("diagonal: need a square matrix");
    Tensor out = Tensor::zeros({n});
    for (std::size_t i = 0; i < n; ++i) out.raw()[i] = m(i, i);
    Tape* tp = joint_tape(m);
    if (tp == nullptr) return finish(std::move(out), "diagonal", nullptr, {});
    const int mn = m.node();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor gm = Tensor::zeros({n, n});
        for (std::size_t i = 0; i < n; ++i) gm.at(i, i) = g.data()[i];
        t.accumulate(mn, gm);
    };
    return finish(std::move(out), "diagonal", tp, back);
}

// ---- factorizations --------------------------------------------------------

Tensor cholesky(const Tensor& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("cholesky: need a square matrix");
    Tensor l = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (!(s > 0.0)) {
                    throw NotPositiveDefiniteError(
                        "cholesky: non-positive pivot " + std::to_string(s) + " at row " +
                        std::to_string(i));
                }
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l(j, j);
            }
        }
    }
    Tape* tp = joint_tape(a);
    if (tp == nullptr) return finish(std::move(l), "cholesky", nullptr, {});
    const int an = a.node();
    Tensor lv = l.detached();
    auto back = [=](Tape& t, const Tensor& g) {
        // Standard reverse-mode Cholesky: P = phi(L^T Gl) with the diagonal
        // halved, then A_bar = sym(L^{-T} P L^{-1}).
        const auto L = cmap(lv, n, n);
        const Tensor gl_t = lower_masked(g);
        MatRM p = L.transpose() * cmap(gl_t, n, n);
        for (std::size_t i = 0; i < n; ++i) {
            p(i, i) *= 0.5;
            for (std::size_t j = i + 1; j < n; ++j) p(i, j) = 0.0;
        }
        MatRM w = L.triangularView<Eigen::Lower>().transpose().solve(p);
        MatRM sbar_t = L.triangularView<Eigen::Lower>().transpose().solve(w.transpose());
        MatRM sym = 0.5 * (sbar_t.transpose() + sbar_t);
        Tensor ga = Tensor::zeros({n, n});
        mmap(ga, n, n) = sym;
        t.accumulate(an, ga);
    };
    return finish(std::move(l), "cholesky", tp, back);
}

Tensor tri_solve(const Tensor& l, const Tensor& b, bool transpose_l) {
    const std::size_t n = l.rows();
    if (l.cols() != n) throw DimensionError("tri_solve: factor must be square");
    for (std::size_t i = 0; i < n; ++i) {
        if (l(i, i) == 0.0) {
            throw SingularMatrixError("tri_solve: zero diagonal entry at row " +
                                      std::to_string(i));
        }
    }
    const bool vec_rhs = (b.rank() == 1);
    const std::size_t bc = vec_rhs ? 1 : b.cols();
    const std::size_t br = vec_rhs ? b.shape()[0] : b.rows();
    if (br != n) {
        throw DimensionError("tri_solve: rhs shape " + shape_str(b.shape()) +
                             " does not match factor " + shape_str(l.shape()));
    }
    Tensor out = Tensor::zeros(b.shape());
    {
        const auto L = cmap(l, n, n);
        auto x = mmap(out, n, bc);
        if (transpose_l) {
            x = L.triangularView<Eigen::Lower>().transpose().solve(cmap(b, n, bc));
        } else {
            x = L.triangularView<Eigen::Lower>().solve(cmap(b, n, bc));
        }
    }
    Tape* tp = joint_tape(l, b);
    if (tp == nullptr) return finish(std::move(out), "tri_solve", nullptr, {});
    const int ln = l.node(), bn = b.node();
    Tensor lv = l.detached(), xv = out.detached();
    auto back = [=](Tape& t, const Tensor& g) {
        const auto L = cmap(lv, n, n);
        Tensor gb = Tensor::zeros(g.shape());
        if (transpose_l) {
            mmap(gb, n, bc) = L.triangularView<Eigen::Lower>().solve(cmap(g, n, bc));
        } else {
            mmap(gb, n, bc) = L.triangularView<Eigen::Lower>().transpose().solve(cmap(g, n, bc));
        }
        if (bn >= 0) t.accumulate(bn, gb);
        if (ln >= 0) {
            Tensor gl = Tensor::zeros({n, n});
            if (transpose_l) {
                mmap(gl, n, n).noalias() = -cmap(xv, n, bc) * cmap(gb, n, bc).transpose();
            } else {
                mmap(gl, n, n).noalias() = -cmap(gb, n, bc) * cmap(xv, n, bc).transpose();
            }
            t.accumulate(ln, lower_masked(gl));
        }
    };
    return finish(std::move(out), "tri_solve", tp, back);
}

Tensor lower_tri_softplus_diag(const Tensor& raw) {
    const std::size_t n = raw.rows();
    if (raw.cols() != n) throw DimensionError("lower_tri_softplus_diag: need a square matrix");
    auto sp = [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); };
    auto sig = [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    };
    Tensor out = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) out.at(i, j) = raw(i, j);
        out.at(i, i) = sp(raw(i, i));
    }
    Tape* tp = joint_tape(raw);
    if (tp == nullptr) return finish(std::move(out), "lower_tri_softplus_diag", nullptr, {});
    const int rn = raw.node();
    Tensor rv = raw.detached();
    auto back = [=](Tape& t, const Tensor& g) {
        Tensor gr = Tensor::zeros({n, n});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < i; ++j) gr.at(i, j) = g(i, j);
            gr.at(i, i) = g(i, i) * sig(rv(i, i));
        }
        t.accumulate(rn, gr);
    };
    return finish(std::move(out), "lower_tri_softplus_diag", tp, back);
}

void backward(Tape& tape, const Tensor& loss) { tape.backward(loss); }

}  // namespace ipvi
