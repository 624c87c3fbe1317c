#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ipvi/errors.hpp"

namespace ipvi {

class Tape;

/// Row-major extents. Scalars have an empty shape, vectors {n}, matrices {r, c}.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense 64-bit real tensor. Values are held by value (copying a Tensor copies
/// its data). A tensor may carry a handle to a node on a gradient tape; all
/// arithmetic in ops.hpp records itself on the tape of its operands.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data);
    /// Scalar constructor (empty shape, one element).
    explicit Tensor(double value);

    static Tensor zeros(const Shape& shape);
    static Tensor ones(const Shape& shape);
    static Tensor full(const Shape& shape, double value);
    static Tensor eye(std::size_t n);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }
    bool is_scalar() const { return shape_.empty(); }
    std::size_t rows() const;
    std::size_t cols() const;

    /// Scalar extraction; requires size() == 1.
    double value() const;

    double operator()(std::size_t i) const;
    double operator()(std::size_t i, std::size_t j) const;
    double& at(std::size_t i);
    double& at(std::size_t i, std::size_t j);

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& raw() { return data_; }

    bool on_tape() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    int node() const { return node_; }

    /// Copy of the value with no tape link.
    Tensor detached() const;

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string str() const;

private:
    friend class Tape;
    void bind(Tape* tape, int node) {
        tape_ = tape;
        node_ = node;
    }

    Shape shape_;
    std::vector<double> data_;
    Tape* tape_ = nullptr;
    int node_ = -1;
};

}  // namespace ipvi
