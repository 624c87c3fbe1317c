#include "ipvi/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ipvi {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
    }
}

Tensor::Tensor(double value) : shape_{}, data_{value} {}

Tensor Tensor::zeros(const Shape& shape) {
    return Tensor(shape, std::vector<double>(shape_size(shape), 0.0));
}

Tensor Tensor::ones(const Shape& shape) {
    return Tensor(shape, std::vector<double>(shape_size(shape), 1.0));
}

Tensor Tensor::full(const Shape& shape, double value) {
    return Tensor(shape, std::vector<double>(shape_size(shape), value));
}

Tensor Tensor::eye(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::vector(std::vector<double> values) {
    Shape s{values.size()};
    return Tensor(std::move(s), std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows() on tensor of shape " + shape_str(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols() on tensor of shape " + shape_str(shape_));
    return shape_[1];
}

double Tensor::value() const {
    if (size() != 1) {
        throw ContractError("value() requires a single-element tensor, got shape " +
                            shape_str(shape_));
    }
    return data_[0];
}

double Tensor::operator()(std::size_t i) const {
    if (rank() != 1) throw DimensionError("1-d indexing on shape " + shape_str(shape_));
    return data_[i];
}

double Tensor::operator()(std::size_t i, std::size_t j) const {
    if (rank() != 2) throw DimensionError("2-d indexing on shape " + shape_str(shape_));
    return data_[i * shape_[1] + j];
}

double& Tensor::at(std::size_t i) {
    if (rank() > 1) throw DimensionError("1-d indexing on shape " + shape_str(shape_));
    return data_[i];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    if (rank() != 2) throw DimensionError("2-d indexing on shape " + shape_str(shape_));
    return data_[i * shape_[1] + j];
}

Tensor Tensor::detached() const {
    Tensor t;
    t.shape_ = shape_;
    t.data_ = data_;
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::str() const {
    std::ostringstream os;
    os << shape_str(shape_) << '{';
    const std::size_t show = data_.size() < 8 ? data_.size() : 8;
    for (std::size_t i = 0; i < show; ++i) {
        if (i) os << ", ";
        os << data_[i];
    }
    if (show < data_.size()) os << ", ...";
    os << '}';
    return os.str();
}

}  // namespace ipvi
