#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "signet/errors.hpp"

namespace signet {

class Rng;

// Dense row-major array of doubles. Shapes are value semantics; all layers,
// transforms and gradients flow through this one type.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor ones(std::vector<std::size_t> shape) { return full(std::move(shape), 1.0); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    // 2D convenience from nested initializer lists (tests, fixtures)
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::initializer_list<double> v);
    static Tensor random_uniform(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                                 double hi = 1.0);
    static Tensor random_normal(std::vector<std::size_t> shape, Rng& rng, double mean = 0.0,
                                double stddev = 1.0);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // rank/shape change over the same data, row-major order preserved
    Tensor reshaped(std::vector<std::size_t> shape) const;

    bool all_finite() const;

    double sum() const;
    double min() const;
    double max() const;
    double abs_max() const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator*=(double s);

    std::string shape_str() const;

    static std::string shape_str(const std::vector<std::size_t>& shape);

    static void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Plain matrix product for oracles and transform code paths that do not need
// a tape. A is m-by-k, B is k-by-n.
Tensor matmul(const Tensor& a, const Tensor& b);

// B transposed variant: A (m-by-k) times B^T where B is n-by-k.
Tensor matmul_bt(const Tensor& a, const Tensor& b);

// A transposed variant: A^T (k-by-m becomes m rows) times B.
Tensor matmul_at(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

}  // namespace signet
