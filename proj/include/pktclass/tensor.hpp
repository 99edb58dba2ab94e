#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pktclass {

// Dense rank-1/2/3 array of 64-bit reals, row-major.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        if (shape_.empty() || shape_.size() > 3)
            throw std::invalid_argument("Tensor: rank must be 1..3");
        int64_t n = 1;
        for (int d : shape_) {
            if (d <= 0) throw std::invalid_argument("Tensor: dimensions must be positive");
            n *= d;
        }
        data_.assign(static_cast<size_t>(n), 0.0);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    double& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_string() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

}  // namespace pktclass
