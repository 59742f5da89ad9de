#pragma once

#include <cstddef>
#include <vector>

namespace must {

// Dense row-major array of doubles, rank 1 or 2. All the math in this
// project runs on these; 32-bit floats appear only at file boundaries.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(size_t n) : rows_(n), cols_(1), ndim_(1), data_(n, 0.0) {}
  Tensor(size_t rows, size_t cols) : rows_(rows), cols_(cols), ndim_(2), data_(rows * cols, 0.0) {}

  static Tensor vector(std::vector<double> v) {
    Tensor t;
    t.rows_ = v.size();
    t.cols_ = 1;
    t.ndim_ = 1;
    t.data_ = std::move(v);
    return t;
  }

  static Tensor matrix(size_t rows, size_t cols, std::vector<double> v);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  int ndim() const { return ndim_; }
  size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(size_t i, size_t j) { return data_[i * cols_ + j]; }
  double at(size_t i, size_t j) const { return data_[i * cols_ + j]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && ndim_ == o.ndim_;
  }

  Tensor zeros_like() const {
    Tensor t = *this;
    std::fill(t.data_.begin(), t.data_.end(), 0.0);
    return t;
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const;

  // Extracts row i as a rank-1 tensor.
  Tensor row(size_t i) const;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  int ndim_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace must
