#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace must {

Tensor Tensor::matrix(size_t rows, size_t cols, std::vector<double> v) {
  if (v.size() != rows * cols) {
    fail(Errc::shape, "matrix data length " + std::to_string(v.size()) + " != " +
                          std::to_string(rows) + "x" + std::to_string(cols));
  }
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.ndim_ = 2;
  t.data_ = std::move(v);
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Tensor Tensor::row(size_t i) const {
  Tensor t(cols_);
  std::copy(data_.begin() + i * cols_, data_.begin() + (i + 1) * cols_, t.data_.begin());
  return t;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b)) {
    fail(Errc::shape, std::string(where) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
  }
}

}  // namespace must
