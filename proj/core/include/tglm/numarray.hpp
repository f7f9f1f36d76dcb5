#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "tglm/error.hpp"

namespace tglm {

// Dense row-major tensor. Carries parameters, activations, and gradients for
// every model in the repository. Math on the contents goes through the Eigen
// map views; the class itself only owns shape + storage.
template <typename T>
class NumArray {
 public:
  using Scalar = T;
  using MatrixMap =
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatrixMap = Eigen::Map<
      const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using VectorMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
  using ConstVectorMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

  NumArray() = default;

  explicit NumArray(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(checked_count(shape_)), T(0));
  }

  NumArray(std::initializer_list<std::int64_t> shape)
      : NumArray(std::vector<std::int64_t>(shape)) {}

  static NumArray zeros(std::vector<std::int64_t> shape) {
    return NumArray(std::move(shape));
  }

  static NumArray full(std::vector<std::int64_t> shape, T value) {
    NumArray a(std::move(shape));
    std::fill(a.data_.begin(), a.data_.end(), value);
    return a;
  }

  static NumArray from(std::vector<std::int64_t> shape, std::vector<T> values) {
    NumArray a;
    a.shape_ = std::move(shape);
    TGLM_CHECK_ARG(checked_count(a.shape_) ==
                       static_cast<std::int64_t>(values.size()),
                   "NumArray: value count does not match shape");
    a.data_ = std::move(values);
    return a;
  }

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }

  // Row-major 2-D access.
  T& at(std::int64_t r, std::int64_t c) {
    return data_[static_cast<std::size_t>(r * shape_.back() + c)];
  }
  const T& at(std::int64_t r, std::int64_t c) const {
    return data_[static_cast<std::size_t>(r * shape_.back() + c)];
  }

  void set_zero() { std::fill(data_.begin(), data_.end(), T(0)); }

  void reshape(std::vector<std::int64_t> shape) {
    TGLM_CHECK_ARG(checked_count(shape) == size(),
                   "NumArray::reshape: element count mismatch");
    shape_ = std::move(shape);
  }

  // Whole storage viewed as rows x cols (row-major). rows*cols must cover
  // the full buffer; callers slice batches by mapping sub-ranges themselves.
  MatrixMap mat(std::int64_t rows, std::int64_t cols) {
    TGLM_CHECK_ARG(rows * cols == size(), "NumArray::mat: bad view shape");
    return MatrixMap(data(), rows, cols);
  }
  ConstMatrixMap mat(std::int64_t rows, std::int64_t cols) const {
    TGLM_CHECK_ARG(rows * cols == size(), "NumArray::mat: bad view shape");
    return ConstMatrixMap(data(), rows, cols);
  }
  // 2-D tensors viewed with their own shape.
  MatrixMap mat() { return mat(shape_.at(0), shape_.at(1)); }
  ConstMatrixMap mat() const { return mat(shape_.at(0), shape_.at(1)); }

  VectorMap vec() { return VectorMap(data(), size()); }
  ConstVectorMap vec() const { return ConstVectorMap(data(), size()); }

  bool all_finite() const {
    for (const T& v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  void check_finite(const std::string& context) const {
    if (!all_finite()) throw NumericError(context + ": non-finite values");
  }

 private:
  static std::int64_t checked_count(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (std::int64_t d : shape) {
      TGLM_CHECK_ARG(d >= 0, "NumArray: negative dimension");
      n *= d;
    }
    return n;
  }

  std::vector<std::int64_t> shape_;
  std::vector<T> data_;
};

using ArrayF = NumArray<float>;
using ArrayD = NumArray<double>;

}  // namespace tglm
