#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ccpop {

/// Dense row-major (rows x cols) array of doubles.
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  double& at(std::size_t r, std::size_t c) {
    check(r, c);
    return data_[r * cols_ + c];
  }
  double at(std::size_t r, std::size_t c) const {
    check(r, c);
    return data_[r * cols_ + c];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  void check(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) throw std::out_of_range("Array2 index");
  }
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense (n0 x n1 x n2) array with layout idx = (i0*n1 + i1)*n2 + i2.
/// Model quantities use the (age, time, region) axis order.
class Array3 {
 public:
  Array3() = default;
  Array3(std::size_t n0, std::size_t n1, std::size_t n2, double fill = 0.0)
      : n0_(n0), n1_(n1), n2_(n2), data_(n0 * n1 * n2, fill) {}

  double& operator()(std::size_t i0, std::size_t i1, std::size_t i2) {
    return data_[(i0 * n1_ + i1) * n2_ + i2];
  }
  double operator()(std::size_t i0, std::size_t i1, std::size_t i2) const {
    return data_[(i0 * n1_ + i1) * n2_ + i2];
  }

  std::size_t dim0() const { return n0_; }
  std::size_t dim1() const { return n1_; }
  std::size_t dim2() const { return n2_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t n0_ = 0;
  std::size_t n1_ = 0;
  std::size_t n2_ = 0;
  std::vector<double> data_;
};

}  // namespace ccpop
