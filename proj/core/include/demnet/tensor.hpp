#ifndef DEMNET_TENSOR_HPP
#define DEMNET_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace demnet {

/// Dense row-major real tensor of rank 1..4. All layer inputs, parameters
/// and gradients are carried by this type. Element type is double; raster
/// file payloads are float32 and get widened on load.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor. Extents must all be >= 1, rank 1..4.
  explicit Tensor(std::vector<int> shape);
  Tensor(std::initializer_list<int> shape);

  /// Takes ownership of `data`; product(shape) must equal data.size().
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other);

  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// (row, col) access for rank-2 tensors.
  double& at(int i, int j) {
    return data_[static_cast<std::size_t>(i) * shape_[1] + j];
  }
  double at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * shape_[1] + j];
  }

  /// (row, col, channel) access for rank-3 tensors: data[(i*W + j)*C + c].
  double& at(int i, int j, int c) {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + c];
  }
  double at(int i, int j, int c) const {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + c];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double value);

  /// True when every element is finite.
  bool all_finite() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// Human-readable "(a, b, c)" form used in error messages.
std::string shape_str(const std::vector<int>& shape);

}  // namespace demnet

#endif  // DEMNET_TENSOR_HPP
