#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace screencorr {

/// Named slice of a flat parameter buffer.
struct TensorSpec {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;
  /// Weight decay applies only to weight matrices, never to biases or norm gains.
  bool decay = false;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

class ParameterLayout {
 public:
  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols, bool decay);

  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  const TensorSpec& operator[](std::size_t i) const { return tensors_[i]; }
  std::size_t total_size() const { return total_; }
  std::optional<std::size_t> find(std::string_view name) const;

  bool operator==(const ParameterLayout&) const;

 private:
  std::vector<TensorSpec> tensors_;
  std::size_t total_ = 0;
};

using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;

inline MatrixMap tensor_view(std::span<double> buffer, const TensorSpec& t) {
  return MatrixMap(buffer.data() + t.offset, t.rows, t.cols);
}
inline ConstMatrixMap tensor_view(std::span<const double> buffer, const TensorSpec& t) {
  return ConstMatrixMap(buffer.data() + t.offset, t.rows, t.cols);
}

}  // namespace screencorr
