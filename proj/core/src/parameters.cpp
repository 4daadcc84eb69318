#include "screencorr/parameters.hpp"

namespace screencorr {

std::size_t ParameterLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols, bool decay) {
  tensors_.push_back({std::move(name), rows, cols, total_, decay});
  total_ += static_cast<std::size_t>(rows * cols);
  return tensors_.size() - 1;
}

std::optional<std::size_t> ParameterLayout::find(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

bool ParameterLayout::operator==(const ParameterLayout& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& a = tensors_[i];
    const auto& b = other.tensors_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols || a.decay != b.decay) return false;
  }
  return true;
}

}  // namespace screencorr
