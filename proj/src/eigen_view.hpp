#pragma once

#include <Eigen/Dense>

#include "mstgnn/tensor.hpp"

namespace mstgnn::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMatrix>;
using ConstMatrixView = Eigen::Map<const RowMatrix>;

inline MatrixView view(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatrixView(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline ConstMatrixView view(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixView(t.data(), static_cast<Eigen::Index>(rows),
                         static_cast<Eigen::Index>(cols));
}

inline MatrixView view(Tensor& t) { return view(t, t.dim(0), t.dim(1)); }
inline ConstMatrixView view(const Tensor& t) { return view(t, t.dim(0), t.dim(1)); }

}  // namespace mstgnn::detail
