#pragma once

#include <span>

#include <Eigen/Dense>

namespace metashap {

// Row-major so that each encoded configuration is a contiguous span.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(RowMatrix& m, Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

} // namespace metashap
