#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace egsage {

// Dense row-major matrix of doubles. The only storage type used by the
// numeric core; vectors are 1xN or Nx1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static auto filled(std::size_t rows, std::size_t cols, double value) -> Matrix;
    static auto from_rows(const std::vector<std::vector<double>>& rows) -> Matrix;

    auto rows() const -> std::size_t { return rows_; }
    auto cols() const -> std::size_t { return cols_; }
    auto size() const -> std::size_t { return data_.size(); }
    auto empty() const -> bool { return data_.empty(); }

    auto operator()(std::size_t r, std::size_t c) -> double& { return data_[r * cols_ + c]; }
    auto operator()(std::size_t r, std::size_t c) const -> double { return data_[r * cols_ + c]; }

    auto data() -> double* { return data_.data(); }
    auto data() const -> const double* { return data_.data(); }
    auto values() const -> const std::vector<double>& { return data_; }

    auto same_shape(const Matrix& other) const -> bool {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    auto shape_string() const -> std::string;

    auto all_finite() const -> bool;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Forward kernels shared by the tape and by plain inference. All of them
// throw DimensionError on operand mismatch, naming both shapes.

// op(a) * op(b) where op transposes when the matching flag is set.
auto matmul(const Matrix& a, const Matrix& b, bool transpose_a = false, bool transpose_b = false)
    -> Matrix;
auto add(const Matrix& a, const Matrix& b) -> Matrix;
auto concat_cols(const Matrix& a, const Matrix& b) -> Matrix;
auto relu(const Matrix& a) -> Matrix;
// Row-wise log softmax, computed against the row maximum for stability.
auto log_softmax_rows(const Matrix& a) -> Matrix;
auto transpose(const Matrix& a) -> Matrix;
auto scale(const Matrix& a, double factor) -> Matrix;
auto hadamard(const Matrix& a, const Matrix& b) -> Matrix;
auto sum(const Matrix& a) -> double;

} // namespace egsage
