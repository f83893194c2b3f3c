#include "egsage/matrix.hpp"

#include <cmath>
#include <sstream>

#include "egsage/errors.hpp"

namespace egsage {

namespace {

[[noreturn]] void throw_shape_error(const char* op, const Matrix& a, const Matrix& b) {
    std::ostringstream msg;
    msg << op << ": incompatible shapes " << a.shape_string() << " and " << b.shape_string();
    throw DimensionError(msg.str());
}

} // namespace

auto Matrix::filled(std::size_t rows, std::size_t cols, double value) -> Matrix {
    Matrix m(rows, cols);
    for (auto& x : m.data_) {
        x = value;
    }
    return m;
}

auto Matrix::from_rows(const std::vector<std::vector<double>>& rows) -> Matrix {
    if (rows.empty()) {
        return {};
    }
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols_) {
            throw DimensionError("Matrix::from_rows: ragged input rows");
        }
        for (std::size_t c = 0; c < m.cols_; ++c) {
            m(r, c) = rows[r][c];
        }
    }
    return m;
}

auto Matrix::shape_string() const -> std::string {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

auto Matrix::all_finite() const -> bool {
    for (double x : data_) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

auto matmul(const Matrix& a, const Matrix& b, bool transpose_a, bool transpose_b) -> Matrix {
    const std::size_t out_rows = transpose_a ? a.cols() : a.rows();
    const std::size_t inner_a = transpose_a ? a.rows() : a.cols();
    const std::size_t inner_b = transpose_b ? b.cols() : b.rows();
    const std::size_t out_cols = transpose_b ? b.rows() : b.cols();
    if (inner_a != inner_b) {
        throw_shape_error("matmul", a, b);
    }
    Matrix out(out_rows, out_cols);
    if (!transpose_a && !transpose_b) {
        // i-k-j order streams both operands row-major.
        for (std::size_t i = 0; i < out_rows; ++i) {
            for (std::size_t k = 0; k < inner_a; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < out_cols; ++j) {
                    out(i, j) += aik * b(k, j);
                }
            }
        }
    } else if (!transpose_a && transpose_b) {
        for (std::size_t i = 0; i < out_rows; ++i) {
            for (std::size_t j = 0; j < out_cols; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < inner_a; ++k) {
                    acc += a(i, k) * b(j, k);
                }
                out(i, j) = acc;
            }
        }
    } else if (transpose_a && !transpose_b) {
        for (std::size_t k = 0; k < inner_a; ++k) {
            for (std::size_t i = 0; i < out_rows; ++i) {
                const double aki = a(k, i);
                if (aki == 0.0) {
                    continue;
                }
                for (std::size_t j = 0; j < out_cols; ++j) {
                    out(i, j) += aki * b(k, j);
                }
            }
        }
    } else {
        for (std::size_t i = 0; i < out_rows; ++i) {
            for (std::size_t j = 0; j < out_cols; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < inner_a; ++k) {
                    acc += a(k, i) * b(j, k);
                }
                out(i, j) = acc;
            }
        }
    }
    return out;
}

auto add(const Matrix& a, const Matrix& b) -> Matrix {
    if (!a.same_shape(b)) {
        throw_shape_error("add", a, b);
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] + b.data()[i];
    }
    return out;
}

auto concat_cols(const Matrix& a, const Matrix& b) -> Matrix {
    if (a.rows() != b.rows()) {
        throw_shape_error("concat_cols", a, b);
    }
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            out(r, c) = a(r, c);
        }
        for (std::size_t c = 0; c < b.cols(); ++c) {
            out(r, a.cols() + c) = b(r, c);
        }
    }
    return out;
}

auto relu(const Matrix& a) -> Matrix {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    }
    return out;
}

auto log_softmax_rows(const Matrix& a) -> Matrix {
    if (a.cols() == 0) {
        throw DimensionError("log_softmax: input has zero columns");
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double row_max = a(r, 0);
        for (std::size_t c = 1; c < a.cols(); ++c) {
            row_max = std::max(row_max, a(r, c));
        }
        double total = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) {
            total += std::exp(a(r, c) - row_max);
        }
        const double log_total = std::log(total);
        for (std::size_t c = 0; c < a.cols(); ++c) {
            out(r, c) = a(r, c) - row_max - log_total;
        }
    }
    return out;
}

auto transpose(const Matrix& a) -> Matrix {
    Matrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            out(c, r) = a(r, c);
        }
    }
    return out;
}

auto scale(const Matrix& a, double factor) -> Matrix {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] * factor;
    }
    return out;
}

auto hadamard(const Matrix& a, const Matrix& b) -> Matrix {
    if (!a.same_shape(b)) {
        throw_shape_error("hadamard", a, b);
    }
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] * b.data()[i];
    }
    return out;
}

auto sum(const Matrix& a) -> double {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a.data()[i];
    }
    return acc;
}

} // namespace egsage
