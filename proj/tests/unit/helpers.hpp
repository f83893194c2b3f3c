#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "egsage/matrix.hpp"
#include "egsage/rng.hpp"

namespace egsage::testing {

// Scratch directory removed at scope exit.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<std::uint64_t> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 1000; ++attempt) {
            auto candidate =
                base / ("egsage_test_" + std::to_string(counter.fetch_add(1)) + "_" +
                        std::to_string(attempt));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = std::move(candidate);
                return;
            }
        }
        throw std::runtime_error("TempDir: could not create a scratch directory");
    }

    TempDir(const TempDir&) = delete;
    auto operator=(const TempDir&) -> TempDir& = delete;

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    auto file(const std::string& name) const -> std::filesystem::path { return path / name; }
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("write_text: cannot open " + path.string());
    }
    out << content;
}

inline auto read_bytes(const std::filesystem::path& path) -> std::string {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_bytes: cannot open " + path.string());
    }
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline auto random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0)
    -> Matrix {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.uniform(-scale, scale);
    }
    return m;
}

inline auto max_abs_diff(const Matrix& a, const Matrix& b) -> double {
    if (!a.same_shape(b)) {
        return 1e300;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a.values()[i] - b.values()[i];
        worst = std::max(worst, diff < 0 ? -diff : diff);
    }
    return worst;
}

} // namespace egsage::testing
