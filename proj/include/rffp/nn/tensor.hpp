#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "rffp/errors.hpp"

// Dense row-major tensors (rank 1..3) and the small GEMM kernels the layers
// are built on. Scalar type T is float for production training and double for
// gradient verification.

namespace rffp::nn {

struct Shape {
    std::array<std::size_t, 3> dims{1, 1, 1};
    int rank = 0;

    static Shape of(std::size_t a) { return {{a, 1, 1}, 1}; }
    static Shape of(std::size_t a, std::size_t b) { return {{a, b, 1}, 2}; }
    static Shape of(std::size_t a, std::size_t b, std::size_t c) { return {{a, b, c}, 3}; }

    std::size_t numel() const {
        std::size_t n = 1;
        for (int i = 0; i < rank; ++i) n *= dims[static_cast<std::size_t>(i)];
        return n;
    }
    bool operator==(const Shape& o) const { return rank == o.rank && dims == o.dims; }
};

template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(s), data(s.numel(), T(0)) {}

    std::size_t numel() const { return data.size(); }

    T& at(std::size_t i) { return data[i]; }
    T& at(std::size_t i, std::size_t j) { return data[i * shape.dims[1] + j]; }
    T& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape.dims[1] + j) * shape.dims[2] + k];
    }
    const T& at(std::size_t i) const { return data[i]; }
    const T& at(std::size_t i, std::size_t j) const { return data[i * shape.dims[1] + j]; }
    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape.dims[1] + j) * shape.dims[2] + k];
    }

    // Reinterpret without moving data; product of dims must match.
    Tensor<T> reshaped(Shape s) const {
        if (s.numel() != numel()) errors::shape("reshape element count mismatch");
        Tensor<T> out;
        out.shape = s;
        out.data = data;
        return out;
    }
};

// C(m x n) += A(m x k) * B(k x n); lda/ldb/ldc are row strides so column
// blocks of a wider matrix can be addressed in place.
template <typename T>
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                    const T* b, std::size_t ldb, T* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * lda;
        T* crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(m x n) += A(m x k) * B(n x k)^T.
template <typename T>
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                    const T* b, std::size_t ldb, T* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * lda;
        T* crow = c + i * ldc;
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = b + j * ldb;
            T acc = T(0);
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C(k x n) += A(m x k)^T * B(m x n).
template <typename T>
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                    const T* b, std::size_t ldb, T* c, std::size_t ldc) {
    for (std::size_t p = 0; p < m; ++p) {
        const T* arow = a + p * lda;
        const T* brow = b + p * ldb;
        for (std::size_t i = 0; i < k; ++i) {
            const T av = arow[i];
            T* crow = c + i * ldc;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace rffp::nn
