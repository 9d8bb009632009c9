#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace latentga {

/// Dense rank-1 or rank-2 array of 64-bit floats, row-major.
///
/// Tensors are plain values: copy freely, share across readers. Every
/// public operation that returns a Tensor keeps product(shape) equal to
/// data.size() and produces finite elements from finite inputs.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::size_t n);
    static Tensor zeros(std::size_t rows, std::size_t cols);
    static Tensor from(std::vector<double> values);                   // rank-1
    static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor identity(std::size_t n);

    std::size_t rank() const { return shape.size(); }
    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : shape[0]) : shape[1]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    /// Pointer to the start of row r (rank-2 only).
    double* row(std::size_t r) { return data.data() + r * shape[1]; }
    const double* row(std::size_t r) const { return data.data() + r * shape[1]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    std::string shape_str() const;
};

/// Number of row-partition threads used by matmul kernels. 1 = fully
/// sequential. Results are identical for any value: threads own disjoint
/// output rows and each element sees the same operation order.
void set_matmul_threads(unsigned n);
unsigned matmul_threads();

/// Standard matrix product a[m x k] * b[k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// a^T * b where a is [k x m], b is [k x n] -> [m x n].
Tensor matmul_transA(const Tensor& a, const Tensor& b);

/// a * b^T where a is [m x k], b is [n x k] -> [m x n].
Tensor matmul_transB(const Tensor& a, const Tensor& b);

/// sqrt of the sum of squared elements; 0 iff all elements are 0.
double l2_norm(const Tensor& v);

/// Elementwise helpers; shapes must agree.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
void add_in_place(Tensor& a, const Tensor& b);
void scale_in_place(Tensor& a, double k);

} // namespace latentga
