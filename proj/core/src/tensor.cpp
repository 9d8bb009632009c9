#include "latentga/tensor.hpp"

#include "latentga/errors.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace latentga {

namespace {
unsigned g_matmul_threads = 1;
}

void set_matmul_threads(unsigned n) { g_matmul_threads = n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n; }
unsigned matmul_threads() { return g_matmul_threads; }

Tensor Tensor::zeros(std::size_t n) {
    Tensor t;
    t.shape = {n};
    t.data.assign(n, 0.0);
    return t;
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
    Tensor t;
    t.shape = {rows, cols};
    t.data.assign(rows * cols, 0.0);
    return t;
}

Tensor Tensor::from(std::vector<double> values) {
    Tensor t;
    t.shape = {values.size()};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values) {
    if (rows * cols != values.size())
        throw ShapeError("tensor init: " + std::to_string(rows) + "x" + std::to_string(cols) +
                         " needs " + std::to_string(rows * cols) + " values, got " +
                         std::to_string(values.size()));
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(values);
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

namespace {

void require_rank2(const Tensor& t, const char* who) {
    if (t.rank() != 2) throw ShapeError(std::string(who) + ": expected rank-2, got " + t.shape_str());
}

// Plain ikj kernel over an output-row range: the inner loop runs over
// contiguous memory of both b and c, which the compiler vectorizes.
void mm_rows(const double* a, const double* b, double* c,
             std::size_t r0, std::size_t r1, std::size_t k, std::size_t n) {
    for (std::size_t i = r0; i < r1; ++i) {
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void mm_rows_transB(const double* a, const double* b, double* c,
                    std::size_t r0, std::size_t r1, std::size_t k, std::size_t n) {
    for (std::size_t i = r0; i < r1; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
}

template <typename RowFn>
void run_row_partitioned(std::size_t rows, RowFn fn) {
    const unsigned want = g_matmul_threads;
    if (want <= 1 || rows < 2 * want) {
        fn(0, rows);
        return;
    }
    std::vector<std::thread> workers;
    const std::size_t chunk = (rows + want - 1) / want;
    for (unsigned t = 0; t < want; ++t) {
        const std::size_t r0 = t * chunk;
        const std::size_t r1 = std::min(rows, r0 + chunk);
        if (r0 >= r1) break;
        workers.emplace_back([=] { fn(r0, r1); });
    }
    for (auto& w : workers) w.join();
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    if (a.shape[1] != b.shape[0])
        throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " x " + b.shape_str());
    const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor c = Tensor::zeros(m, n);
    run_row_partitioned(m, [&](std::size_t r0, std::size_t r1) {
        mm_rows(a.data.data(), b.data.data(), c.data.data(), r0, r1, k, n);
    });
    return c;
}

Tensor matmul_transA(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_transA");
    require_rank2(b, "matmul_transA");
    if (a.shape[0] != b.shape[0])
        throw ShapeError("matmul_transA: leading dimensions disagree, " + a.shape_str() + " x " +
                         b.shape_str());
    const std::size_t k = a.shape[0], m = a.shape[1], n = b.shape[1];
    Tensor c = Tensor::zeros(m, n);
    // c[i][j] = sum_p a[p][i] * b[p][j]; accumulate row by row of b so the
    // inner loop stays contiguous. Threads own disjoint i ranges and each
    // scans all p, so partitioning does not change per-element order.
    run_row_partitioned(m, [&](std::size_t r0, std::size_t r1) {
        for (std::size_t p = 0; p < k; ++p) {
            const double* ap = a.row(p);
            const double* bp = b.row(p);
            for (std::size_t i = r0; i < r1; ++i) {
                const double av = ap[i];
                if (av == 0.0) continue; // common after relu
                double* ci = c.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
            }
        }
    });
    return c;
}

Tensor matmul_transB(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_transB");
    require_rank2(b, "matmul_transB");
    if (a.shape[1] != b.shape[1])
        throw ShapeError("matmul_transB: trailing dimensions disagree, " + a.shape_str() + " x " +
                         b.shape_str());
    const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[0];
    Tensor c = Tensor::zeros(m, n);
    run_row_partitioned(m, [&](std::size_t r0, std::size_t r1) {
        mm_rows_transB(a.data.data(), b.data.data(), c.data.data(), r0, r1, k, n);
    });
    return c;
}

double l2_norm(const Tensor& v) {
    double s = 0.0;
    for (double x : v.data) s += x * x;
    return std::sqrt(s);
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(who) + ": shapes disagree, " + a.shape_str() + " vs " + b.shape_str());
}
} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

void add_in_place(Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add_in_place");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void scale_in_place(Tensor& a, double k) {
    for (double& x : a.data) x *= k;
}

} // namespace latentga
