#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace hyperstab {

using Complex = std::complex<double>;

template <typename T>
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n) : n_(n), data_(n * n, T{}) {}
    SquareMatrix(std::size_t n, std::vector<T> row_major);

    static SquareMatrix identity(std::size_t n) {
        SquareMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    std::size_t dim() const noexcept { return n_; }
    T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    const std::vector<T>& entries() const noexcept { return data_; }

    bool all_finite() const;

private:
    std::size_t n_ = 0;
    std::vector<T> data_;
};

using RealMatrix = SquareMatrix<double>;
using ComplexMatrix = SquareMatrix<Complex>;

// Throws input error on empty or non-finite matrices.
void validate(const RealMatrix& m, const char* what = "matrix");

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b);
RealMatrix transpose(const RealMatrix& a);
RealMatrix abs_entries(const RealMatrix& a);
ComplexMatrix to_complex(const RealMatrix& a);
std::vector<double> mat_vec(const RealMatrix& a, const std::vector<double>& x);

// D M D^{-1} with D = diag(exp(log_scale)).
RealMatrix scale_similar(const RealMatrix& m, const std::vector<double>& log_scale);

struct EigenOptions {
    int max_iterations_per_eigenvalue = 60;
};

// Hessenberg reduction followed by single-shift QR with deflation.
std::vector<Complex> eigenvalues(ComplexMatrix a, const EigenOptions& opts = {});
double spectral_radius(const ComplexMatrix& a, const EigenOptions& opts = {});
double spectral_radius(const RealMatrix& a, const EigenOptions& opts = {});

// Cyclic Jacobi on a symmetric matrix; eigenvalues in ascending order.
std::vector<double> symmetric_eigenvalues(RealMatrix a);

// LU with partial pivoting.
Complex determinant(ComplexMatrix a);
double determinant(const RealMatrix& a);

// Solves A x = b for small dense A; throws numeric error if singular.
std::vector<double> solve(RealMatrix a, std::vector<double> b);

}  // namespace hyperstab
