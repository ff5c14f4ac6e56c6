#include "hyperstab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hyperstab/errors.hpp"

namespace hyperstab {

namespace {

bool finite(double x) { return std::isfinite(x); }
bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

template <typename T>
SquareMatrix<T>::SquareMatrix(std::size_t n, std::vector<T> row_major)
    : n_(n), data_(std::move(row_major)) {
    require(data_.size() == n * n, ErrorKind::input,
            "matrix entry count " + std::to_string(data_.size()) + " does not match n*n = " +
                std::to_string(n * n));
}

template <typename T>
bool SquareMatrix<T>::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const T& x) { return finite(x); });
}

template class SquareMatrix<double>;
template class SquareMatrix<Complex>;

void validate(const RealMatrix& m, const char* what) {
    require(m.dim() >= 1, ErrorKind::input, std::string(what) + ": dimension must be >= 1");
    require(m.all_finite(), ErrorKind::input, std::string(what) + ": entries must be finite");
}

RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
    const std::size_t n = a.dim();
    RealMatrix c(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

RealMatrix transpose(const RealMatrix& a) {
    RealMatrix t(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) t(j, i) = a(i, j);
    return t;
}

RealMatrix abs_entries(const RealMatrix& a) {
    RealMatrix t(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) t(i, j) = std::abs(a(i, j));
    return t;
}

ComplexMatrix to_complex(const RealMatrix& a) {
    ComplexMatrix c(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) c(i, j) = a(i, j);
    return c;
}

std::vector<double> mat_vec(const RealMatrix& a, const std::vector<double>& x) {
    std::vector<double> y(a.dim(), 0.0);
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

RealMatrix scale_similar(const RealMatrix& m, const std::vector<double>& log_scale) {
    RealMatrix s(m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i)
        for (std::size_t j = 0; j < m.dim(); ++j)
            s(i, j) = m(i, j) * std::exp(log_scale[i] - log_scale[j]);
    return s;
}

namespace {

void reduce_to_hessenberg(ComplexMatrix& a) {
    const std::size_t n = a.dim();
    if (n < 3) return;
    std::vector<Complex> v(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        double norm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) norm2 += std::norm(a(i, k));
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) continue;
        const Complex x0 = a(k + 1, k);
        const Complex phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : Complex(1.0);
        const Complex alpha = -phase * norm;
        double vnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k);
            if (i == k + 1) v[i] -= alpha;
            vnorm2 += std::norm(v[i]);
        }
        if (vnorm2 == 0.0) continue;
        const double vnorm = std::sqrt(vnorm2);
        for (std::size_t i = k + 1; i < n; ++i) v[i] /= vnorm;

        for (std::size_t j = k; j < n; ++j) {
            Complex dot = 0.0;
            for (std::size_t i = k + 1; i < n; ++i) dot += std::conj(v[i]) * a(i, j);
            for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= 2.0 * v[i] * dot;
        }
        for (std::size_t i = 0; i < n; ++i) {
            Complex dot = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) dot += a(i, j) * v[j];
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= 2.0 * dot * std::conj(v[j]);
        }
        for (std::size_t i = k + 2; i < n; ++i) a(i, k) = 0.0;
    }
}

Complex wilkinson_shift(const ComplexMatrix& h, std::size_t hi) {
    const Complex a = h(hi - 1, hi - 1), b = h(hi - 1, hi), c = h(hi, hi - 1), d = h(hi, hi);
    const Complex tr = a + d;
    const Complex det = a * d - b * c;
    const Complex disc = std::sqrt(tr * tr / 4.0 - det);
    const Complex l1 = tr / 2.0 + disc, l2 = tr / 2.0 - disc;
    return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

// One explicit shifted QR sweep on the active block [lo, hi] via Givens rotations.
void qr_sweep(ComplexMatrix& h, std::size_t lo, std::size_t hi, Complex mu) {
    const std::size_t m = hi - lo;
    std::vector<Complex> cs(m), sn(m);
    for (std::size_t k = lo; k <= hi; ++k) h(k, k) -= mu;
    for (std::size_t k = lo; k < hi; ++k) {
        const Complex a = h(k, k), b = h(k + 1, k);
        const double r = std::hypot(std::abs(a), std::abs(b));
        Complex c = 1.0, s = 0.0;
        if (r > 0.0) {
            c = a / r;
            s = b / r;
        }
        cs[k - lo] = c;
        sn[k - lo] = s;
        for (std::size_t j = k; j <= hi; ++j) {
            const Complex x = h(k, j), y = h(k + 1, j);
            h(k, j) = std::conj(c) * x + std::conj(s) * y;
            h(k + 1, j) = -s * x + c * y;
        }
    }
    for (std::size_t k = lo; k < hi; ++k) {
        const Complex c = cs[k - lo], s = sn[k - lo];
        const std::size_t last = std::min(k + 1, hi);
        for (std::size_t i = lo; i <= last; ++i) {
            const Complex x = h(i, k), y = h(i, k + 1);
            h(i, k) = x * c + y * s;
            h(i, k + 1) = -x * std::conj(s) + y * std::conj(c);
        }
    }
    for (std::size_t k = lo; k <= hi; ++k) h(k, k) += mu;
}

}  // namespace

std::vector<Complex> eigenvalues(ComplexMatrix h, const EigenOptions& opts) {
    const std::size_t n = h.dim();
    require(n >= 1, ErrorKind::input, "eigenvalues: empty matrix");
    require(h.all_finite(), ErrorKind::input, "eigenvalues: entries must be finite");
    require(n <= 64, ErrorKind::budget, "eigenvalues: dimension above 64 is not supported");
    reduce_to_hessenberg(h);

    const double eps = std::numeric_limits<double>::epsilon();
    double scale = 0.0;
    for (const auto& z : h.entries()) scale = std::max(scale, std::abs(z));
    const double tiny = std::numeric_limits<double>::min() / eps;

    std::vector<Complex> out;
    out.reserve(n);
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
    int iter = 0, total = 0;
    while (hi >= 0) {
        if (hi == 0) {
            out.push_back(h(0, 0));
            break;
        }
        std::ptrdiff_t lo = hi;
        while (lo > 0) {
            const double sub = std::abs(h(lo, lo - 1));
            double ref = std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo));
            if (ref == 0.0) ref = scale;
            if (sub <= eps * ref || sub <= tiny) {
                h(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            out.push_back(h(hi, hi));
            --hi;
            iter = 0;
            continue;
        }
        ++iter;
        ++total;
        if (iter > opts.max_iterations_per_eigenvalue) {
            std::ostringstream msg;
            msg << "eigenvalues: QR iteration did not converge (n=" << n << ", active block ["
                << lo << "," << hi << "], sweeps=" << total
                << ", last subdiagonal=" << std::abs(h(hi, hi - 1)) << ")";
            fail(ErrorKind::numeric, msg.str());
        }
        Complex mu;
        if (iter % 11 == 0) {
            mu = h(hi, hi) + Complex(0.75 * std::abs(h(hi, hi - 1)), 0.4 * std::abs(h(hi, hi - 1)));
        } else {
            mu = wilkinson_shift(h, static_cast<std::size_t>(hi));
        }
        qr_sweep(h, static_cast<std::size_t>(lo), static_cast<std::size_t>(hi), mu);
    }
    return out;
}

double spectral_radius(const ComplexMatrix& a, const EigenOptions& opts) {
    double r = 0.0;
    for (const auto& z : eigenvalues(a, opts)) r = std::max(r, std::abs(z));
    return r;
}

double spectral_radius(const RealMatrix& a, const EigenOptions& opts) {
    return spectral_radius(to_complex(a), opts);
}

std::vector<double> symmetric_eigenvalues(RealMatrix a) {
    const std::size_t n = a.dim();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                total += a(i, j) * a(i, j);
                if (i != j) off += a(i, j) * a(i, j);
            }
        if (off <= 1e-32 * total || off == 0.0) break;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

Complex determinant(ComplexMatrix a) {
    const std::size_t n = a.dim();
    Complex det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (a(piv, k) == Complex(0.0)) return 0.0;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            det = -det;
        }
        det *= a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const Complex f = a(i, k) / a(k, k);
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

double determinant(const RealMatrix& a) { return determinant(to_complex(a)).real(); }

std::vector<double> solve(RealMatrix a, std::vector<double> b) {
    const std::size_t n = a.dim();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        require(a(piv, k) != 0.0, ErrorKind::numeric, "solve: singular matrix");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

}  // namespace hyperstab
