#pragma once

// Extended-precision complex arithmetic for the time integrators.
//
// In a PT-broken spectrum the right field grows like e^{|Im E| t} while the
// left field grows along the conjugate mode, so phi_bar . psi is a sum of
// terms of size e^{2|Im E| t} that cancel to O(1). Rounding at 1e-16 leaves an
// O(1e-16 e^{2|Im E| t}) error in the conserved quantities; at |Im E| t ~ 17
// that is already O(1). Binary128 pushes the floor to ~1e-34.

#include "nhqm/biortho.hpp"
#include "nhqm/types.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace nhqm::detail {

#if defined(__SIZEOF_FLOAT128__)
using xreal = __float128;
#else
using xreal = long double;
#endif

struct xcomplex {
    xreal re = 0;
    xreal im = 0;

    xcomplex() = default;
    xcomplex(xreal r, xreal i) : re(r), im(i) {}
    explicit xcomplex(cplx z) : re(z.real()), im(z.imag()) {}

    cplx to_double() const { return {static_cast<double>(re), static_cast<double>(im)}; }

    xcomplex& operator+=(const xcomplex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    xcomplex& operator-=(const xcomplex& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
};

inline xcomplex operator+(xcomplex a, const xcomplex& b) { return a += b; }
inline xcomplex operator-(xcomplex a, const xcomplex& b) { return a -= b; }
inline xcomplex operator-(const xcomplex& a) { return {-a.re, -a.im}; }
inline xcomplex operator*(const xcomplex& a, const xcomplex& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline xcomplex operator*(xreal s, const xcomplex& a) { return {s * a.re, s * a.im}; }
inline xcomplex conj(const xcomplex& a) { return {a.re, -a.im}; }
inline xreal norm2(const xcomplex& a) { return a.re * a.re + a.im * a.im; }
inline xcomplex operator/(const xcomplex& a, const xcomplex& b) {
    const xreal d = norm2(b);
    const xcomplex n = a * conj(b);
    return {n.re / d, n.im / d};
}

// Newton refinement of the double-precision square root.
inline xreal xsqrt(xreal x) {
    if (x <= 0) return 0;
    xreal y = std::sqrt(static_cast<double>(x));
    for (int i = 0; i < 3; ++i) y = (y + x / y) / 2;
    return y;
}

using XVector = std::vector<xcomplex>;

class XMatrix {
  public:
    XMatrix() = default;
    XMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
    explicit XMatrix(const Matrix& m)
        : XMatrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())) {
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = xcomplex(m(i, j));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    xcomplex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const xcomplex& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    XVector col(std::size_t j) const {
        XVector v(rows_);
        for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
        return v;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<xcomplex> data_;
};

inline XVector to_x(const Vector& v) {
    XVector out(static_cast<std::size_t>(v.size()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xcomplex(v(static_cast<Eigen::Index>(i)));
    return out;
}

inline Vector to_double(const XVector& v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i].to_double();
    return out;
}

// m v
inline XVector mat_vec(const XMatrix& m, const XVector& v) {
    XVector out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        xcomplex s;
        for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

// Row vector times matrix: (v m)_k = sum_l v_l m_lk
inline XVector row_times(const XVector& v, const XMatrix& m) {
    XVector out(m.cols());
    for (std::size_t l = 0; l < m.rows(); ++l) {
        for (std::size_t k = 0; k < m.cols(); ++k) out[k] += v[l] * m(l, k);
    }
    return out;
}

// sum_k x_k y_k (no conjugation)
inline xcomplex bilinear(const XVector& x, const XVector& y) {
    xcomplex s;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
    return s;
}

// sum_k conj(x_k) y_k
inline xcomplex inner(const XVector& x, const XVector& y) {
    xcomplex s;
    for (std::size_t k = 0; k < x.size(); ++k) s += conj(x[k]) * y[k];
    return s;
}

// LU with partial pivoting, enough for the small dense solves the
// integrators need.
class XLU {
  public:
    explicit XLU(XMatrix m) : lu_(std::move(m)), perm_(lu_.rows()) {
        const std::size_t n = lu_.rows();
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t p = k;
            for (std::size_t i = k + 1; i < n; ++i)
                if (norm2(lu_(i, k)) > norm2(lu_(p, k))) p = i;
            if (p != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(perm_[k], perm_[p]);
            }
            if (norm2(lu_(k, k)) == 0) lu_(k, k) = xcomplex(1e-300, 0);
            for (std::size_t i = k + 1; i < n; ++i) {
                lu_(i, k) = lu_(i, k) / lu_(k, k);
                for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= lu_(i, k) * lu_(k, j);
            }
        }
    }

    XVector solve(const XVector& rhs) const {
        const std::size_t n = lu_.rows();
        XVector x(n);
        for (std::size_t i = 0; i < n; ++i) {
            xcomplex s = rhs[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
            x[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            xcomplex s = x[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
            x[i] = s / lu_(i, i);
        }
        return x;
    }

  private:
    XMatrix lu_;
    std::vector<std::size_t> perm_;
};

// Eigenbasis carried at extended precision. Right vectors are polished by two
// steps of shifted inverse iteration in binary128, then the left vectors are
// taken from the inverse so that <b_i|a_j> = delta_ij at that precision.
// Modal projections of exponentially separated fields need this: a 1e-16
// error in a_1 leaks e^{|Im E| t} of mode 1 into mode 2's coefficient.
struct XBasis {
    XMatrix right;  // columns a_j
    XMatrix left;   // columns b_j
};

inline XBasis refine_basis(const Matrix& h, const BiorthoSystem& sys) {
    const std::size_t n = static_cast<std::size_t>(sys.dim());
    const XMatrix hx(h);
    XBasis out{XMatrix(n, n), XMatrix(n, n)};
    // Per-vector inverse iteration is O(n^4) in software floating point; past
    // this size the double eigenvectors are only re-biorthogonalized.
    constexpr std::size_t max_polish_dim = 48;
    for (std::size_t j = 0; j < n; ++j) {
        const Vector a_d = sys.right(static_cast<Eigen::Index>(j));
        XVector x = to_x(a_d);
        if (n <= max_polish_dim) {
            XMatrix shifted = hx;
            const xcomplex e(sys.eigenvalue(static_cast<Eigen::Index>(j)));
            for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= e;
            const XLU lu(shifted);
            const XVector ref = x;
            for (int it = 0; it < 2; ++it) {
                x = lu.solve(x);
                // keep the gauge of the double vector: <a_double|x> = 1
                const xcomplex s = inner(ref, x);
                for (auto& v : x) v = v / s;
            }
        }
        for (std::size_t i = 0; i < n; ++i) out.right(i, j) = x[i];
    }
    // B = A^{-dagger}: solve A X = I, then b_j = conj(row j of X).
    const XLU lu(out.right);
    for (std::size_t k = 0; k < n; ++k) {
        XVector e(n);
        e[k] = xcomplex(1, 0);
        const XVector col = lu.solve(e);
        for (std::size_t j = 0; j < n; ++j) out.left(k, j) = conj(col[j]);
    }
    return out;
}

}  // namespace nhqm::detail
