#pragma once

#include <Eigen/Core>

#include "mpvad/tensor.hpp"

namespace mpvad {

// Thin GEMM/im2col layer. Everything is row-major contiguous; Eigen supplies
// the matrix cores, the im2col/col2im pair turns convolutions into GEMMs.

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// C[m,n] = or += A[m,k] * B[k,n]
template <typename T>
void mat_mul(T* c, const T* a, const T* b, int m, int k, int n, bool accumulate) {
    ConstMatMap<T> A(a, m, k), B(b, k, n);
    MatMap<T> C(c, m, n);
    if (accumulate)
        C.noalias() += A * B;
    else
        C.noalias() = A * B;
}

// C[m,n] = or += A^T * B where A is stored [k,m], B is [k,n]
template <typename T>
void mat_mul_tn(T* c, const T* a, const T* b, int m, int k, int n, bool accumulate) {
    ConstMatMap<T> A(a, k, m), B(b, k, n);
    MatMap<T> C(c, m, n);
    if (accumulate)
        C.noalias() += A.transpose() * B;
    else
        C.noalias() = A.transpose() * B;
}

// C[m,n] = or += A * B^T where A is [m,k], B is stored [n,k]
template <typename T>
void mat_mul_nt(T* c, const T* a, const T* b, int m, int k, int n, bool accumulate) {
    ConstMatMap<T> A(a, m, k), B(b, n, k);
    MatMap<T> C(c, m, n);
    if (accumulate)
        C.noalias() += A * B.transpose();
    else
        C.noalias() = A * B.transpose();
}

inline int conv_out_size(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

// src [C,H,W] -> dst [C*k*k, Ho*Wo]
template <typename T>
void im2col(const T* src, int c, int h, int w, int k, int stride, int pad, T* dst) {
    const int ho = conv_out_size(h, k, stride, pad);
    const int wo = conv_out_size(w, k, stride, pad);
    const int cols = ho * wo;
    for (int ch = 0; ch < c; ++ch) {
        const T* plane = src + static_cast<size_t>(ch) * h * w;
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                T* row = dst + (static_cast<size_t>(ch) * k * k + ki * k + kj) * cols;
                for (int oi = 0; oi < ho; ++oi) {
                    int ii = oi * stride - pad + ki;
                    if (ii < 0 || ii >= h) {
                        for (int oj = 0; oj < wo; ++oj) row[oi * wo + oj] = T(0);
                        continue;
                    }
                    const T* srow = plane + static_cast<size_t>(ii) * w;
                    for (int oj = 0; oj < wo; ++oj) {
                        int jj = oj * stride - pad + kj;
                        row[oi * wo + oj] = (jj < 0 || jj >= w) ? T(0) : srow[jj];
                    }
                }
            }
        }
    }
}

// Scatter-add of the column matrix back to image layout; inverse map of
// im2col for gradient propagation. dst [C,H,W] is accumulated into.
template <typename T>
void col2im_add(const T* cols_mat, int c, int h, int w, int k, int stride, int pad, T* dst) {
    const int ho = conv_out_size(h, k, stride, pad);
    const int wo = conv_out_size(w, k, stride, pad);
    const int cols = ho * wo;
    for (int ch = 0; ch < c; ++ch) {
        T* plane = dst + static_cast<size_t>(ch) * h * w;
        for (int ki = 0; ki < k; ++ki) {
            for (int kj = 0; kj < k; ++kj) {
                const T* row = cols_mat + (static_cast<size_t>(ch) * k * k + ki * k + kj) * cols;
                for (int oi = 0; oi < ho; ++oi) {
                    int ii = oi * stride - pad + ki;
                    if (ii < 0 || ii >= h) continue;
                    T* drow = plane + static_cast<size_t>(ii) * w;
                    for (int oj = 0; oj < wo; ++oj) {
                        int jj = oj * stride - pad + kj;
                        if (jj >= 0 && jj < w) drow[jj] += row[oi * wo + oj];
                    }
                }
            }
        }
    }
}

}  // namespace mpvad
