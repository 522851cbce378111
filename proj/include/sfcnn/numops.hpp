#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sfcnn/matrix.hpp"

namespace sfcnn {

/// One filter per indicator row: row r of `filters` convolves only row r of
/// the input (no cross-row mixing), then biases[r] is added to that row.
struct FilterBank {
    Matrix filters;               // d x m
    std::vector<double> biases;   // d

    std::size_t depth() const { return filters.rows; }
    std::size_t width() const { return filters.cols; }
};

/// Wide 1-D convolution of a single row: out[j] = b + sum_p f[p] * s[j-p]
/// for j in [0, L+m-2], with s zero-padded outside [0, L-1]. Output length
/// is always L+m-1, non-empty even when L < m.
std::vector<double> wide_conv_row(std::span<const double> s, std::span<const double> f,
                                  double bias);

/// Depthwise wide convolution: d x L -> d x (L+m-1).
Matrix conv_bank(const Matrix& input, const FilterBank& bank);

/// Same as conv_bank but adds into `out` (for summing over input maps).
void conv_bank_add(const Matrix& input, const FilterBank& bank, Matrix& out);

struct ConvBankGrads {
    Matrix input;                 // d x L
    Matrix filters;               // d x m
    std::vector<double> biases;   // d
};

/// Exact gradients of conv_bank contracted with `upstream` (d x (L+m-1)).
ConvBankGrads conv_bank_backward(const Matrix& input, const FilterBank& bank,
                                 const Matrix& upstream);

/// Accumulating form used by the training hot path. Filter/bias gradients are
/// added into `grads`; the input gradient is added into *input_grad when the
/// pointer is non-null (order-1 blocks skip it).
void conv_bank_backward_acc(const Matrix& input, const FilterBank& bank,
                            const Matrix& upstream, FilterBank& grads,
                            Matrix* input_grad);

/// Element-wise max(0, x).
Matrix relu(const Matrix& x);

/// Passes upstream where x > 0; the subgradient at exactly 0 is 0.
Matrix relu_backward(const Matrix& x, const Matrix& upstream);

inline std::size_t pooled_len(std::size_t len, std::size_t pool) {
    return (len + pool - 1) / pool;
}

/// Row-wise max pooling into ceil(L/k) windows; the final window may be
/// partial and takes the max of the remaining < k entries.
Matrix maxpool_rows(const Matrix& a, std::size_t pool);

/// Routes upstream to each window's arg-max (first index on ties).
Matrix maxpool_backward(const Matrix& a, std::size_t pool, const Matrix& upstream);

/// Central-difference check: perturbs each coordinate of `point` by +/- h,
/// compares (f+ - f-)/(2h) against `analytic`, returns the max of
/// |a - n| / max(1e-12, |a| + |n|). Throws DataError on non-finite f.
double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> point, std::span<const double> analytic,
                         double h);

}  // namespace sfcnn
