#include "sfcnn/numops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sfcnn/errors.hpp"

namespace sfcnn {

namespace {

void conv_row_add(const double* s, std::size_t len, const double* f, std::size_t m,
                  double bias, double* out) {
    const std::size_t out_len = len + m - 1;
    for (std::size_t j = 0; j < out_len; ++j) {
        // out[j] += bias + sum_p f[p] * s[j-p]; clamp p so j-p stays in range.
        const std::size_t p_lo = j >= len ? j - len + 1 : 0;
        const std::size_t p_hi = std::min(m - 1, j);
        double acc = bias;
        for (std::size_t p = p_lo; p <= p_hi; ++p) {
            acc += f[p] * s[j - p];
        }
        out[j] += acc;
    }
}

}  // namespace

std::vector<double> wide_conv_row(std::span<const double> s, std::span<const double> f,
                                  double bias) {
    if (s.empty() || f.empty()) {
        throw DataError("wide_conv_row: sequence and filter must be non-empty");
    }
    std::vector<double> out(s.size() + f.size() - 1, 0.0);
    conv_row_add(s.data(), s.size(), f.data(), f.size(), bias, out.data());
    return out;
}

Matrix conv_bank(const Matrix& input, const FilterBank& bank) {
    Matrix out(input.rows, input.cols + bank.width() - 1, 0.0);
    conv_bank_add(input, bank, out);
    return out;
}

void conv_bank_add(const Matrix& input, const FilterBank& bank, Matrix& out) {
    const std::size_t d = input.rows;
    const std::size_t m = bank.width();
    if (bank.depth() != d || bank.biases.size() != d) {
        throw DataError("conv_bank: filter bank depth " + std::to_string(bank.depth()) +
                        " does not match input row count " + std::to_string(d));
    }
    if (out.rows != d || out.cols != input.cols + m - 1) {
        throw DataError("conv_bank: output shape mismatch");
    }
    for (std::size_t r = 0; r < d; ++r) {
        conv_row_add(input.row(r).data(), input.cols, bank.filters.row(r).data(), m,
                     bank.biases[r], out.row(r).data());
    }
}

ConvBankGrads conv_bank_backward(const Matrix& input, const FilterBank& bank,
                                 const Matrix& upstream) {
    ConvBankGrads grads;
    grads.input = Matrix(input.rows, input.cols, 0.0);
    FilterBank bank_grads;
    bank_grads.filters = Matrix(bank.filters.rows, bank.filters.cols, 0.0);
    bank_grads.biases.assign(bank.biases.size(), 0.0);
    conv_bank_backward_acc(input, bank, upstream, bank_grads, &grads.input);
    grads.filters = std::move(bank_grads.filters);
    grads.biases = std::move(bank_grads.biases);
    return grads;
}

void conv_bank_backward_acc(const Matrix& input, const FilterBank& bank,
                            const Matrix& upstream, FilterBank& grads,
                            Matrix* input_grad) {
    const std::size_t d = input.rows;
    const std::size_t len = input.cols;
    const std::size_t m = bank.width();
    if (bank.depth() != d || upstream.rows != d || upstream.cols != len + m - 1) {
        throw DataError("conv_bank_backward: shape mismatch");
    }
    if (grads.filters.rows != d || grads.filters.cols != m || grads.biases.size() != d) {
        throw DataError("conv_bank_backward: gradient accumulator shape mismatch");
    }
    for (std::size_t r = 0; r < d; ++r) {
        const double* s = input.row(r).data();
        const double* up = upstream.row(r).data();
        double* gf = grads.filters.row(r).data();

        double bias_acc = 0.0;
        for (std::size_t j = 0; j < len + m - 1; ++j) bias_acc += up[j];
        grads.biases[r] += bias_acc;

        // d out[j] / d f[p] = s[j-p]
        for (std::size_t p = 0; p < m; ++p) {
            const std::size_t j_hi = std::min(len + m - 2, p + len - 1);
            double acc = 0.0;
            for (std::size_t j = p; j <= j_hi; ++j) {
                acc += up[j] * s[j - p];
            }
            gf[p] += acc;
        }

        // d out[i+q] / d s[i] = f[q]; i+q always lands inside the wide output.
        if (input_grad != nullptr) {
            const double* f = bank.filters.row(r).data();
            double* gs = input_grad->row(r).data();
            for (std::size_t i = 0; i < len; ++i) {
                double acc = 0.0;
                for (std::size_t q = 0; q < m; ++q) {
                    acc += up[i + q] * f[q];
                }
                gs[i] += acc;
            }
        }
    }
}

Matrix relu(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
    }
    return out;
}

Matrix relu_backward(const Matrix& x, const Matrix& upstream) {
    if (!x.same_shape(upstream)) {
        throw DataError("relu_backward: shape mismatch");
    }
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = x.data[i] > 0.0 ? upstream.data[i] : 0.0;
    }
    return out;
}

Matrix maxpool_rows(const Matrix& a, std::size_t pool) {
    if (pool < 1) throw DataError("maxpool_rows: pool length must be >= 1");
    const std::size_t out_cols = pooled_len(a.cols, pool);
    Matrix out(a.rows, out_cols);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* src = a.row(r).data();
        double* dst = out.row(r).data();
        for (std::size_t j = 0; j < out_cols; ++j) {
            const std::size_t lo = j * pool;
            const std::size_t hi = std::min(lo + pool, a.cols);
            double best = src[lo];
            for (std::size_t t = lo + 1; t < hi; ++t) {
                if (src[t] > best) best = src[t];
            }
            dst[j] = best;
        }
    }
    return out;
}

Matrix maxpool_backward(const Matrix& a, std::size_t pool, const Matrix& upstream) {
    if (pool < 1) throw DataError("maxpool_backward: pool length must be >= 1");
    const std::size_t out_cols = pooled_len(a.cols, pool);
    if (upstream.rows != a.rows || upstream.cols != out_cols) {
        throw DataError("maxpool_backward: shape mismatch");
    }
    Matrix grad(a.rows, a.cols, 0.0);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* src = a.row(r).data();
        const double* up = upstream.row(r).data();
        double* g = grad.row(r).data();
        for (std::size_t j = 0; j < out_cols; ++j) {
            const std::size_t lo = j * pool;
            const std::size_t hi = std::min(lo + pool, a.cols);
            std::size_t arg = lo;
            for (std::size_t t = lo + 1; t < hi; ++t) {
                if (src[t] > src[arg]) arg = t;   // strict: first index wins ties
            }
            g[arg] += up[j];
        }
    }
    return grad;
}

double finite_diff_check(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> point, std::span<const double> analytic,
                         double h) {
    if (point.size() != analytic.size()) {
        throw DataError("finite_diff_check: point/gradient size mismatch");
    }
    if (!(h > 0.0)) throw DataError("finite_diff_check: h must be > 0");
    std::vector<double> x(point.begin(), point.end());
    double max_err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double fp = f(x);
        x[i] = orig - h;
        const double fm = f(x);
        x[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw DataError("finite_diff_check: non-finite function value at coordinate " +
                            std::to_string(i));
        }
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[i];
        const double err = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace sfcnn
