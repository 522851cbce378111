#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sfcnn/ingest.hpp"
#include "sfcnn/matrix.hpp"
#include "sfcnn/numops.hpp"
#include "sfcnn/rng.hpp"

namespace sfcnn {

/// Hyperparameters that fix every tensor shape in the network.
struct Architecture {
    std::size_t num_slots = 4;               // K_0
    std::size_t d = 0;
    std::size_t T = 0;
    std::vector<std::size_t> filter_sizes;   // m_i per order
    std::vector<std::size_t> pool_sizes;     // pool length per order
    std::vector<std::size_t> maps;           // K_i per order
    std::size_t dense_dim = 0;               // n
    double dropout_rate = 0.0;
    std::string activation = "relu";

    std::size_t orders() const { return filter_sizes.size(); }

    /// Throws ConfigError unless every list has the same length h >= 1 and
    /// all dimensions are positive.
    void validate() const;

    /// The length chain [T, conv_1, pool_1, ..., conv_h, pool_h]:
    /// conv_i = pool_{i-1} + m_i - 1 and pool_i = ceil(conv_i / k_i).
    std::vector<std::size_t> stage_lengths() const;

    std::size_t final_len() const;       // pool_h
    std::size_t flatten_size() const;    // K_h * d * pool_h
};

/// All learnable tensors: per (order, output map, input map) filter/bias
/// banks, the dense matrix, and the regression head (bias first).
struct ModelParams {
    std::vector<std::vector<std::vector<FilterBank>>> conv;
    Matrix dense;                 // flatten_size x dense_dim
    std::vector<double> head;     // dense_dim + 1
};

/// Filters and the dense matrix are drawn uniformly from
/// +-sqrt(6 / (fan_in + fan_out)); biases and the head start at zero.
ModelParams init_params(const Architecture& arch, std::uint64_t seed);

ModelParams zero_params_like(const Architecture& arch);

/// Fixed tensor iteration order shared by the optimizer state layout and the
/// serialized manifest: conv.<order>.<out>.<in>.{filters,biases} ascending,
/// then dense.H, then head.w.
void for_each_tensor(ModelParams& params,
                     const std::function<void(const std::string&, std::vector<double>&)>& fn);
void for_each_tensor(const ModelParams& params,
                     const std::function<void(const std::string&, const std::vector<double>&)>& fn);

struct TensorInfo {
    std::string name;
    std::vector<std::size_t> shape;
};
std::vector<TensorInfo> tensor_manifest(const Architecture& arch);

/// Everything backward needs to replay a train-mode forward pass.
struct ForwardTrace {
    std::vector<std::vector<Matrix>> reps;   // reps[0] = input slots; reps[i] = pooled maps
    std::vector<std::vector<Matrix>> act;    // act[i-1][j] = relu output feeding pool, order i
    std::vector<double> flat;                // p before dropout
    std::vector<std::uint8_t> keep;          // dropout keep mask
    std::vector<double> flat_dropped;        // masked p scaled by 1/(1-rate)
    std::vector<double> dense_pre;           // p~^T H
    std::vector<double> features;            // x_hat
    double prediction = 0.0;
};

/// One conv/activation/pool block: P_j = pool(relu(sum_k conv(in_k, F_jk, B_jk))).
std::vector<Matrix> conv_block_forward(const std::vector<Matrix>& inputs, std::size_t order,
                                       const Architecture& arch, const ModelParams& params);

/// Eval mode: pure function of (frame, params), no dropout.
double forward_eval(const DataFrame& frame, const Architecture& arch, const ModelParams& params);

/// Train mode: applies an inverted dropout mask drawn from `dropout_rng`
/// and returns the full trace.
ForwardTrace forward_train(const DataFrame& frame, const Architecture& arch,
                           const ModelParams& params, Rng& dropout_rng);

/// Adds d(prediction * upstream)/d(theta) into `grads` (shaped like the
/// params). When frame_grads is non-null the input-slot gradients are
/// written there as well.
void accumulate_gradients(const ForwardTrace& trace, const Architecture& arch,
                          const ModelParams& params, double upstream, ModelParams& grads,
                          std::vector<Matrix>* frame_grads = nullptr);

struct BackwardResult {
    ModelParams grads;
    std::vector<Matrix> frame_grads;
};

BackwardResult backward(const ForwardTrace& trace, const Architecture& arch,
                        const ModelParams& params, double upstream);

/// A trained model plus everything needed to run it on raw data.
struct ModelBundle {
    Architecture arch;
    ModelParams params;
    NormStats stats;
    std::vector<std::string> indicator_names;
    std::vector<std::string> slot_order;
};

/// Binary format: "SFCN", u32 LE version (1), u64 LE header length, JSON
/// header (architecture, indicator names, slot order, norm stats, tensor
/// manifest), then tensor payloads as little-endian f64 in manifest order.
void save_model(const ModelBundle& bundle, std::ostream& sink);
ModelBundle load_model(std::istream& source);

void save_model_file(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model_file(const std::string& path);

}  // namespace sfcnn
