#pragma once

// Hybrid forecaster: a Conv1D branch and an LSTM branch read the same
// L x F window; their outputs are combined by a linear head
//
//   y = w_conv . mean_t(conv(window)) + w_lstm . h_L + b
//
// LSTM step over z = [h_{t-1}, x_t]:
//   f = sigm(W_f z + b_f)   i = sigm(W_i z + b_i)   o = sigm(W_o z + b_o)
//   g = tanh(W_C z + b_C)   C_t = f * C_{t-1} + i * g   h_t = o * tanh(C_t)
//
// Gradients are analytic (full BPTT); train() runs mini-batch Adam.

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "stockcast/data_model.hpp"
#include "stockcast/detail/random.hpp"
#include "stockcast/error.hpp"
#include "stockcast/tensor.hpp"

namespace stockcast {

enum class Activation { linear, relu, tanh };

inline std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    }
    return "linear";
}

inline Activation parse_activation(std::string_view name) {
    if (name == "linear") return Activation::linear;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation `" + std::string(name) + "`");
}

namespace detail {

inline double sigmoid(double x) noexcept {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double activate(Activation a, double x) noexcept {
    switch (a) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::linear: break;
    }
    return x;
}

// Derivative expressed through the pre-activation and the output.
inline double activate_grad(Activation a, double pre, double out) noexcept {
    switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - out * out;
    case Activation::linear: break;
    }
    return 1.0;
}

inline bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace detail

struct LstmParams {
    std::size_t hidden = 0;
    std::size_t inputs = 0;
    Matrix w_forget, w_input, w_candidate, w_output;  // hidden x (hidden + inputs)
    Vector b_forget, b_input, b_candidate, b_output;  // hidden

    static LstmParams zeros(std::size_t hidden, std::size_t inputs) {
        LstmParams p;
        p.hidden = hidden;
        p.inputs = inputs;
        for (auto* w : {&p.w_forget, &p.w_input, &p.w_candidate, &p.w_output}) {
            *w = Matrix(hidden, hidden + inputs);
        }
        for (auto* b : {&p.b_forget, &p.b_input, &p.b_candidate, &p.b_output}) {
            b->assign(hidden, 0.0);
        }
        return p;
    }

    friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct LstmState {
    Vector h;
    Vector c;

    static LstmState zeros(std::size_t hidden) { return {Vector(hidden, 0.0), Vector(hidden, 0.0)}; }
};

struct ConvParams {
    std::size_t half_width = 0;
    std::size_t inputs = 0;
    Activation activation = Activation::linear;
    // filters x ((2k+1) * inputs); row f holds tap j, channel c at j * inputs + c.
    Matrix kernels;
    Vector biases;

    std::size_t filters() const noexcept { return kernels.rows(); }
    std::size_t taps() const noexcept { return 2 * half_width + 1; }

    double& weight(std::size_t filter, std::size_t tap, std::size_t channel) noexcept {
        return kernels(filter, tap * inputs + channel);
    }

    static ConvParams zeros(std::size_t filters, std::size_t half_width, std::size_t inputs,
                            Activation activation) {
        ConvParams p;
        p.half_width = half_width;
        p.inputs = inputs;
        p.activation = activation;
        p.kernels = Matrix(filters, (2 * half_width + 1) * inputs);
        p.biases.assign(filters, 0.0);
        return p;
    }

    friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

struct FusionParams {
    Vector w_conv;  // filters
    Vector w_lstm;  // hidden
    double bias = 0.0;
    // Optional nonlinearity on the fused output; linear reproduces the plain
    // weighted sum.
    Activation output_activation = Activation::linear;

    friend bool operator==(const FusionParams&, const FusionParams&) = default;
};

struct NetworkShape {
    std::size_t hidden = 32;
    std::size_t filters = 16;
    std::size_t half_width = 2;
    std::size_t window_length = 10;
    Activation conv_activation = Activation::linear;
    Activation output_activation = Activation::linear;

    void validate() const {
        detail::require(hidden >= 1, "hidden size must be >= 1");
        detail::require(filters >= 1, "filter count must be >= 1");
        detail::require(window_length >= 2 * half_width + 1,
                        "window length must be at least the kernel width 2k+1");
    }

    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct FusionNetwork {
    LstmParams lstm;
    ConvParams conv;
    FusionParams fusion;
    std::size_t window_length = 0;

    NetworkShape shape() const {
        return {lstm.hidden, conv.filters(), conv.half_width, window_length, conv.activation,
                fusion.output_activation};
    }

    static FusionNetwork zeros(const NetworkShape& shape) {
        shape.validate();
        FusionNetwork net;
        net.lstm = LstmParams::zeros(shape.hidden, kFeatureCount);
        net.conv = ConvParams::zeros(shape.filters, shape.half_width, kFeatureCount,
                                     shape.conv_activation);
        net.fusion.w_conv.assign(shape.filters, 0.0);
        net.fusion.w_lstm.assign(shape.hidden, 0.0);
        net.fusion.output_activation = shape.output_activation;
        net.window_length = shape.window_length;
        return net;
    }

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) everywhere, forget-gate bias 1.
    static FusionNetwork initialized(const NetworkShape& shape, std::uint64_t seed);

    friend bool operator==(const FusionNetwork&, const FusionNetwork&) = default;
};

// Gradients share the network's layout.
using Gradients = FusionNetwork;

// Visits every learnable tensor in a fixed order. Shape metadata is not
// visited. Works on const and non-const networks.
template <class Net, class Fn>
    requires std::same_as<std::remove_const_t<Net>, FusionNetwork>
void for_each_parameter(Net& net, Fn&& fn) {
    fn("lstm.w_forget", net.lstm.w_forget.values());
    fn("lstm.w_input", net.lstm.w_input.values());
    fn("lstm.w_candidate", net.lstm.w_candidate.values());
    fn("lstm.w_output", net.lstm.w_output.values());
    fn("lstm.b_forget", std::span(net.lstm.b_forget));
    fn("lstm.b_input", std::span(net.lstm.b_input));
    fn("lstm.b_candidate", std::span(net.lstm.b_candidate));
    fn("lstm.b_output", std::span(net.lstm.b_output));
    fn("conv.kernels", net.conv.kernels.values());
    fn("conv.biases", std::span(net.conv.biases));
    fn("fusion.w_conv", std::span(net.fusion.w_conv));
    fn("fusion.w_lstm", std::span(net.fusion.w_lstm));
    fn("fusion.bias", std::span(&net.fusion.bias, 1));
}

inline std::size_t parameter_count(const FusionNetwork& net) {
    std::size_t n = 0;
    for_each_parameter(net, [&](std::string_view, std::span<const double> p) { n += p.size(); });
    return n;
}

inline FusionNetwork zeros_like(const FusionNetwork& net) {
    FusionNetwork out = net;
    for_each_parameter(out, [](std::string_view, std::span<double> p) {
        std::fill(p.begin(), p.end(), 0.0);
    });
    return out;
}

inline FusionNetwork FusionNetwork::initialized(const NetworkShape& shape, std::uint64_t seed) {
    FusionNetwork net = zeros(shape);
    detail::Rng rng(seed, 0);
    const auto fill = [&](std::span<double> values, std::size_t fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : values) {
            v = rng.uniform(-s, s);
        }
    };
    const std::size_t lstm_fan = shape.hidden + kFeatureCount;
    const std::size_t conv_fan = (2 * shape.half_width + 1) * kFeatureCount;
    const std::size_t head_fan = shape.hidden + shape.filters;
    fill(net.lstm.w_forget.values(), lstm_fan);
    fill(net.lstm.w_input.values(), lstm_fan);
    fill(net.lstm.w_candidate.values(), lstm_fan);
    fill(net.lstm.w_output.values(), lstm_fan);
    std::fill(net.lstm.b_forget.begin(), net.lstm.b_forget.end(), 1.0);
    fill(net.lstm.b_input, lstm_fan);
    fill(net.lstm.b_candidate, lstm_fan);
    fill(net.lstm.b_output, lstm_fan);
    fill(net.conv.kernels.values(), conv_fan);
    fill(net.conv.biases, conv_fan);
    fill(net.fusion.w_conv, head_fan);
    fill(net.fusion.w_lstm, head_fan);
    fill(std::span(&net.fusion.bias, 1), head_fan);
    return net;
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

struct LstmStepCache {
    Vector z;  // [h_{t-1}, x_t]
    Vector f, i, g, o;
    Vector c_prev, c, tanh_c;
};

struct LstmCache {
    std::vector<LstmStepCache> steps;
};

namespace detail {

// out = W z + b
inline void affine(const Matrix& w, const Vector& b, const Vector& z, Vector& out) {
    out.resize(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const auto row = w.row(r);
        double s = b[r];
        for (std::size_t k = 0; k < row.size(); ++k) {
            s += row[k] * z[k];
        }
        out[r] = s;
    }
}

inline void check_lstm_shapes(const LstmParams& p) {
    const std::size_t cols = p.hidden + p.inputs;
    for (const auto* w : {&p.w_forget, &p.w_input, &p.w_candidate, &p.w_output}) {
        require(w->rows() == p.hidden && w->cols() == cols, "lstm weight shape mismatch");
    }
    for (const auto* b : {&p.b_forget, &p.b_input, &p.b_candidate, &p.b_output}) {
        require(b->size() == p.hidden, "lstm bias shape mismatch");
    }
}

inline LstmStepCache lstm_step_cached(const LstmParams& p, std::span<const double> x,
                                      const LstmState& state) {
    require(x.size() == p.inputs, "lstm input size mismatch");
    require(state.h.size() == p.hidden && state.c.size() == p.hidden,
            "lstm state size mismatch");
    require(all_finite(x), "non-finite lstm input");

    LstmStepCache s;
    s.z.resize(p.hidden + p.inputs);
    std::copy(state.h.begin(), state.h.end(), s.z.begin());
    std::copy(x.begin(), x.end(), s.z.begin() + static_cast<long>(p.hidden));
    affine(p.w_forget, p.b_forget, s.z, s.f);
    affine(p.w_input, p.b_input, s.z, s.i);
    affine(p.w_candidate, p.b_candidate, s.z, s.g);
    affine(p.w_output, p.b_output, s.z, s.o);
    s.c_prev = state.c;
    s.c.resize(p.hidden);
    s.tanh_c.resize(p.hidden);
    for (std::size_t k = 0; k < p.hidden; ++k) {
        s.f[k] = sigmoid(s.f[k]);
        s.i[k] = sigmoid(s.i[k]);
        s.g[k] = std::tanh(s.g[k]);
        s.o[k] = sigmoid(s.o[k]);
        s.c[k] = s.f[k] * s.c_prev[k] + s.i[k] * s.g[k];
        s.tanh_c[k] = std::tanh(s.c[k]);
    }
    return s;
}

} // namespace detail

inline LstmState lstm_step(const LstmParams& params, std::span<const double> x,
                           const LstmState& state) {
    detail::check_lstm_shapes(params);
    auto s = detail::lstm_step_cached(params, x, state);
    LstmState next{Vector(params.hidden), std::move(s.c)};
    for (std::size_t k = 0; k < params.hidden; ++k) {
        next.h[k] = s.o[k] * s.tanh_c[k];
    }
    return next;
}

// Runs the window from a zero state; returns h_L and the per-step cache.
inline std::pair<Vector, LstmCache> lstm_forward(const LstmParams& params, const Matrix& window,
                                                 std::size_t expected_rows) {
    detail::check_lstm_shapes(params);
    detail::require(window.rows() == expected_rows, "window has the wrong number of rows");
    detail::require(window.cols() == params.inputs, "window has the wrong number of features");
    LstmCache cache;
    cache.steps.reserve(window.rows());
    LstmState state = LstmState::zeros(params.hidden);
    for (std::size_t t = 0; t < window.rows(); ++t) {
        auto step = detail::lstm_step_cached(params, window.row(t), state);
        state.c = step.c;
        for (std::size_t k = 0; k < params.hidden; ++k) {
            state.h[k] = step.o[k] * step.tanh_c[k];
        }
        cache.steps.push_back(std::move(step));
    }
    return {std::move(state.h), std::move(cache)};
}

inline std::pair<Vector, LstmCache> lstm_forward(const LstmParams& params, const Matrix& window) {
    return lstm_forward(params, window, window.rows());
}

// ---------------------------------------------------------------------------
// Conv1D + pooling + fusion head
// ---------------------------------------------------------------------------

struct ConvCache {
    Matrix pre;  // L' x K before activation
};

// Valid cross-correlation: output row t sees input rows t .. t+2k.
inline std::pair<Matrix, ConvCache> conv1d_forward(const ConvParams& params, const Matrix& window) {
    const std::size_t taps = params.taps();
    detail::require(params.kernels.cols() == taps * params.inputs &&
                        params.biases.size() == params.filters(),
                    "conv parameter shape mismatch");
    detail::require(window.cols() == params.inputs, "window has the wrong number of features");
    detail::require(window.rows() >= taps, "window shorter than kernel");

    const std::size_t out_len = window.rows() - 2 * params.half_width;
    ConvCache cache{Matrix(out_len, params.filters())};
    Matrix out(out_len, params.filters());
    for (std::size_t t = 0; t < out_len; ++t) {
        for (std::size_t f = 0; f < params.filters(); ++f) {
            const auto w = params.kernels.row(f);
            double s = params.biases[f];
            for (std::size_t j = 0; j < taps; ++j) {
                const auto x = window.row(t + j);
                for (std::size_t c = 0; c < params.inputs; ++c) {
                    s += w[j * params.inputs + c] * x[c];
                }
            }
            cache.pre(t, f) = s;
            out(t, f) = detail::activate(params.activation, s);
        }
    }
    return {std::move(out), std::move(cache)};
}

inline Vector temporal_pool(const Matrix& features) {
    detail::require(features.rows() >= 1, "cannot pool an empty feature sequence");
    Vector pooled(features.cols(), 0.0);
    for (std::size_t t = 0; t < features.rows(); ++t) {
        for (std::size_t f = 0; f < features.cols(); ++f) {
            pooled[f] += features(t, f);
        }
    }
    for (auto& v : pooled) {
        v /= static_cast<double>(features.rows());
    }
    return pooled;
}

inline double fusion_linear(const FusionParams& params, std::span<const double> x_conv,
                            std::span<const double> h) {
    detail::require(x_conv.size() == params.w_conv.size() && h.size() == params.w_lstm.size(),
                    "fusion input shape mismatch");
    double y = params.bias;
    for (std::size_t k = 0; k < x_conv.size(); ++k) {
        y += params.w_conv[k] * x_conv[k];
    }
    for (std::size_t k = 0; k < h.size(); ++k) {
        y += params.w_lstm[k] * h[k];
    }
    return y;
}

inline double fusion_forward(const FusionParams& params, std::span<const double> x_conv,
                             std::span<const double> h) {
    return detail::activate(params.output_activation, fusion_linear(params, x_conv, h));
}

// ---------------------------------------------------------------------------
// Whole network
// ---------------------------------------------------------------------------

struct ForwardCache {
    Matrix window;
    LstmCache lstm;
    Vector h;
    Matrix conv_out;
    ConvCache conv;
    Vector pooled;
    double pre_output = 0.0;
    double prediction = 0.0;
};

inline void check_window(const FusionNetwork& net, const Matrix& window) {
    if (window.rows() != net.window_length || window.cols() != kFeatureCount) {
        throw ValidationError("window shape " + std::to_string(window.rows()) + "x" +
                              std::to_string(window.cols()) + " does not match network " +
                              std::to_string(net.window_length) + "x" +
                              std::to_string(kFeatureCount));
    }
}

inline std::pair<double, ForwardCache> forward(const FusionNetwork& net, const Matrix& window) {
    check_window(net, window);
    ForwardCache cache;
    cache.window = window;
    std::tie(cache.h, cache.lstm) = lstm_forward(net.lstm, window, net.window_length);
    std::tie(cache.conv_out, cache.conv) = conv1d_forward(net.conv, window);
    cache.pooled = temporal_pool(cache.conv_out);
    cache.pre_output = fusion_linear(net.fusion, cache.pooled, cache.h);
    cache.prediction = detail::activate(net.fusion.output_activation, cache.pre_output);
    return {cache.prediction, std::move(cache)};
}

inline double predict(const FusionNetwork& net, const Matrix& window) {
    return forward(net, window).first;
}

inline std::vector<double> predict_series(const FusionNetwork& net,
                                          const std::vector<Window>& windows) {
    std::vector<double> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        out.push_back(predict(net, w.input));
    }
    return out;
}

inline double loss_mse(double prediction, double target) {
    const double d = prediction - target;
    return d * d;
}

inline double loss_mse_grad(double prediction, double target) {
    return 2.0 * (prediction - target);
}

namespace detail {

// Accumulates d(loss)/d(params) for one sample into `grads`, scaled by `scale`.
inline void accumulate_gradients(const FusionNetwork& net, const ForwardCache& cache,
                                 double target, double scale, Gradients& grads) {
    const std::size_t H = net.lstm.hidden;
    const std::size_t K = net.conv.filters();
    const std::size_t F = net.conv.inputs;
    const std::size_t taps = net.conv.taps();

    const double d_pred = scale * loss_mse_grad(cache.prediction, target);
    const double d_lin =
        d_pred * activate_grad(net.fusion.output_activation, cache.pre_output, cache.prediction);

    // Head.
    grads.fusion.bias += d_lin;
    for (std::size_t k = 0; k < K; ++k) {
        grads.fusion.w_conv[k] += d_lin * cache.pooled[k];
    }
    for (std::size_t k = 0; k < H; ++k) {
        grads.fusion.w_lstm[k] += d_lin * cache.h[k];
    }

    // Conv branch through mean pooling.
    const std::size_t out_len = cache.conv_out.rows();
    const double inv_len = 1.0 / static_cast<double>(out_len);
    for (std::size_t t = 0; t < out_len; ++t) {
        for (std::size_t f = 0; f < K; ++f) {
            const double d_out = d_lin * net.fusion.w_conv[f] * inv_len;
            const double d_pre =
                d_out * activate_grad(net.conv.activation, cache.conv.pre(t, f), cache.conv_out(t, f));
            if (d_pre == 0.0) {
                continue;
            }
            grads.conv.biases[f] += d_pre;
            auto gw = grads.conv.kernels.row(f);
            for (std::size_t j = 0; j < taps; ++j) {
                const auto x = cache.window.row(t + j);
                for (std::size_t c = 0; c < F; ++c) {
                    gw[j * F + c] += d_pre * x[c];
                }
            }
        }
    }

    // LSTM branch, backpropagation through time.
    Vector dh(H);
    for (std::size_t k = 0; k < H; ++k) {
        dh[k] = d_lin * net.fusion.w_lstm[k];
    }
    Vector dc(H, 0.0);
    Vector da_f(H), da_i(H), da_g(H), da_o(H);
    const std::size_t cols = H + net.lstm.inputs;
    for (std::size_t step = cache.lstm.steps.size(); step-- > 0;) {
        const auto& s = cache.lstm.steps[step];
        for (std::size_t k = 0; k < H; ++k) {
            const double d_o = dh[k] * s.tanh_c[k];
            dc[k] += dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
            const double d_f = dc[k] * s.c_prev[k];
            const double d_i = dc[k] * s.g[k];
            const double d_g = dc[k] * s.i[k];
            da_f[k] = d_f * s.f[k] * (1.0 - s.f[k]);
            da_i[k] = d_i * s.i[k] * (1.0 - s.i[k]);
            da_g[k] = d_g * (1.0 - s.g[k] * s.g[k]);
            da_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
            dc[k] *= s.f[k];  // becomes dC_{t-1}
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        const auto backprop_gate = [&](const Matrix& w, Matrix& gw, Vector& gb, const Vector& da) {
            for (std::size_t r = 0; r < H; ++r) {
                const double a = da[r];
                if (a == 0.0) {
                    continue;
                }
                gb[r] += a;
                auto grow = gw.row(r);
                const auto wrow = w.row(r);
                for (std::size_t k = 0; k < cols; ++k) {
                    grow[k] += a * s.z[k];
                }
                for (std::size_t k = 0; k < H; ++k) {
                    dh[k] += wrow[k] * a;
                }
            }
        };
        backprop_gate(net.lstm.w_forget, grads.lstm.w_forget, grads.lstm.b_forget, da_f);
        backprop_gate(net.lstm.w_input, grads.lstm.w_input, grads.lstm.b_input, da_i);
        backprop_gate(net.lstm.w_candidate, grads.lstm.w_candidate, grads.lstm.b_candidate, da_g);
        backprop_gate(net.lstm.w_output, grads.lstm.w_output, grads.lstm.b_output, da_o);
    }
}

} // namespace detail

// Exact gradients of loss_mse(forward(window), target) for every parameter.
inline Gradients backward(const FusionNetwork& net, const Matrix& window, double target,
                          const ForwardCache& cache) {
    check_window(net, window);
    if (!(cache.window == window) || cache.lstm.steps.size() != net.window_length ||
        cache.h.size() != net.lstm.hidden || cache.pooled.size() != net.conv.filters()) {
        throw ValidationError("stale or mismatched forward cache");
    }
    Gradients grads = zeros_like(net);
    detail::accumulate_gradients(net, cache, target, 1.0, grads);
    return grads;
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    AdamConfig config;
    FusionNetwork first_moment;
    FusionNetwork second_moment;
    std::uint64_t step = 0;

    static OptimizerState for_network(const FusionNetwork& net, AdamConfig config = {}) {
        return {config, zeros_like(net), zeros_like(net), 0};
    }
};

inline void optimizer_step(FusionNetwork& net, const Gradients& grads, OptimizerState& state) {
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> gs;
    std::vector<std::span<double>> ms;
    std::vector<std::span<double>> vs;
    for_each_parameter(net, [&](std::string_view, std::span<double> p) { params.push_back(p); });
    for_each_parameter(grads, [&](std::string_view, std::span<const double> g) { gs.push_back(g); });
    for_each_parameter(state.first_moment, [&](std::string_view, std::span<double> m) { ms.push_back(m); });
    for_each_parameter(state.second_moment, [&](std::string_view, std::span<double> v) { vs.push_back(v); });
    for (std::size_t t = 0; t < params.size(); ++t) {
        detail::require(params[t].size() == gs[t].size() && params[t].size() == ms[t].size() &&
                            params[t].size() == vs[t].size(),
                        "optimizer shape mismatch");
    }

    ++state.step;
    const auto& cfg = state.config;
    const double step = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, step);
    const double correction2 = 1.0 - std::pow(cfg.beta2, step);
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t k = 0; k < params[t].size(); ++k) {
            const double g = gs[t][k];
            double& m = ms[t][k];
            double& v = vs[t][k];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            const double m_hat = m / correction1;
            const double v_hat = v / correction2;
            params[t][k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
};

struct TrainResult {
    FusionNetwork network;
    std::vector<double> loss_history;  // mean per-sample loss of each epoch
};

// Mini-batch Adam over a shuffled window order (reshuffled every epoch).
inline TrainResult train(FusionNetwork net, const WindowedDataset& dataset,
                         const TrainConfig& config) {
    detail::require(!dataset.empty(), "cannot train on an empty dataset");
    detail::require(config.epochs >= 1 && config.batch_size >= 1,
                    "epochs and batch size must be positive");
    detail::require(config.learning_rate > 0.0, "learning rate must be positive");
    for (const auto& w : dataset.windows) {
        check_window(net, w.input);
    }

    OptimizerState opt = OptimizerState::for_network(net, AdamConfig{config.learning_rate});
    detail::Rng rng(config.seed, 1);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.loss_history.reserve(config.epochs);
    Gradients grads = zeros_like(net);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const double scale = 1.0 / static_cast<double>(end - begin);
            for_each_parameter(grads, [](std::string_view, std::span<double> g) {
                std::fill(g.begin(), g.end(), 0.0);
            });
            for (std::size_t b = begin; b < end; ++b) {
                const auto& w = dataset.windows[order[b]];
                const auto [pred, cache] = forward(net, w.input);
                const double loss = loss_mse(pred, w.target);
                if (!std::isfinite(loss)) {
                    throw RuntimeFailure("non-finite training loss at epoch " +
                                         std::to_string(epoch + 1) + ", window " +
                                         std::to_string(order[b]));
                }
                epoch_loss += loss;
                detail::accumulate_gradients(net, cache, w.target, scale, grads);
            }
            optimizer_step(net, grads, opt);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    result.network = std::move(net);
    return result;
}

} // namespace stockcast
