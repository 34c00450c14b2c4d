#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "btlab/rng.hpp"

namespace btlab::nn {

using Mat = Eigen::MatrixXd;

// Named view of one parameter matrix and its gradient accumulator.
struct ParamRef {
    std::string name;
    Mat* value;
    Mat* grad;
};

// Fused-gate LSTM parameters. w stacks the four gate blocks [i; f; g; o]
// (h rows each) over the concatenated input [x; h_prev], so
// w is 4h x (d + h) and b is 4h x 1. Parameter count: 4h(h + d + 1).
struct LstmParams {
    Mat w;
    Mat b;

    int hidden() const { return static_cast<int>(b.rows()) / 4; }
    int input() const { return static_cast<int>(w.cols()) - hidden(); }
    std::int64_t count() const { return w.size() + b.size(); }

    // Glorot-uniform weights filled in storage order from rng; zero biases
    // except the forget gate block, which starts at 1.
    static LstmParams init(int hidden, int input, Rng& rng);
    static LstmParams zeros(int hidden, int input);
};

// Per-sequence activation record; shapes: xh (d+h) x B, gates h x B.
struct LstmCache {
    std::vector<Mat> xh;      // [x_t; h_{t-1}]
    std::vector<Mat> c_prev;
    std::vector<Mat> gi, gf, gg, go;
    std::vector<Mat> tc;      // tanh(c_t)
    std::vector<Mat> h;       // outputs
    int steps() const { return static_cast<int>(h.size()); }
};

// Standard LSTM recurrence (sigmoid gates, tanh candidate and cell output)
// over inputs[t] of shape d x B, starting from zero state. Fills the cache
// needed for an exact backward pass; parameters are never mutated.
void lstm_forward(const LstmParams& params, const std::vector<Mat>& inputs, LstmCache& cache);

// Exact BPTT. dh_out[t] is the upstream gradient on h_t (h x B). Gradients
// accumulate into grads (caller zeroes them); dx, when non-null, receives
// gradients w.r.t. the inputs.
void lstm_backward(const LstmParams& params, const LstmCache& cache,
                   const std::vector<Mat>& dh_out, LstmParams& grads,
                   std::vector<Mat>* dx = nullptr);

// Bidirectional pass: forward LSTM over inputs, backward LSTM over the
// reversed sequence. The step-t state is [h_fwd_t ; h_bwd aligned to t],
// width 2h.
struct BiLstmCache {
    LstmCache fwd;
    LstmCache bwd;  // step k holds original position T-1-k
};

void bilstm_forward(const LstmParams& fwd, const LstmParams& bwd, const std::vector<Mat>& inputs,
                    BiLstmCache& cache);
Mat bilstm_state(const BiLstmCache& cache, int t);  // 2h x B

// d_state[t] is the upstream gradient on the concatenated step-t state.
void bilstm_backward(const LstmParams& fwd, const LstmParams& bwd, const BiLstmCache& cache,
                     const std::vector<Mat>& d_state, LstmParams& fwd_grads,
                     LstmParams& bwd_grads, std::vector<Mat>* dx = nullptr);

// out x in affine map.
struct DenseParams {
    Mat w;
    Mat b;  // out x 1; zero-sized when bias-free
    bool has_bias() const { return b.size() > 0; }
    std::int64_t count() const { return w.size() + b.size(); }
    static DenseParams init(int out, int in, bool bias, Rng& rng);
    static DenseParams zeros(int out, int in, bool bias);
};

Mat dense_forward(const DenseParams& params, const Mat& x);
// Returns dx; accumulates into grads.
Mat dense_backward(const DenseParams& params, const Mat& x, const Mat& dy, DenseParams& grads);

// Adaptive moment estimation with bias correction.
struct OptimState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Mat> m, v;  // one slot per parameter, same shapes

    static OptimState create(const std::vector<ParamRef>& params, double lr,
                             double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
};

// One update. Throws TrainingError on non-finite gradients.
void optim_step(std::vector<ParamRef>& params, OptimState& state);

void zero_grads(std::vector<ParamRef>& params);

double grad_global_norm(const std::vector<ParamRef>& params);

// Scales all gradients so the global norm does not exceed max_norm.
void clip_grads(std::vector<ParamRef>& params, double max_norm);

// Central-finite-difference check of the analytic gradients.
// loss() evaluates the scalar objective at the current parameters;
// compute_grads() must fill the ParamRef grads for that objective.
// Returns max |a - n| / max(|a|, |n|, 1e-8) over every parameter element.
double grad_check(std::vector<ParamRef>& params, const std::function<double()>& loss,
                  const std::function<void()>& compute_grads, double step = 1e-5);

enum class Architecture { Generator, Discriminator };

// Closed-form parameter counts for the two network stacks:
// generator = 4h(h+7) + (h+1) (LSTM over width-6 input plus a biased h->1
// head); discriminator = 2 * 4h(h+3) + 4h (bidirectional LSTM over width-2
// input plus a bias-free 2 x 2h head).
std::int64_t count_params(Architecture arch, int hidden);

}  // namespace btlab::nn
