#include "btlab/nn.hpp"

#include <cmath>

#include "btlab/errors.hpp"

namespace btlab::nn {

namespace {

void fill_glorot(Mat& m, int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    double* p = m.data();
    for (Eigen::Index k = 0; k < m.size(); ++k) p[k] = rng.uniform(-bound, bound);
}

}  // namespace

LstmParams LstmParams::init(int hidden, int input, Rng& rng) {
    LstmParams p = zeros(hidden, input);
    fill_glorot(p.w, input + hidden, hidden, rng);
    p.b.block(hidden, 0, hidden, 1).setOnes();  // forget gate
    return p;
}

LstmParams LstmParams::zeros(int hidden, int input) {
    LstmParams p;
    p.w = Mat::Zero(4 * hidden, input + hidden);
    p.b = Mat::Zero(4 * hidden, 1);
    return p;
}

void lstm_forward(const LstmParams& params, const std::vector<Mat>& inputs, LstmCache& cache) {
    const int h = params.hidden();
    const int d = params.input();
    const int T = static_cast<int>(inputs.size());
    if (T == 0) throw ValidationError("lstm_forward: empty input sequence");
    const Eigen::Index batch = inputs[0].cols();
    for (const auto& x : inputs)
        if (x.rows() != d || x.cols() != batch)
            throw ValidationError("lstm_forward: input width does not match parameters");

    auto resize_all = [&](std::vector<Mat>& v, Eigen::Index rows) {
        v.resize(T);
        for (auto& m : v) m.resize(rows, batch);
    };
    resize_all(cache.xh, d + h);
    resize_all(cache.c_prev, h);
    resize_all(cache.gi, h);
    resize_all(cache.gf, h);
    resize_all(cache.gg, h);
    resize_all(cache.go, h);
    resize_all(cache.tc, h);
    resize_all(cache.h, h);

    Mat z(4 * h, batch);
    Mat c = Mat::Zero(h, batch);
    Mat h_prev = Mat::Zero(h, batch);
    for (int t = 0; t < T; ++t) {
        cache.xh[t].topRows(d) = inputs[t];
        cache.xh[t].bottomRows(h) = h_prev;
        cache.c_prev[t] = c;
        z.noalias() = params.w * cache.xh[t];
        z.colwise() += params.b.col(0);
        cache.gi[t] = z.topRows(h).array().logistic();
        cache.gf[t] = z.middleRows(h, h).array().logistic();
        cache.gg[t] = z.middleRows(2 * h, h).array().tanh();
        cache.go[t] = z.bottomRows(h).array().logistic();
        c = (cache.gf[t].array() * c.array() + cache.gi[t].array() * cache.gg[t].array()).matrix();
        cache.tc[t] = c.array().tanh();
        cache.h[t] = (cache.go[t].array() * cache.tc[t].array()).matrix();
        h_prev = cache.h[t];
    }
}

void lstm_backward(const LstmParams& params, const LstmCache& cache,
                   const std::vector<Mat>& dh_out, LstmParams& grads, std::vector<Mat>* dx) {
    const int h = params.hidden();
    const int d = params.input();
    const int T = cache.steps();
    if (static_cast<int>(dh_out.size()) != T)
        throw ValidationError("lstm_backward: dh_out length must match the cached steps");
    if (grads.w.rows() != params.w.rows() || grads.w.cols() != params.w.cols())
        throw ValidationError("lstm_backward: gradient shapes must match parameters");
    const Eigen::Index batch = cache.h[0].cols();
    if (dx) {
        dx->resize(T);
        for (auto& m : *dx) m.resize(d, batch);
    }

    Mat dh(h, batch), dc = Mat::Zero(h, batch), dz(4 * h, batch), dxh(d + h, batch);
    Mat carry_dh = Mat::Zero(h, batch);
    for (int t = T - 1; t >= 0; --t) {
        dh = dh_out[t] + carry_dh;
        const auto& gi = cache.gi[t];
        const auto& gf = cache.gf[t];
        const auto& gg = cache.gg[t];
        const auto& go = cache.go[t];
        const auto& tc = cache.tc[t];
        dc.array() += dh.array() * go.array() * (1.0 - tc.array().square());
        dz.bottomRows(h) = (dh.array() * tc.array() * go.array() * (1.0 - go.array())).matrix();
        dz.topRows(h) = (dc.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
        dz.middleRows(h, h) =
            (dc.array() * cache.c_prev[t].array() * gf.array() * (1.0 - gf.array())).matrix();
        dz.middleRows(2 * h, h) = (dc.array() * gi.array() * (1.0 - gg.array().square())).matrix();
        grads.w.noalias() += dz * cache.xh[t].transpose();
        grads.b.col(0) += dz.rowwise().sum();
        dxh.noalias() = params.w.transpose() * dz;
        if (dx) (*dx)[t] = dxh.topRows(d);
        carry_dh = dxh.bottomRows(h);
        dc.array() *= gf.array();
    }
}

void bilstm_forward(const LstmParams& fwd, const LstmParams& bwd, const std::vector<Mat>& inputs,
                    BiLstmCache& cache) {
    if (fwd.hidden() != bwd.hidden())
        throw ValidationError("bilstm_forward: direction hidden sizes must match");
    lstm_forward(fwd, inputs, cache.fwd);
    std::vector<Mat> reversed(inputs.rbegin(), inputs.rend());
    lstm_forward(bwd, reversed, cache.bwd);
}

Mat bilstm_state(const BiLstmCache& cache, int t) {
    const int T = cache.fwd.steps();
    const Eigen::Index h = cache.fwd.h[0].rows();
    Mat s(2 * h, cache.fwd.h[0].cols());
    s.topRows(h) = cache.fwd.h[t];
    s.bottomRows(h) = cache.bwd.h[T - 1 - t];
    return s;
}

void bilstm_backward(const LstmParams& fwd, const LstmParams& bwd, const BiLstmCache& cache,
                     const std::vector<Mat>& d_state, LstmParams& fwd_grads,
                     LstmParams& bwd_grads, std::vector<Mat>* dx) {
    const int T = cache.fwd.steps();
    const Eigen::Index h = cache.fwd.h[0].rows();
    std::vector<Mat> dh_fwd(T), dh_bwd(T);
    for (int t = 0; t < T; ++t) {
        dh_fwd[t] = d_state[t].topRows(h);
        dh_bwd[T - 1 - t] = d_state[t].bottomRows(h);
    }
    std::vector<Mat> dx_fwd, dx_bwd;
    lstm_backward(fwd, cache.fwd, dh_fwd, fwd_grads, dx ? &dx_fwd : nullptr);
    lstm_backward(bwd, cache.bwd, dh_bwd, bwd_grads, dx ? &dx_bwd : nullptr);
    if (dx) {
        dx->resize(T);
        for (int t = 0; t < T; ++t) (*dx)[t] = dx_fwd[t] + dx_bwd[T - 1 - t];
    }
}

DenseParams DenseParams::init(int out, int in, bool bias, Rng& rng) {
    DenseParams p = zeros(out, in, bias);
    fill_glorot(p.w, in, out, rng);
    return p;
}

DenseParams DenseParams::zeros(int out, int in, bool bias) {
    DenseParams p;
    p.w = Mat::Zero(out, in);
    p.b = bias ? Mat::Zero(out, 1) : Mat(0, 0);
    return p;
}

Mat dense_forward(const DenseParams& params, const Mat& x) {
    if (x.rows() != params.w.cols())
        throw ValidationError("dense_forward: input width does not match parameters");
    Mat y = params.w * x;
    if (params.has_bias()) y.colwise() += params.b.col(0);
    return y;
}

Mat dense_backward(const DenseParams& params, const Mat& x, const Mat& dy, DenseParams& grads) {
    grads.w.noalias() += dy * x.transpose();
    if (params.has_bias()) grads.b.col(0) += dy.rowwise().sum();
    return params.w.transpose() * dy;
}

OptimState OptimState::create(const std::vector<ParamRef>& params, double lr, double beta1,
                              double beta2, double eps) {
    OptimState s;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    for (const auto& p : params) {
        s.m.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
        s.v.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
    }
    return s;
}

void optim_step(std::vector<ParamRef>& params, OptimState& state) {
    if (params.size() != state.m.size())
        throw ValidationError("optim_step: state does not match the parameter list");
    for (const auto& p : params)
        if (!p.grad->allFinite()) throw TrainingError("non-finite gradient in " + p.name);
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const Mat& g = *params[k].grad;
        Mat& m = state.m[k];
        Mat& v = state.v[k];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = (state.beta2 * v.array() + (1.0 - state.beta2) * g.array().square()).matrix();
        params[k].value->array() -=
            state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.eps);
    }
}

void zero_grads(std::vector<ParamRef>& params) {
    for (auto& p : params) p.grad->setZero();
}

double grad_global_norm(const std::vector<ParamRef>& params) {
    double ss = 0.0;
    for (const auto& p : params) ss += p.grad->squaredNorm();
    return std::sqrt(ss);
}

void clip_grads(std::vector<ParamRef>& params, double max_norm) {
    const double norm = grad_global_norm(params);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& p : params) *p.grad *= scale;
    }
}

double grad_check(std::vector<ParamRef>& params, const std::function<double()>& loss,
                  const std::function<void()>& compute_grads, double step) {
    compute_grads();
    std::vector<Mat> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(*p.grad);

    double max_rel = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Mat& value = *params[k].value;
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            const double saved = value.data()[i];
            value.data()[i] = saved + step;
            const double up = loss();
            value.data()[i] = saved - step;
            const double down = loss();
            value.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[k].data()[i];
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

std::int64_t count_params(Architecture arch, int hidden) {
    if (hidden < 1) throw ValidationError("hidden size must be >= 1");
    const std::int64_t h = hidden;
    if (arch == Architecture::Generator) return 4 * h * (h + 7) + (h + 1);
    return 2 * 4 * h * (h + 3) + 4 * h;
}

}  // namespace btlab::nn
