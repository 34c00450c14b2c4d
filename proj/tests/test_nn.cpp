#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "btlab/errors.hpp"
#include "btlab/nn.hpp"
#include "btlab/rng.hpp"

using namespace btlab;
using nn::Mat;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void randomize(Mat& m, Rng& rng, double scale = 0.5) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
}

bool bits_equal(const Mat& a, const Mat& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

// Quadratic loss of an LSTM's hidden outputs against fixed targets; the
// independent finite-difference oracle drives every gradient check here.
struct LstmFixture {
    nn::LstmParams params, grads;
    std::vector<Mat> inputs;
    std::vector<Mat> targets;

    LstmFixture(int h, int d, int T, int batch, std::uint64_t seed)
        : params(nn::LstmParams::zeros(h, d)), grads(nn::LstmParams::zeros(h, d)) {
        Rng rng(seed);
        randomize(params.w, rng);
        randomize(params.b, rng, 0.2);
        inputs.resize(T);
        targets.resize(T);
        for (auto& x : inputs) {
            x.resize(d, batch);
            randomize(x, rng, 1.0);
        }
        for (auto& y : targets) {
            y.resize(h, batch);
            randomize(y, rng, 1.0);
        }
    }

    double loss() const {
        nn::LstmCache cache;
        nn::lstm_forward(params, inputs, cache);
        double total = 0.0;
        for (std::size_t t = 0; t < targets.size(); ++t)
            total += 0.5 * (cache.h[t] - targets[t]).squaredNorm();
        return total;
    }

    void compute_grads() {
        grads.w.setZero();
        grads.b.setZero();
        nn::LstmCache cache;
        nn::lstm_forward(params, inputs, cache);
        std::vector<Mat> dh(targets.size());
        for (std::size_t t = 0; t < targets.size(); ++t) dh[t] = cache.h[t] - targets[t];
        nn::lstm_backward(params, cache, dh, grads);
    }
};

}  // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("count_params reproduces the reference table") {
    CHECK(nn::count_params(nn::Architecture::Generator, 10) == 691);
    CHECK(nn::count_params(nn::Architecture::Generator, 50) == 11451);
    CHECK(nn::count_params(nn::Architecture::Generator, 100) == 42901);
    CHECK(nn::count_params(nn::Architecture::Discriminator, 10) == 1080);
    CHECK(nn::count_params(nn::Architecture::Discriminator, 50) == 21400);
    CHECK(nn::count_params(nn::Architecture::Discriminator, 100) == 82800);
}

TEST_CASE("LstmParams shape bookkeeping") {
    const auto p = nn::LstmParams::zeros(4, 3);
    CHECK(p.hidden() == 4);
    CHECK(p.input() == 3);
    CHECK(p.count() == 4 * 4 * (4 + 3 + 1));
}

TEST_CASE("zero parameters give all-zero hidden states") {
    auto params = nn::LstmParams::zeros(3, 2);
    std::vector<Mat> inputs(4, Mat::Ones(2, 5));
    nn::LstmCache cache;
    nn::lstm_forward(params, inputs, cache);
    for (const auto& h : cache.h) CHECK(h.isZero(0.0));
}

TEST_CASE("one timestep equals a hand-evaluated gated cell") {
    // h = 2, d = 1, fused gate rows [i; f; g; o]
    auto params = nn::LstmParams::zeros(2, 1);
    Rng rng(12);
    randomize(params.w, rng);
    randomize(params.b, rng);
    std::vector<Mat> inputs(1, Mat::Constant(1, 1, 0.7));
    nn::LstmCache cache;
    nn::lstm_forward(params, inputs, cache);
    for (int r = 0; r < 2; ++r) {
        // h_prev = c_prev = 0, so only the input column of w matters
        const double zi = params.w(r, 0) * 0.7 + params.b(r, 0);
        const double zf = params.w(2 + r, 0) * 0.7 + params.b(2 + r, 0);
        const double zg = params.w(4 + r, 0) * 0.7 + params.b(4 + r, 0);
        const double zo = params.w(6 + r, 0) * 0.7 + params.b(6 + r, 0);
        (void)zf;  // forget gate acts on a zero cell
        const double c = sigmoid(zi) * std::tanh(zg);
        const double expected = sigmoid(zo) * std::tanh(c);
        CHECK(cache.h[0](r, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("forward pass never mutates parameters") {
    LstmFixture fx(3, 2, 4, 2, 5);
    const Mat w = fx.params.w, b = fx.params.b;
    (void)fx.loss();
    CHECK(bits_equal(fx.params.w, w));
    CHECK(bits_equal(fx.params.b, b));
}

TEST_CASE("LSTM gradients match central finite differences") {
    LstmFixture fx(4, 3, 5, 2, 42);
    std::vector<nn::ParamRef> refs{{"w", &fx.params.w, &fx.grads.w},
                                   {"b", &fx.params.b, &fx.grads.b}};
    const double err = nn::grad_check(
        refs, [&] { return fx.loss(); }, [&] { fx.compute_grads(); }, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("LSTM input gradients match finite differences") {
    LstmFixture fx(3, 2, 4, 1, 43);
    std::vector<Mat> dx_grads(fx.inputs.size(), Mat::Zero(2, 1));
    auto compute = [&] {
        fx.grads.w.setZero();
        fx.grads.b.setZero();
        nn::LstmCache cache;
        nn::lstm_forward(fx.params, fx.inputs, cache);
        std::vector<Mat> dh(fx.targets.size());
        for (std::size_t t = 0; t < fx.targets.size(); ++t) dh[t] = cache.h[t] - fx.targets[t];
        std::vector<Mat> dx;
        nn::lstm_backward(fx.params, cache, dh, fx.grads, &dx);
        for (std::size_t t = 0; t < dx.size(); ++t) dx_grads[t] = dx[t];
    };
    std::vector<nn::ParamRef> refs;
    for (std::size_t t = 0; t < fx.inputs.size(); ++t)
        refs.push_back({"x" + std::to_string(t), &fx.inputs[t], &dx_grads[t]});
    const double err = nn::grad_check(
        refs, [&] { return fx.loss(); }, compute, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("bidirectional stack") {
    Rng rng(7);
    auto fwd = nn::LstmParams::zeros(3, 2);
    auto bwd = nn::LstmParams::zeros(3, 2);
    randomize(fwd.w, rng);
    randomize(fwd.b, rng);
    randomize(bwd.w, rng);
    randomize(bwd.b, rng);

    SUBCASE("state width is exactly 2h") {
        std::vector<Mat> inputs(5, Mat::Zero(2, 4));
        for (auto& x : inputs) randomize(x, rng);
        nn::BiLstmCache cache;
        nn::bilstm_forward(fwd, bwd, inputs, cache);
        const Mat s = nn::bilstm_state(cache, 2);
        CHECK(s.rows() == 6);
        CHECK(s.cols() == 4);
    }
    SUBCASE("zero parameters give zero states") {
        auto zf = nn::LstmParams::zeros(3, 2), zb = nn::LstmParams::zeros(3, 2);
        std::vector<Mat> inputs(4, Mat::Ones(2, 2));
        nn::BiLstmCache cache;
        nn::bilstm_forward(zf, zb, inputs, cache);
        for (int t = 0; t < 4; ++t) CHECK(nn::bilstm_state(cache, t).isZero(0.0));
    }
    SUBCASE("palindromic input with tied params is reversal-symmetric") {
        std::vector<Mat> inputs(5);
        for (int t = 0; t < 5; ++t) {
            const double v = 0.3 * std::min(t, 4 - t);
            inputs[t] = Mat::Constant(2, 1, v);
        }
        nn::BiLstmCache cache;
        nn::bilstm_forward(fwd, fwd, inputs, cache);
        for (int t = 0; t < 5; ++t) {
            const Mat a = nn::bilstm_state(cache, t);
            const Mat b = nn::bilstm_state(cache, 4 - t);
            const Eigen::Index h = a.rows() / 2;
            // forward state at t matches backward state at the mirrored step
            CHECK((a.topRows(h) - b.bottomRows(h)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("hidden-size mismatch is rejected") {
        auto small = nn::LstmParams::zeros(2, 2);
        std::vector<Mat> inputs(3, Mat::Zero(2, 1));
        nn::BiLstmCache cache;
        CHECK_THROWS_AS(nn::bilstm_forward(fwd, small, inputs, cache), ValidationError);
    }
}

TEST_CASE("bidirectional gradients match finite differences") {
    Rng rng(11);
    auto fwd = nn::LstmParams::zeros(3, 2), fwd_g = nn::LstmParams::zeros(3, 2);
    auto bwd = nn::LstmParams::zeros(3, 2), bwd_g = nn::LstmParams::zeros(3, 2);
    randomize(fwd.w, rng);
    randomize(fwd.b, rng);
    randomize(bwd.w, rng);
    randomize(bwd.b, rng);
    std::vector<Mat> inputs(4);
    std::vector<Mat> targets(4);
    for (auto& x : inputs) {
        x.resize(2, 2);
        randomize(x, rng, 1.0);
    }
    for (auto& y : targets) {
        y.resize(6, 2);
        randomize(y, rng, 1.0);
    }
    auto loss = [&] {
        nn::BiLstmCache cache;
        nn::bilstm_forward(fwd, bwd, inputs, cache);
        double total = 0.0;
        for (int t = 0; t < 4; ++t)
            total += 0.5 * (nn::bilstm_state(cache, t) - targets[t]).squaredNorm();
        return total;
    };
    auto compute = [&] {
        fwd_g.w.setZero();
        fwd_g.b.setZero();
        bwd_g.w.setZero();
        bwd_g.b.setZero();
        nn::BiLstmCache cache;
        nn::bilstm_forward(fwd, bwd, inputs, cache);
        std::vector<Mat> d_state(4);
        for (int t = 0; t < 4; ++t) d_state[t] = nn::bilstm_state(cache, t) - targets[t];
        nn::bilstm_backward(fwd, bwd, cache, d_state, fwd_g, bwd_g);
    };
    std::vector<nn::ParamRef> refs{{"fwd.w", &fwd.w, &fwd_g.w},
                                   {"fwd.b", &fwd.b, &fwd_g.b},
                                   {"bwd.w", &bwd.w, &bwd_g.w},
                                   {"bwd.b", &bwd.b, &bwd_g.b}};
    CHECK(nn::grad_check(refs, loss, compute, 1e-5) < 1e-4);
}

TEST_CASE("dense gradients match finite differences") {
    Rng rng(3);
    auto params = nn::DenseParams::zeros(3, 4, true);
    auto grads = nn::DenseParams::zeros(3, 4, true);
    randomize(params.w, rng);
    randomize(params.b, rng);
    Mat x(4, 2), target(3, 2);
    randomize(x, rng, 1.0);
    randomize(target, rng, 1.0);
    auto loss = [&] { return 0.5 * (nn::dense_forward(params, x) - target).squaredNorm(); };
    auto compute = [&] {
        grads.w.setZero();
        grads.b.setZero();
        const Mat dy = nn::dense_forward(params, x) - target;
        nn::dense_backward(params, x, dy, grads);
    };
    std::vector<nn::ParamRef> refs{{"w", &params.w, &grads.w}, {"b", &params.b, &grads.b}};
    CHECK(nn::grad_check(refs, loss, compute, 1e-5) < 1e-6);
}

TEST_CASE("gradient of a linear map w.r.t. its input is the transpose action") {
    auto params = nn::DenseParams::zeros(2, 3, false);
    params.w << 1, 2, 3, 4, 5, 6;
    auto grads = nn::DenseParams::zeros(2, 3, false);
    Mat x = Mat::Zero(3, 1);
    Mat dy(2, 1);
    dy << 1, 1;
    const Mat dx = nn::dense_backward(params, x, dy, grads);
    CHECK(dx(0, 0) == doctest::Approx(5.0));  // 1 + 4
    CHECK(dx(1, 0) == doctest::Approx(7.0));  // 2 + 5
    CHECK(dx(2, 0) == doctest::Approx(9.0));  // 3 + 6
}

TEST_CASE("sigmoid chain of depth 5 matches the chain rule") {
    // scalar chain y = s(w5 s(w4 s(w3 s(w2 s(w1 x)))))
    std::vector<Mat> w(5, Mat::Constant(1, 1, 0.0));
    std::vector<Mat> g(5, Mat::Zero(1, 1));
    Rng rng(6);
    for (auto& m : w) m(0, 0) = rng.uniform(-1.0, 1.0);
    const double x = 0.9;
    auto forward = [&] {
        double a = x;
        for (int k = 0; k < 5; ++k) a = sigmoid(w[k](0, 0) * a);
        return a;
    };
    auto compute = [&] {
        double acts[6];
        acts[0] = x;
        for (int k = 0; k < 5; ++k) acts[k + 1] = sigmoid(w[k](0, 0) * acts[k]);
        double up = 1.0;
        for (int k = 4; k >= 0; --k) {
            const double d = acts[k + 1] * (1.0 - acts[k + 1]);
            g[k](0, 0) = up * d * acts[k];
            up = up * d * w[k](0, 0);
        }
    };
    std::vector<nn::ParamRef> refs;
    for (int k = 0; k < 5; ++k) refs.push_back({"w" + std::to_string(k), &w[k], &g[k]});
    CHECK(nn::grad_check(refs, forward, compute, 1e-5) < 1e-6);
}

TEST_CASE("grad_check on a quadratic is essentially exact") {
    Mat w = Mat::Constant(1, 1, 1.7), g = Mat::Zero(1, 1);
    auto loss = [&] { return 0.5 * w(0, 0) * w(0, 0); };
    auto compute = [&] { g(0, 0) = w(0, 0); };
    std::vector<nn::ParamRef> refs{{"w", &w, &g}};
    CHECK(nn::grad_check(refs, loss, compute, 1e-5) < 1e-9);
}

TEST_CASE("optimizer") {
    SUBCASE("zero gradients leave parameters unchanged but advance the step") {
        Mat w = Mat::Constant(2, 2, 1.0), g = Mat::Zero(2, 2);
        std::vector<nn::ParamRef> refs{{"w", &w, &g}};
        auto state = nn::OptimState::create(refs, 1e-2);
        nn::optim_step(refs, state);
        CHECK(state.step == 1);
        CHECK(bits_equal(w, Mat::Constant(2, 2, 1.0)));
    }
    SUBCASE("1-D quadratic converges within 2000 steps at lr 1e-2") {
        Mat w = Mat::Constant(1, 1, 4.0), g = Mat::Zero(1, 1);
        std::vector<nn::ParamRef> refs{{"w", &w, &g}};
        auto state = nn::OptimState::create(refs, 1e-2);
        for (int k = 0; k < 2000; ++k) {
            g(0, 0) = 2.0 * (w(0, 0) - 3.0);
            nn::optim_step(refs, state);
        }
        CHECK(std::abs(w(0, 0) - 3.0) < 1e-3);
    }
    SUBCASE("identical inputs give identical updates") {
        Mat w1 = Mat::Constant(1, 1, 2.0), g1 = Mat::Constant(1, 1, 0.3);
        Mat w2 = w1, g2 = g1;
        std::vector<nn::ParamRef> r1{{"w", &w1, &g1}}, r2{{"w", &w2, &g2}};
        auto s1 = nn::OptimState::create(r1, 1e-3);
        auto s2 = nn::OptimState::create(r2, 1e-3);
        nn::optim_step(r1, s1);
        nn::optim_step(r2, s2);
        CHECK(bits_equal(w1, w2));
    }
    SUBCASE("non-finite gradients surface as a training error") {
        Mat w = Mat::Constant(1, 1, 1.0), g = Mat::Constant(1, 1, std::nan(""));
        std::vector<nn::ParamRef> refs{{"w", &w, &g}};
        auto state = nn::OptimState::create(refs, 1e-3);
        CHECK_THROWS_AS(nn::optim_step(refs, state), TrainingError);
    }
}

TEST_CASE("200 optimizer steps cut a seeded regression loss by 90 percent") {
    Rng rng(88);
    auto params = nn::DenseParams::zeros(2, 3, true);
    auto grads = nn::DenseParams::zeros(2, 3, true);
    randomize(params.w, rng, 0.1);
    Mat x(3, 16);
    randomize(x, rng, 1.0);
    // realizable target: a hidden ground-truth affine map
    auto truth = nn::DenseParams::zeros(2, 3, true);
    randomize(truth.w, rng, 0.5);
    randomize(truth.b, rng, 0.5);
    const Mat target = nn::dense_forward(truth, x);
    auto loss_of = [&] { return 0.5 * (nn::dense_forward(params, x) - target).squaredNorm(); };
    const double initial = loss_of();
    std::vector<nn::ParamRef> refs{{"w", &params.w, &grads.w}, {"b", &params.b, &grads.b}};
    auto state = nn::OptimState::create(refs, 1e-2);
    for (int k = 0; k < 200; ++k) {
        grads.w.setZero();
        grads.b.setZero();
        const Mat dy = nn::dense_forward(params, x) - target;
        nn::dense_backward(params, x, dy, grads);
        nn::optim_step(refs, state);
    }
    CHECK(loss_of() <= 0.1 * initial);
}

TEST_CASE("gradient clipping caps the global norm") {
    Mat g1 = Mat::Constant(2, 2, 10.0), g2 = Mat::Constant(1, 4, -10.0);
    Mat w1 = Mat::Zero(2, 2), w2 = Mat::Zero(1, 4);
    std::vector<nn::ParamRef> refs{{"a", &w1, &g1}, {"b", &w2, &g2}};
    CHECK(nn::grad_global_norm(refs) > 5.0);
    nn::clip_grads(refs, 5.0);
    CHECK(nn::grad_global_norm(refs) == doctest::Approx(5.0));
    // already-small gradients pass through untouched
    Mat g3 = Mat::Constant(1, 1, 0.1), w3 = Mat::Zero(1, 1);
    std::vector<nn::ParamRef> small{{"c", &w3, &g3}};
    nn::clip_grads(small, 5.0);
    CHECK(g3(0, 0) == 0.1);
}

TEST_SUITE_END();
