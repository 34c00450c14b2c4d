#include "btlab/rgan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "btlab/errors.hpp"
#include "btlab/io.hpp"

namespace btlab::gan {

namespace {

constexpr int kGenInput = 6;   // latent 5 + time feature
constexpr int kDiscInput = 2;  // value + time feature

// Substream purposes under the master seed.
constexpr std::uint64_t kTagInit = 0x01;
constexpr std::uint64_t kTagBatch = 0x02;
constexpr std::uint64_t kTagLatentD = 0x03;
constexpr std::uint64_t kTagLatentG = 0x04;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void fill_uniform(Mat& m, double bound, Rng& rng) {
    double* p = m.data();
    for (Eigen::Index k = 0; k < m.size(); ++k) p[k] = rng.uniform(-bound, bound);
}

}  // namespace

namespace detail {

// lat_steps[t] is latent_dim x B.
void gen_forward_steps(const Generator& g, const std::vector<Mat>& lat_steps, GenPass& pass) {
    const int L = static_cast<int>(lat_steps.size());
    const Eigen::Index batch = lat_steps[0].cols();
    const double denom = L > 1 ? static_cast<double>(L - 1) : 1.0;
    pass.inputs.resize(L);
    for (int t = 0; t < L; ++t) {
        pass.inputs[t].resize(kGenInput, batch);
        pass.inputs[t].topRows(kGenInput - 1) = lat_steps[t];
        pass.inputs[t].bottomRows(1).setConstant(static_cast<double>(t) / denom);
    }
    lstm_forward(g.lstm, pass.inputs, pass.cache);
    pass.y.resize(L, batch);
    for (int t = 0; t < L; ++t)
        pass.y.row(t) = dense_forward(g.out, pass.cache.h[t]).array().tanh().matrix();
}

void gen_backward(Generator& g, const GenPass& pass, const Mat& dy) {
    const int L = static_cast<int>(pass.y.rows());
    std::vector<Mat> dh(L);
    for (int t = 0; t < L; ++t) {
        const Mat dpre =
            (dy.row(t).array() * (1.0 - pass.y.row(t).array().square())).matrix();
        dh[t] = dense_backward(g.out, pass.cache.h[t], dpre, g.out_g);
    }
    lstm_backward(g.lstm, pass.cache, dh, g.lstm_g, nullptr);
}

// values is L x B in scaled space.
void disc_forward(const Discriminator& d, const Mat& values, DiscPass& pass) {
    const int L = static_cast<int>(values.rows());
    const Eigen::Index batch = values.cols();
    const double denom = L > 1 ? static_cast<double>(L - 1) : 1.0;
    pass.inputs.resize(L);
    for (int t = 0; t < L; ++t) {
        pass.inputs[t].resize(kDiscInput, batch);
        pass.inputs[t].row(0) = values.row(t);
        pass.inputs[t].row(1).setConstant(static_cast<double>(t) / denom);
    }
    bilstm_forward(d.fwd, d.bwd, pass.inputs, pass.cache);
    const Eigen::RowVectorXd eff = 0.5 * (d.head.row(0) + d.head.row(1));
    pass.logits.resize(L, batch);
    for (int t = 0; t < L; ++t) pass.logits.row(t) = eff * nn::bilstm_state(pass.cache, t);
}

// dvalues, when requested, receives the gradient on the scaled value rows.
void disc_backward(Discriminator& d, const DiscPass& pass, const Mat& dlogits, Mat* dvalues) {
    const int L = static_cast<int>(pass.logits.rows());
    const Eigen::RowVectorXd eff = 0.5 * (d.head.row(0) + d.head.row(1));
    std::vector<Mat> dstate(L);
    for (int t = 0; t < L; ++t) {
        const Mat s = nn::bilstm_state(pass.cache, t);
        const Mat dh = dlogits.row(t) * s.transpose();  // 1 x 2h
        d.head_g.row(0) += 0.5 * dh;
        d.head_g.row(1) += 0.5 * dh;
        dstate[t] = eff.transpose() * dlogits.row(t);
    }
    std::vector<Mat> dx;
    nn::bilstm_backward(d.fwd, d.bwd, pass.cache, dstate, d.fwd_g, d.bwd_g,
                        dvalues ? &dx : nullptr);
    if (dvalues) {
        dvalues->resize(L, pass.logits.cols());
        for (int t = 0; t < L; ++t) dvalues->row(t) = dx[t].row(0);
    }
}

}  // namespace detail


void GanConfig::validate() const {
    if (latent_dim != 5) throw ValidationError("latent_dim is fixed at 5");
    if (hidden < 1) throw ValidationError("hidden must be >= 1");
    if (seq_len < 1) throw ValidationError("seq_len must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(scaling >= 1.0)) throw ValidationError("scaling must be >= 1");
    if (!(lr > 0.0)) throw ValidationError("learning rate must be > 0");
    if (lr_d < 0.0 || lr_g < 0.0) throw ValidationError("lr_d / lr_g must be >= 0");
    if (d_steps < 1) throw ValidationError("d_steps must be >= 1");
    if (max_batches < 0) throw ValidationError("max_batches must be >= 0");
    if (eval_every < 1) throw ValidationError("eval_every must be >= 1");
    if (eval_paths < 1) throw ValidationError("eval_paths must be >= 1");
    if (!(grad_clip > 0.0)) throw ValidationError("grad_clip must be > 0");
}

Scaler Scaler::fit(const PathSet& data, double scaling) {
    data.validate();
    double lo = data.paths[0].values[0], hi = lo;
    for (const auto& p : data.paths)
        for (double v : p.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(lo < hi)) throw ValidationError("scaler needs non-constant data (min < max)");
    Scaler s;
    s.min = lo;
    s.max = hi;
    s.scaling = scaling;
    return s;
}

std::vector<nn::ParamRef> Generator::params() {
    return {
        {"gen.lstm.w", &lstm.w, &lstm_g.w},
        {"gen.lstm.b", &lstm.b, &lstm_g.b},
        {"gen.out.w", &out.w, &out_g.w},
        {"gen.out.b", &out.b, &out_g.b},
    };
}

std::vector<nn::ParamRef> Discriminator::params() {
    return {
        {"disc.fwd.w", &fwd.w, &fwd_g.w},   {"disc.fwd.b", &fwd.b, &fwd_g.b},
        {"disc.bwd.w", &bwd.w, &bwd_g.w},   {"disc.bwd.b", &bwd.b, &bwd_g.b},
        {"disc.head.w", &head, &head_g},
    };
}

GanModel GanModel::create(const GanConfig& config, const Scaler& scaler) {
    config.validate();
    GanModel m;
    m.config = config;
    m.scaler = scaler;
    Rng rng(substream_seed(config.seed, kTagInit));
    const int h = config.hidden;
    m.gen.lstm = nn::LstmParams::init(h, kGenInput, rng);
    m.gen.lstm_g = nn::LstmParams::zeros(h, kGenInput);
    m.gen.out = nn::DenseParams::init(1, h, true, rng);
    m.gen.out_g = nn::DenseParams::zeros(1, h, true);
    m.disc.fwd = nn::LstmParams::init(h, kDiscInput, rng);
    m.disc.fwd_g = nn::LstmParams::zeros(h, kDiscInput);
    m.disc.bwd = nn::LstmParams::init(h, kDiscInput, rng);
    m.disc.bwd_g = nn::LstmParams::zeros(h, kDiscInput);
    m.disc.head = Mat::Zero(2, 2 * h);
    fill_uniform(m.disc.head, std::sqrt(6.0 / (2 * h + 2)), rng);
    m.disc.head_g = Mat::Zero(2, 2 * h);
    return m;
}

std::vector<Mat> sample_latent(std::int64_t n, std::int64_t T, std::uint64_t seed,
                               int latent_dim) {
    if (n < 1 || T < 1) throw ValidationError("sample_latent needs n >= 1 and T >= 1");
    std::vector<Mat> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        Mat& m = out[static_cast<std::size_t>(i)];
        m.resize(latent_dim, T);
        for (Eigen::Index t = 0; t < T; ++t)
            for (int d = 0; d < latent_dim; ++d) m(d, t) = rng.gaussian();
    }
    return out;
}

Mat generator_forward(const GanModel& model, const std::vector<Mat>& latents) {
    if (latents.empty()) throw ValidationError("generator_forward: no latent sequences");
    const Eigen::Index T = latents[0].cols();
    const Eigen::Index n = static_cast<Eigen::Index>(latents.size());
    std::vector<Mat> steps(static_cast<std::size_t>(T));
    for (Eigen::Index t = 0; t < T; ++t) {
        steps[static_cast<std::size_t>(t)].resize(model.config.latent_dim, n);
        for (Eigen::Index i = 0; i < n; ++i)
            steps[static_cast<std::size_t>(t)].col(i) = latents[static_cast<std::size_t>(i)].col(t);
    }
    detail::GenPass pass;
    detail::gen_forward_steps(model.gen, steps, pass);
    return pass.y;
}

PathSet generate(const GanModel& model, std::int64_t n, std::int64_t steps, std::uint64_t seed) {
    if (n < 1 || steps < 1) throw ValidationError("generate needs n >= 1 and steps >= 1");
    const std::int64_t L = steps + 1;
    constexpr std::int64_t kChunk = 256;  // fixed so results do not depend on workers
    PathSet set;
    set.source = "gan";
    set.seed = seed;
    set.paths.resize(static_cast<std::size_t>(n));
    detail::GenPass pass;
    std::vector<Mat> lat_steps(static_cast<std::size_t>(L));
    for (std::int64_t cs = 0; cs < n; cs += kChunk) {
        const std::int64_t b = std::min(kChunk, n - cs);
        for (auto& m : lat_steps) m.resize(model.config.latent_dim, b);
        for (std::int64_t j = 0; j < b; ++j) {
            Rng rng(substream_seed(seed, static_cast<std::uint64_t>(cs + j)));
            for (std::int64_t t = 0; t < L; ++t)
                for (int d = 0; d < model.config.latent_dim; ++d)
                    lat_steps[static_cast<std::size_t>(t)](d, j) = rng.gaussian();
        }
        detail::gen_forward_steps(model.gen, lat_steps, pass);
        for (std::int64_t j = 0; j < b; ++j) {
            auto& path = set.paths[static_cast<std::size_t>(cs + j)];
            path.seed = substream_seed(seed, static_cast<std::uint64_t>(cs + j));
            path.source = "gan";
            path.values.resize(static_cast<std::size_t>(L));
            for (std::int64_t t = 0; t < L; ++t)
                path.values[static_cast<std::size_t>(t)] = model.scaler.inverse(pass.y(t, j));
        }
    }
    return set;
}

std::pair<double, double> adversarial_losses(const Mat& real_logits, const Mat& fake_logits) {
    if (real_logits.size() == 0 || fake_logits.size() == 0)
        throw ValidationError("adversarial_losses needs non-empty logit matrices");
    double real_term = 0.0, fake_term = 0.0, gen_term = 0.0;
    for (Eigen::Index k = 0; k < real_logits.size(); ++k)
        real_term += softplus(-real_logits.data()[k]);
    real_term /= static_cast<double>(real_logits.size());
    for (Eigen::Index k = 0; k < fake_logits.size(); ++k) {
        fake_term += softplus(fake_logits.data()[k]);
        gen_term += softplus(-fake_logits.data()[k]);
    }
    fake_term /= static_cast<double>(fake_logits.size());
    gen_term /= static_cast<double>(fake_logits.size());
    return {0.5 * (real_term + fake_term), gen_term};
}

TrainOutcome train(const GanConfig& config, const PathSet& data, const EvalHook& hook,
                   const RecordSink& on_record) {
    config.validate();
    data.validate();
    const std::int64_t L = config.seq_len + 1;
    if (static_cast<std::int64_t>(data.length()) != L)
        throw ValidationError("training paths must carry seq_len + 1 values");

    const Scaler scaler = Scaler::fit(data, config.scaling);
    TrainOutcome out{GanModel::create(config, scaler), {}, false, {}};
    GanModel& model = out.model;

    auto gparams = model.gen.params();
    auto dparams = model.disc.params();
    const double lr_g = config.lr_g > 0.0 ? config.lr_g : config.lr;
    const double lr_d = config.lr_d > 0.0 ? config.lr_d : config.lr;
    nn::OptimState gopt = nn::OptimState::create(gparams, lr_g, config.beta1, config.beta2);
    nn::OptimState dopt = nn::OptimState::create(dparams, lr_d, config.beta1, config.beta2);

    const std::int64_t n = static_cast<std::int64_t>(data.size());
    Mat scaled(L, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t t = 0; t < L; ++t)
            scaled(t, i) = scaler.transform(data.paths[static_cast<std::size_t>(i)]
                                                .values[static_cast<std::size_t>(t)]);

    Rng rng_batch(substream_seed(config.seed, kTagBatch));
    Rng rng_lat_d(substream_seed(config.seed, kTagLatentD));
    Rng rng_lat_g(substream_seed(config.seed, kTagLatentG));

    const int B = config.batch_size;
    std::vector<Mat> lat_steps(static_cast<std::size_t>(L), Mat(config.latent_dim, B));
    auto draw_latents = [&](Rng& rng) {
        for (auto& m : lat_steps)
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                for (Eigen::Index d = 0; d < m.rows(); ++d) m(d, j) = rng.gaussian();
    };

    Mat real(L, B);
    detail::GenPass gen_pass;
    detail::DiscPass disc_real, disc_fake;
    Mat dvalues;
    double dl_accum = 0.0, gl_accum = 0.0;
    std::int64_t since = 0;

    for (std::int64_t k = 1; k <= config.max_batches; ++k) {
        try {
            // Discriminator update(s).
            double d_loss = 0.0;
            for (int ds = 0; ds < config.d_steps; ++ds) {
                for (int j = 0; j < B; ++j)
                    real.col(j) = scaled.col(static_cast<Eigen::Index>(
                        rng_batch.uniform_index(static_cast<std::uint64_t>(n))));
                draw_latents(rng_lat_d);
                detail::gen_forward_steps(model.gen, lat_steps, gen_pass);
                detail::disc_forward(model.disc, real, disc_real);
                detail::disc_forward(model.disc, gen_pass.y, disc_fake);
                const auto [step_loss, g_probe] =
                    adversarial_losses(disc_real.logits, disc_fake.logits);
                (void)g_probe;
                if (!std::isfinite(step_loss))
                    throw TrainingError("discriminator loss diverged");
                d_loss += step_loss;
                const double inv_r = 0.5 / static_cast<double>(disc_real.logits.size());
                const double inv_f = 0.5 / static_cast<double>(disc_fake.logits.size());
                const Mat dlr = (disc_real.logits.array().logistic() - 1.0).matrix() * inv_r;
                const Mat dlf = disc_fake.logits.array().logistic().matrix() * inv_f;
                nn::zero_grads(dparams);
                detail::disc_backward(model.disc, disc_real, dlr, nullptr);
                detail::disc_backward(model.disc, disc_fake, dlf, nullptr);
                nn::clip_grads(dparams, config.grad_clip);
                nn::optim_step(dparams, dopt);
            }
            d_loss /= static_cast<double>(config.d_steps);

            // Generator update.
            draw_latents(rng_lat_g);
            detail::gen_forward_steps(model.gen, lat_steps, gen_pass);
            detail::disc_forward(model.disc, gen_pass.y, disc_fake);
            double g_loss = 0.0;
            for (Eigen::Index i = 0; i < disc_fake.logits.size(); ++i)
                g_loss += softplus(-disc_fake.logits.data()[i]);
            g_loss /= static_cast<double>(disc_fake.logits.size());
            if (!std::isfinite(g_loss)) throw TrainingError("generator loss diverged");
            const Mat dlg = (disc_fake.logits.array().logistic() - 1.0).matrix() /
                            static_cast<double>(disc_fake.logits.size());
            nn::zero_grads(dparams);  // scratch: these gradients are never applied
            nn::zero_grads(gparams);
            detail::disc_backward(model.disc, disc_fake, dlg, &dvalues);
            detail::gen_backward(model.gen, gen_pass, dvalues);
            nn::clip_grads(gparams, config.grad_clip);
            nn::optim_step(gparams, gopt);

            dl_accum += d_loss;
            gl_accum += g_loss;
            ++since;
            model.trained_batches = k;
        } catch (const TrainingError& e) {
            out.diverged = true;
            out.error = e.what();
            break;
        }

        if (k % config.eval_every == 0 || k == config.max_batches) {
            TrainRecord rec;
            rec.batches = k;
            rec.d_loss = dl_accum / static_cast<double>(since);
            rec.g_loss = gl_accum / static_cast<double>(since);
            dl_accum = gl_accum = 0.0;
            since = 0;
            if (hook) {
                const auto [r2m, r2v] = hook(model, k);
                rec.r2_mean = r2m;
                rec.r2_var = r2v;
            } else {
                rec.r2_mean = rec.r2_var = std::numeric_limits<double>::quiet_NaN();
            }
            out.log.records.push_back(rec);
            if (on_record) on_record(rec);
            if (std::isfinite(rec.r2_mean) && std::isfinite(rec.r2_var) &&
                rec.r2_mean >= config.r2_stop_mean && rec.r2_var >= config.r2_stop_var)
                break;
        }
    }
    return out;
}

void save_checkpoint(const GanModel& model, const std::filesystem::path& dir) {
    io::write_checkpoint(model, dir);
}

GanModel load_checkpoint(const std::filesystem::path& dir) {
    return io::read_checkpoint(dir);
}

}  // namespace btlab::gan
