#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "btlab/nn.hpp"
#include "btlab/processes.hpp"

namespace btlab::gan {

using nn::Mat;

struct GanConfig {
    int latent_dim = 5;  // paper-fixed
    int hidden = 50;
    int seq_len = 30;    // steps per sequence; sequences carry seq_len+1 values
    int batch_size = 50;
    double scaling = 2.0;
    double lr = 3e-4;
    double lr_d = 1e-3;  // 0 -> lr
    double lr_g = 0.0;   // 0 -> lr
    int d_steps = 3;     // discriminator updates per generator update
    double beta1 = 0.5;
    double beta2 = 0.999;
    double grad_clip = 5.0;
    std::int64_t max_batches = 10000;
    std::int64_t eval_every = 200;
    int eval_paths = 1000;
    double r2_stop_mean = 0.99;  // early stop when both R2 targets are met
    double r2_stop_var = 0.99;
    std::uint64_t seed = 1;

    void validate() const;
};

// Affine map taking the observed data range onto [-1/scaling, +1/scaling].
struct Scaler {
    double min = 0.0;
    double max = 1.0;
    double scaling = 2.0;

    double transform(double x) const {
        return (2.0 * (x - min) / (max - min) - 1.0) / scaling;
    }
    double inverse(double u) const { return min + (max - min) * (scaling * u + 1.0) / 2.0; }

    static Scaler fit(const PathSet& data, double scaling);
};

// LSTM over [latent(5); t/T] with a biased tanh head, one value per step.
struct Generator {
    nn::LstmParams lstm, lstm_g;
    nn::DenseParams out, out_g;

    std::vector<nn::ParamRef> params();
    std::int64_t count() const { return lstm.count() + out.count(); }
};

// Bidirectional LSTM over [value; t/T]; the bias-free 2 x 2h head emits two
// per-step outputs whose mean is the step logit.
struct Discriminator {
    nn::LstmParams fwd, fwd_g, bwd, bwd_g;
    Mat head, head_g;

    std::vector<nn::ParamRef> params();
    std::int64_t count() const { return fwd.count() + bwd.count() + head.size(); }
};

struct GanModel {
    GanConfig config;
    Scaler scaler;
    Generator gen;
    Discriminator disc;
    std::int64_t trained_batches = 0;

    static GanModel create(const GanConfig& config, const Scaler& scaler);
};

// n iid standard-normal latent sequences; sequence i is a latent_dim x T
// matrix drawn from substream_seed(seed, i), column per timestep.
std::vector<Mat> sample_latent(std::int64_t n, std::int64_t T, std::uint64_t seed,
                               int latent_dim = 5);

// Runs the generator over latent sequences. Returns the tanh outputs as an
// L x n matrix (L = values per sequence), column per sequence.
Mat generator_forward(const GanModel& model, const std::vector<Mat>& latents);

// Generated paths in price units (inverse-transformed), source "gan".
// steps may exceed the trained seq_len; the result is then flagged
// extrapolated via the returned set's source ("gan" stays, spec stays unset).
PathSet generate(const GanModel& model, std::int64_t n, std::int64_t steps, std::uint64_t seed);

// Per-timestep logistic cross-entropy. d_loss averages the real (target 1)
// and fake (target 0) terms; g_loss is the non-saturating target-1 form.
std::pair<double, double> adversarial_losses(const Mat& real_logits, const Mat& fake_logits);

struct TrainRecord {
    std::int64_t batches = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double r2_mean = 0.0;  // NaN when no evaluator ran
    double r2_var = 0.0;
};

struct TrainLog {
    std::vector<TrainRecord> records;
};

// Returns {r2_mean, r2_var}; NaN entries disable early stopping.
using EvalHook = std::function<std::pair<double, double>(const GanModel&, std::int64_t batches)>;

struct TrainOutcome {
    GanModel model;
    TrainLog log;
    bool diverged = false;
    std::string error;
};

// Alternating d_steps discriminator updates and one generator update per
// batch, fully seeded from config.seed. Divergence (non-finite loss) aborts
// and returns the partial log with diverged = true. on_record fires after
// every appended TrainRecord.
using RecordSink = std::function<void(const TrainRecord&)>;
TrainOutcome train(const GanConfig& config, const PathSet& data, const EvalHook& hook = {},
                   const RecordSink& on_record = {});

// Checkpoint directory: manifest.json + params.bin (named row-major arrays of
// little-endian 64-bit floats). Round trips are bit-exact.
void save_checkpoint(const GanModel& model, const std::filesystem::path& dir);
GanModel load_checkpoint(const std::filesystem::path& dir);

// Single-network passes, used by the training loop and by gradient tests.
namespace detail {

struct GenPass {
    std::vector<Mat> inputs;
    nn::LstmCache cache;
    Mat y;  // L x B tanh outputs
};

// lat_steps[t] is latent_dim x B; appends the t/T feature row internally.
void gen_forward_steps(const Generator& g, const std::vector<Mat>& lat_steps, GenPass& pass);
void gen_backward(Generator& g, const GenPass& pass, const Mat& dy);

struct DiscPass {
    std::vector<Mat> inputs;
    nn::BiLstmCache cache;
    Mat logits;  // L x B
};

// values is L x B in scaled space.
void disc_forward(const Discriminator& d, const Mat& values, DiscPass& pass);
// dvalues, when non-null, receives the gradient on the value rows.
void disc_backward(Discriminator& d, const DiscPass& pass, const Mat& dlogits, Mat* dvalues);

}  // namespace detail

}  // namespace btlab::gan
