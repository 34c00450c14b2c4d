#include "btlab/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "btlab/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace btlab::io {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "NaN";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    if (s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IoError("cannot parse number: '" + std::string(s) + "'");
    return v;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

json read_json_file(const std::filesystem::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw IoError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

json process_spec_to_json(const ProcessSpec& spec) {
    json j;
    j["kind"] = process_kind_name(spec.kind);
    j["sigma"] = spec.sigma;
    switch (spec.kind) {
        case ProcessKind::GBM:
            j["mu"] = spec.mu;
            j["y0"] = spec.y0;
            break;
        case ProcessKind::AR2:
            j["a"] = spec.a;
            j["b"] = spec.b;
            j["c"] = spec.c;
            j["p0"] = spec.p0;
            j["p1_init"] = spec.p1_init;
            break;
        case ProcessKind::RandomWalk:
            j["p0"] = spec.p0;
            break;
        case ProcessKind::WhiteNoise:
            break;
    }
    return j;
}

ProcessSpec process_spec_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw ValidationError("process spec JSON must carry a \"kind\"");
    ProcessSpec spec;
    spec.kind = process_kind_from_name(j.at("kind").get<std::string>());
    switch (spec.kind) {
        case ProcessKind::GBM:
            spec = ProcessSpec::gbm();
            break;
        case ProcessKind::AR2:
            spec = ProcessSpec::ar2();
            break;
        case ProcessKind::RandomWalk:
            spec = ProcessSpec::random_walk();
            break;
        case ProcessKind::WhiteNoise:
            spec = ProcessSpec::white_noise();
            break;
    }
    if (j.contains("sigma")) spec.sigma = j.at("sigma").get<double>();
    if (j.contains("mu")) spec.mu = j.at("mu").get<double>();
    if (j.contains("y0")) spec.y0 = j.at("y0").get<double>();
    if (j.contains("a")) spec.a = j.at("a").get<double>();
    if (j.contains("b")) spec.b = j.at("b").get<double>();
    if (j.contains("c")) spec.c = j.at("c").get<double>();
    if (j.contains("p0")) spec.p0 = j.at("p0").get<double>();
    if (j.contains("p1_init")) spec.p1_init = j.at("p1_init").get<double>();
    spec.validate();
    return spec;
}

json strategy_config_to_json(const StrategyConfig& config) {
    json j;
    j["kind"] = strategy_kind_name(config.kind);
    if (config.kind == StrategyKind::MAC) {
        j["p1"] = config.p1;
        j["p2"] = config.p2;
    } else {
        j["entry"] = config.entry;
        j["hold"] = config.hold;
        j["stop_loss"] = config.stop_loss;
        j["side"] = config.side;
    }
    return j;
}

StrategyConfig strategy_config_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw ValidationError("strategy config JSON must carry a \"kind\"");
    const auto kind = strategy_kind_from_name(j.at("kind").get<std::string>());
    if (kind == StrategyKind::MAC)
        return StrategyConfig::mac(j.at("p1").get<int>(), j.at("p2").get<int>());
    return StrategyConfig::bh(j.at("entry").get<int>(), j.at("hold").get<int>(),
                              j.value("stop_loss", 0), j.value("side", 1));
}

json gan_config_to_json(const gan::GanConfig& c) {
    return json{{"latent_dim", c.latent_dim},
                {"hidden", c.hidden},
                {"seq_len", c.seq_len},
                {"batch_size", c.batch_size},
                {"scaling", c.scaling},
                {"lr", c.lr},
                {"lr_d", c.lr_d},
                {"lr_g", c.lr_g},
                {"d_steps", c.d_steps},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"grad_clip", c.grad_clip},
                {"max_batches", c.max_batches},
                {"eval_every", c.eval_every},
                {"eval_paths", c.eval_paths},
                {"r2_stop_mean", c.r2_stop_mean},
                {"r2_stop_var", c.r2_stop_var},
                {"seed", c.seed}};
}

gan::GanConfig gan_config_from_json(const json& j) {
    gan::GanConfig c;
    if (!j.is_object()) throw ValidationError("gan config must be a JSON object");
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.hidden = j.value("hidden", c.hidden);
    c.seq_len = j.value("seq_len", c.seq_len);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.scaling = j.value("scaling", c.scaling);
    c.lr = j.value("lr", c.lr);
    c.lr_d = j.value("lr_d", c.lr_d);
    c.lr_g = j.value("lr_g", c.lr_g);
    c.d_steps = j.value("d_steps", c.d_steps);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.max_batches = j.value("max_batches", c.max_batches);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.eval_paths = j.value("eval_paths", c.eval_paths);
    c.r2_stop_mean = j.value("r2_stop_mean", c.r2_stop_mean);
    c.r2_stop_var = j.value("r2_stop_var", c.r2_stop_var);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

json scaler_to_json(const gan::Scaler& s) {
    return json{{"min", s.min}, {"max", s.max}, {"scaling", s.scaling}};
}

gan::Scaler scaler_from_json(const json& j) {
    gan::Scaler s;
    s.min = j.at("min").get<double>();
    s.max = j.at("max").get<double>();
    s.scaling = j.at("scaling").get<double>();
    if (!(s.min < s.max)) throw ValidationError("scaler requires min < max");
    return s;
}

json backtest_report_to_json(const BacktestReport& report) {
    json j;
    j["pnl"] = report.pnl;
    j["equity"] = report.equity;
    if (report.sharpe)
        j["sharpe"] = *report.sharpe;
    else
        j["sharpe"] = nullptr;
    j["n_trades"] = report.n_trades;
    return j;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

void save_pathset_csv(const PathSet& set, const std::filesystem::path& csv_path,
                      bool with_sidecar) {
    set.validate();
    std::string out;
    out.reserve(set.size() * set.length() * 24 + 16);
    out += "path_id,t,value\n";
    for (std::size_t p = 0; p < set.size(); ++p) {
        const auto& values = set.paths[p].values;
        for (std::size_t t = 0; t < values.size(); ++t) {
            out += std::to_string(p);
            out += ',';
            out += std::to_string(t);
            out += ',';
            out += fmt_double(values[t]);
            out += '\n';
        }
    }
    write_text_file(csv_path, out);
    if (with_sidecar) {
        json meta;
        meta["source"] = set.source;
        meta["seed"] = set.seed;
        meta["n_paths"] = set.size();
        meta["steps"] = set.length() - 1;
        meta["spec"] = set.spec ? process_spec_to_json(*set.spec) : json(nullptr);
        write_json_file(sidecar_path(csv_path), meta);
    }
}

PathSet load_pathset_csv(const std::filesystem::path& csv_path) {
    const std::string text = read_text_file(csv_path);
    PathSet set;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != "path_id,t,value")
                throw IoError("unexpected CSV header in " + csv_path.string());
            header = false;
            continue;
        }
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos)
            throw IoError("malformed CSV row in " + csv_path.string());
        const auto path_id = static_cast<std::size_t>(parse_double(line.substr(0, c1)));
        const double value = parse_double(line.substr(c2 + 1));
        if (path_id >= set.paths.size()) set.paths.resize(path_id + 1);
        set.paths[path_id].values.push_back(value);
    }
    const auto meta_path = sidecar_path(csv_path);
    if (std::filesystem::exists(meta_path)) {
        const json meta = read_json_file(meta_path);
        set.source = meta.value("source", std::string{});
        set.seed = meta.value("seed", std::uint64_t{0});
        if (meta.contains("spec") && !meta.at("spec").is_null())
            set.spec = process_spec_from_json(meta.at("spec"));
    }
    for (auto& p : set.paths) p.source = set.source;
    set.validate();
    return set;
}

void save_grid_csv(const GridResult& result, const ParamGrid& grid,
                   const std::filesystem::path& path) {
    if (result.scores.size() != grid.configs.size())
        throw ValidationError("grid result does not match the grid");
    std::string out = "config_json,score\n";
    for (std::size_t c = 0; c < grid.configs.size(); ++c) {
        out += '"';
        std::string cfg = strategy_config_to_json(grid.configs[c]).dump();
        // escape embedded quotes per RFC 4180
        for (char ch : cfg) {
            out += ch;
            if (ch == '"') out += '"';
        }
        out += "\",";
        out += result.scores[c] ? fmt_double(*result.scores[c]) : "NaN";
        out += '\n';
    }
    write_text_file(path, out);
}

void save_heatmap_csv(const HeatmapMatrix& m, const std::filesystem::path& path) {
    std::string out = "p1,p2,sharpe\n";
    for (int p1 = 1; p1 <= kMacWindowMax; ++p1)
        for (int p2 = 1; p2 <= kMacWindowMax; ++p2) {
            out += std::to_string(p1);
            out += ',';
            out += std::to_string(p2);
            out += ',';
            out += fmt_double(m.at(p1, p2));
            out += '\n';
        }
    write_text_file(path, out);
}

void save_trainlog_csv(const gan::TrainLog& log, const std::filesystem::path& path) {
    std::string out = "batches,d_loss,g_loss,r2_mean,r2_var\n";
    for (const auto& r : log.records) {
        out += std::to_string(r.batches);
        out += ',';
        out += fmt_double(r.d_loss);
        out += ',';
        out += fmt_double(r.g_loss);
        out += ',';
        out += fmt_double(r.r2_mean);
        out += ',';
        out += fmt_double(r.r2_var);
        out += '\n';
    }
    write_text_file(path, out);
}

namespace {

constexpr int kCheckpointVersion = 1;

struct ArrayRef {
    std::string name;
    const gan::Mat* mat;
};

std::vector<ArrayRef> checkpoint_arrays(const gan::GanModel& m) {
    return {
        {"gen.lstm.w", &m.gen.lstm.w},   {"gen.lstm.b", &m.gen.lstm.b},
        {"gen.out.w", &m.gen.out.w},     {"gen.out.b", &m.gen.out.b},
        {"disc.fwd.w", &m.disc.fwd.w},   {"disc.fwd.b", &m.disc.fwd.b},
        {"disc.bwd.w", &m.disc.bwd.w},   {"disc.bwd.b", &m.disc.bwd.b},
        {"disc.head.w", &m.disc.head},
    };
}

}  // namespace

void write_checkpoint(const gan::GanModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto arrays = checkpoint_arrays(model);

    json manifest;
    manifest["format"] = "btlab-gan-checkpoint";
    manifest["version"] = kCheckpointVersion;
    manifest["config"] = gan_config_to_json(model.config);
    manifest["scaler"] = scaler_to_json(model.scaler);
    manifest["trained_batches"] = model.trained_batches;
    json arr = json::array();
    std::int64_t offset = 0;
    for (const auto& a : arrays) {
        arr.push_back({{"name", a.name},
                       {"shape", {a.mat->rows(), a.mat->cols()}},
                       {"offset", offset},
                       {"count", a.mat->size()}});
        offset += a.mat->size();
    }
    manifest["arrays"] = arr;
    write_json_file(dir / "manifest.json", manifest);

    std::ofstream bin(dir / "params.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw IoError("cannot write " + (dir / "params.bin").string());
    for (const auto& a : arrays) {
        for (Eigen::Index r = 0; r < a.mat->rows(); ++r)
            for (Eigen::Index c = 0; c < a.mat->cols(); ++c) {
                const double v = (*a.mat)(r, c);
                bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
            }
    }
    if (!bin) throw IoError("write failed for " + (dir / "params.bin").string());
}

gan::GanModel read_checkpoint(const std::filesystem::path& dir) {
    const json manifest = read_json_file(dir / "manifest.json");
    if (manifest.value("format", std::string{}) != "btlab-gan-checkpoint")
        throw IoError("not a btlab checkpoint: " + dir.string());
    if (manifest.value("version", -1) != kCheckpointVersion)
        throw IoError("unsupported checkpoint version in " + dir.string());

    gan::GanModel model;
    model.config = gan_config_from_json(manifest.at("config"));
    model.scaler = scaler_from_json(manifest.at("scaler"));
    model.trained_batches = manifest.value("trained_batches", std::int64_t{0});
    const int h = model.config.hidden;
    model.gen.lstm = nn::LstmParams::zeros(h, 6);
    model.gen.lstm_g = nn::LstmParams::zeros(h, 6);
    model.gen.out = nn::DenseParams::zeros(1, h, true);
    model.gen.out_g = nn::DenseParams::zeros(1, h, true);
    model.disc.fwd = nn::LstmParams::zeros(h, 2);
    model.disc.fwd_g = nn::LstmParams::zeros(h, 2);
    model.disc.bwd = nn::LstmParams::zeros(h, 2);
    model.disc.bwd_g = nn::LstmParams::zeros(h, 2);
    model.disc.head = gan::Mat::Zero(2, 2 * h);
    model.disc.head_g = gan::Mat::Zero(2, 2 * h);

    auto arrays = checkpoint_arrays(model);
    std::ifstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw IoError("cannot open " + (dir / "params.bin").string());
    for (const auto& entry : manifest.at("arrays")) {
        const std::string name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
        const auto it = std::find_if(arrays.begin(), arrays.end(),
                                     [&](const ArrayRef& a) { return a.name == name; });
        if (it == arrays.end()) throw IoError("unknown checkpoint array: " + name);
        gan::Mat* mat = const_cast<gan::Mat*>(it->mat);
        if (shape.size() != 2 || mat->rows() != shape[0] || mat->cols() != shape[1])
            throw IoError("checkpoint array shape mismatch for " + name);
        bin.seekg(entry.at("offset").get<std::int64_t>() *
                  static_cast<std::int64_t>(sizeof(double)));
        for (Eigen::Index r = 0; r < mat->rows(); ++r)
            for (Eigen::Index c = 0; c < mat->cols(); ++c) {
                double v;
                bin.read(reinterpret_cast<char*>(&v), sizeof(double));
                (*mat)(r, c) = v;
            }
        if (!bin) throw IoError("truncated checkpoint array " + name);
    }
    return model;
}

}  // namespace btlab::io
