// mpvad: dataset synthesis, training, scoring and evaluation for the
// multi-path video anomaly detection toolkit.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <iostream>

#include <json.hpp>

#include "mpvad/checkpoint.hpp"
#include "mpvad/evaluation.hpp"
#include "mpvad/threading.hpp"

namespace fs = std::filesystem;
using namespace mpvad;

namespace {

// Flat key=value config support with command-line override: tokens for keys
// that did not appear explicitly are appended after the original arguments.
// Unknown keys surface as normal unknown-option usage errors.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    std::ifstream f(config_path);
    if (!f) throw ConfigError(config_path + ": cannot read config file");

    std::set<std::string> given;
    for (const auto& a : args)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));

    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(config_path + ":" + std::to_string(lineno) +
                              ": expected key=value");
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        std::string value = line.substr(eq + 1);
        size_t vs = value.find_first_not_of(" \t");
        value = vs == std::string::npos ? "" : value.substr(vs);
        if (given.count("--" + key)) continue;  // command line wins
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

void write_run_manifest(const std::string& out_dir, std::vector<std::string> files) {
    std::sort(files.begin(), files.end());
    nlohmann::json j;
    j["files"] = files;
    std::ofstream f(fs::path(out_dir) / "run_manifest.json", std::ios::trunc);
    f << j.dump(2) << "\n";
}

std::vector<std::string> list_files(const std::string& root) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() != "run_manifest.json")
            files.push_back(fs::relative(e.path(), root).string());
    return files;
}

// Shared flags describing the network, the objective, and the run.
struct TrainFlags {
    std::string data;
    std::string out;
    int p = 8;
    int batch = 4;
    double lr = 3e-4;
    double wd = 1e-4;
    int epochs = 50;
    double lambda_int = 1.0;
    double lambda_gd = 1.0;
    double lambda_nt = 1.0;
    uint64_t seed = 0;
    std::vector<int> channels = {32, 64, 128};
    std::vector<int> divisors = {2, 4, 8};
    int stride = 1;
    std::string loss_net = "random";
    int loss_net_width = 8;
    std::vector<std::string> freeze;
    std::string reduction = "mean";
    std::string resume;
    int workers = 0;

    void add_network_options(CLI::App* cmd) {
        cmd->add_option("--p", p, "Input window length P")->capture_default_str();
        cmd->add_option("--channels", channels, "Per-path channel widths")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_option("--divisors", divisors, "Per-path resolution divisors")
            ->delimiter(',')
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Run seed; drives every random stream")
            ->capture_default_str();
    }

    void add_train_options(CLI::App* cmd) {
        cmd->add_option("--batch", batch, "Batch size")->capture_default_str();
        cmd->add_option("--lr", lr, "AdamW learning rate")->capture_default_str();
        cmd->add_option("--wd", wd, "Decoupled weight decay")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--lambda-int", lambda_int, "Intensity loss weight")
            ->capture_default_str();
        cmd->add_option("--lambda-gd", lambda_gd, "Gradient difference loss weight")
            ->capture_default_str();
        cmd->add_option("--lambda-nt", lambda_nt,
                        "Noise tolerance loss weight (0 disables the loss network)")
            ->capture_default_str();
        cmd->add_option("--stride", stride, "Training window stride")->capture_default_str();
        cmd->add_option("--loss-net", loss_net,
                        "'random' or a loss-network weights archive path")
            ->capture_default_str();
        cmd->add_option("--loss-net-width", loss_net_width,
                        "Base conv width of the random loss network")
            ->capture_default_str();
        cmd->add_option("--freeze", freeze,
                        "Freeze marks as path:epoch (1-based), e.g. 1:30,2:40")
            ->delimiter(',');
        cmd->add_option("--reduction", reduction, "Loss reduction: mean or sum")
            ->check(CLI::IsMember({"mean", "sum"}))
            ->capture_default_str();
        cmd->add_option("--resume", resume, "Checkpoint to resume from");
        cmd->add_option("--workers", workers, "Worker threads (0 = hardware)")
            ->capture_default_str();
    }

    NetworkConfig network_config(int in_channels) const {
        NetworkConfig c;
        c.num_paths = static_cast<int>(channels.size());
        c.input_len = p;
        c.in_channels = in_channels;
        c.path_channels = channels;
        c.path_divisors = divisors;
        c.seed = seed;
        return c;
    }

    TrainConfig train_config() const {
        TrainConfig tc;
        tc.batch_size = batch;
        tc.learning_rate = lr;
        tc.weight_decay = wd;
        tc.epochs = epochs;
        tc.seed = seed;
        tc.weights.lambda_int = lambda_int;
        tc.weights.lambda_gd = lambda_gd;
        tc.weights.lambda_nt = lambda_nt;
        tc.reduction = reduction == "sum" ? Reduction::sum : Reduction::mean;
        tc.window_stride = stride;
        tc.num_workers = workers;
        for (const auto& spec : freeze) {
            auto colon = spec.find(':');
            if (colon == std::string::npos)
                throw ConfigError("--freeze expects path:epoch, got '" + spec + "'");
            tc.freeze_epochs.emplace_back(std::stoi(spec.substr(0, colon)),
                                          std::stoi(spec.substr(colon + 1)));
        }
        return tc;
    }

    std::unique_ptr<LossNetwork<float>> make_loss_network() const {
        if (lambda_nt == 0.0) return nullptr;
        LossNetConfig cfg;
        if (loss_net == "random") {
            cfg = LossNetConfig::scaled(loss_net_width, seed);
        } else {
            Archive a = load_archive(loss_net);
            cfg.widths = a.meta.at("widths").get<std::vector<int>>();
            cfg.random_weights = false;
            cfg.weights_path = loss_net;
        }
        return std::make_unique<LossNetwork<float>>(cfg);
    }
};

int cmd_synth(const std::string& out, uint64_t seed, int clips, int frames, int size,
              double rate, const std::vector<std::string>& kinds) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.num_clips = clips;
    cfg.frames_per_clip = frames;
    cfg.frame_size = size;
    cfg.anomaly_rate = rate;
    if (!kinds.empty()) cfg.anomaly_kinds = std::set<std::string>(kinds.begin(), kinds.end());
    cfg.root = out;
    DatasetManifest m = generate_synthetic(cfg);
    write_run_manifest(out, list_files(out));
    std::cout << (fs::path(m.root) / "manifest.json").string() << "\n";
    return 0;
}

int cmd_train(const TrainFlags& flags) {
    DatasetManifest manifest = load_manifest(flags.data);
    NetworkConfig net_cfg = flags.network_config(manifest.channels);
    TrainConfig tc = flags.train_config();
    auto loss_net = flags.make_loss_network();
    fs::create_directories(flags.out);
    TrainResult result =
        train(manifest, net_cfg, tc, loss_net.get(), flags.out, flags.resume);
    write_run_manifest(flags.out, list_files(flags.out));
    std::cout << result.final_checkpoint << "\n";
    return 0;
}

int cmd_score(const std::string& data, const std::string& checkpoint_path,
              const std::string& out, int q, const std::string& split, int p_override) {
    DatasetManifest manifest = load_manifest(data);
    LoadedCheckpoint ckpt = load_network_checkpoint(checkpoint_path);
    const int p = p_override > 0 ? p_override : ckpt.config.input_len;
    const auto& clips = split == "train" ? manifest.train_clips : manifest.test_clips;
    if (clips.empty()) throw ConfigError("score: split '" + split + "' is empty");
    fs::create_directories(out);

    std::vector<ScoreSeries> series(clips.size());
    std::vector<double> clip_seconds(clips.size());
    parallel_for(static_cast<int>(clips.size()),
                 static_cast<int>(std::thread::hardware_concurrency()), [&](int i) {
                     VideoClip clip = load_clip(manifest, clips[static_cast<size_t>(i)]);
                     auto t0 = std::chrono::steady_clock::now();
                     series[static_cast<size_t>(i)] =
                         q == 1 ? score_clip(clip, *ckpt.network, p)
                                : score_clip_reuse(clip, *ckpt.network, p, q);
                     clip_seconds[static_cast<size_t>(i)] =
                         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count();
                 });

    size_t frames = 0;
    double seconds = 0.0;
    for (size_t i = 0; i < series.size(); ++i) {
        std::string name = series[i].clip_id;
        std::replace(name.begin(), name.end(), '/', '_');
        write_score_csv(series[i], (fs::path(out) / (name + ".csv")).string());
        frames += series[i].score.size();
        seconds += clip_seconds[i];
    }
    nlohmann::json timing = {{"q", q},
                             {"frames", frames},
                             {"clip_seconds_total", seconds},
                             {"per_frame_seconds", seconds / static_cast<double>(frames)}};
    std::ofstream(fs::path(out) / "timing.json") << timing.dump(2) << "\n";
    write_run_manifest(out, list_files(out));
    std::cout << "scored " << frames << " frames, " << seconds / static_cast<double>(frames)
              << " s/frame (q=" << q << ")\n";
    return 0;
}

int cmd_eval(const std::string& scores_dir, const std::string& out) {
    std::vector<std::string> csvs;
    for (const auto& e : fs::directory_iterator(scores_dir))
        if (e.path().extension() == ".csv") csvs.push_back(e.path().string());
    std::sort(csvs.begin(), csvs.end());
    if (csvs.empty()) throw ConfigError("eval: no score CSVs in " + scores_dir);

    std::vector<ScoreSeries> series;
    for (const auto& path : csvs) series.push_back(read_score_csv(path));
    for (const auto& s : series)
        if (s.labels.empty())
            throw ConfigError("eval: series '" + s.clip_id +
                              "' has no labels; scored a label-less split?");

    fs::create_directories(out);
    double a = global_auc(series);
    ScoreGapReport gap = score_gap(series);

    std::vector<double> all_scores;
    std::vector<int> all_labels;
    for (const auto& s : series) {
        all_scores.insert(all_scores.end(), s.score.begin(), s.score.end());
        all_labels.insert(all_labels.end(), s.labels.begin(), s.labels.end());
    }
    write_roc_csv(roc_curve(all_scores, all_labels), (fs::path(out) / "roc.csv").string());

    nlohmann::json report = {{"auc", a},
                             {"delta_s", gap.delta_s},
                             {"mean_abnormal_score", gap.mean_abnormal},
                             {"mean_normal_score", gap.mean_normal},
                             {"abnormal_frames", gap.abnormal_frames},
                             {"normal_frames", gap.normal_frames},
                             {"clips", series.size()}};
    std::ofstream(fs::path(out) / "report.json") << report.dump(2) << "\n";
    write_run_manifest(out, list_files(out));
    std::cout << report.dump() << "\n";
    return 0;
}

int cmd_eval_ablation(const TrainFlags& flags, const std::string& grid) {
    if (grid != "full") throw ConfigError("eval: unknown ablation grid '" + grid + "'");
    if (flags.data.empty()) throw ConfigError("eval --ablation requires --data");
    DatasetManifest manifest = load_manifest(flags.data);
    NetworkConfig net_cfg = flags.network_config(manifest.channels);
    TrainConfig tc = flags.train_config();
    LossNetConfig ln = LossNetConfig::scaled(flags.loss_net_width, flags.seed);
    fs::create_directories(flags.out);
    AblationReport report =
        run_ablation(manifest, net_cfg, tc, default_ablation_grid(), ln, flags.out);
    write_run_manifest(flags.out, list_files(flags.out));
    for (const auto& row : report.rows)
        std::cout << row.spec.name << ": auc=" << row.auc << " delta_s=" << row.delta_s << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-path frame-prediction video anomaly detection toolkit"};
    app.require_subcommand(1);
    std::string config_path;  // consumed by expand_config_args
    auto with_config = [&config_path](CLI::App* cmd) {
        cmd->add_option("--config", config_path,
                        "Flat key=value config file; command line wins");
    };

    // synth
    auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
    with_config(synth);
    std::string synth_out;
    uint64_t synth_seed = 7;
    int synth_clips = 20, synth_frames = 100, synth_size = 64;
    double synth_rate = 0.25;
    std::vector<std::string> synth_kinds;
    synth->add_option("--out", synth_out, "Dataset root directory")->required();
    synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
    synth->add_option("--clips", synth_clips, "Train clips (test split gets half)")
        ->capture_default_str();
    synth->add_option("--frames", synth_frames, "Frames per clip")->capture_default_str();
    synth->add_option("--size", synth_size, "Frame size in pixels")->capture_default_str();
    synth->add_option("--anomaly-rate", synth_rate, "Fraction of anomalous test frames")
        ->capture_default_str();
    synth->add_option("--kinds", synth_kinds, "Anomaly kinds: speed_jump,new_shape,reverse")
        ->delimiter(',');

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the prediction network");
    with_config(train_cmd);
    TrainFlags tf;
    train_cmd->add_option("--data", tf.data, "Dataset manifest.json")->required();
    train_cmd->add_option("--out", tf.out, "Run directory for checkpoints and logs")->required();
    tf.add_network_options(train_cmd);
    tf.add_train_options(train_cmd);

    // score
    auto* score_cmd = app.add_subcommand("score", "Score clips with a trained checkpoint");
    with_config(score_cmd);
    std::string score_data, score_ckpt, score_out, score_split = "test";
    int score_q = 1, score_p = 0;
    score_cmd->add_option("--data", score_data, "Dataset manifest.json")->required();
    score_cmd->add_option("--checkpoint", score_ckpt, "Trained checkpoint")->required();
    score_cmd->add_option("--out", score_out, "Output directory for score CSVs")->required();
    score_cmd->add_option("--q", score_q, "Predictions per recurrent warm-up (reuse mode)")
        ->capture_default_str();
    score_cmd->add_option("--split", score_split, "Which split to score")
        ->check(CLI::IsMember({"train", "test"}))
        ->capture_default_str();
    score_cmd->add_option("--p", score_p, "Override the window length (0 = checkpoint value)")
        ->capture_default_str();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Compute AUC and score-gap reports");
    with_config(eval_cmd);
    std::string eval_scores, eval_out, eval_ablation;
    TrainFlags ef;
    eval_cmd->add_option("--scores", eval_scores, "Directory of score CSVs");
    eval_cmd->add_option("--out", eval_out, "Output directory")->required();
    eval_cmd->add_option("--ablation", eval_ablation, "Run the ablation grid ('full')");
    eval_cmd->add_option("--data", ef.data, "Dataset manifest (ablation mode)");
    ef.add_network_options(eval_cmd);
    ef.add_train_options(eval_cmd);

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, synth_seed, synth_clips, synth_frames, synth_size,
                             synth_rate, synth_kinds);
        if (train_cmd->parsed()) return cmd_train(tf);
        if (score_cmd->parsed())
            return cmd_score(score_data, score_ckpt, score_out, score_q, score_split, score_p);
        if (eval_cmd->parsed()) {
            if (!eval_ablation.empty()) {
                ef.out = eval_out;
                return cmd_eval_ablation(ef, eval_ablation);
            }
            if (eval_scores.empty())
                throw ConfigError("eval: either --scores or --ablation is required");
            return cmd_eval(eval_scores, eval_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
