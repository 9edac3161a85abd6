#include "mpvad/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mpvad/threading.hpp"

namespace fs = std::filesystem;

namespace mpvad {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ValidationError("auc: scores and labels must have equal length");
    size_t n = scores.size();
    size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<size_t>(y != 0);
    size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("auc: both classes must be present");

    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tied groups, then the Mann-Whitney identity.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (size_t k = i; k <= j; ++k)
            if (labels[idx[k]]) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double n1 = static_cast<double>(n_pos);
    return (rank_sum_pos - n1 * (n1 + 1.0) / 2.0) / (n1 * static_cast<double>(n_neg));
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ValidationError("roc_curve: scores and labels must have equal length");
    size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<size_t>(y != 0);
    size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("roc_curve: both classes must be present");

    std::vector<size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.thresholds.push_back(std::numeric_limits<double>::infinity());
    roc.tpr.push_back(0.0);
    roc.fpr.push_back(0.0);
    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < idx.size()) {
        double thr = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == thr) {
            if (labels[idx[i]])
                ++tp;
            else
                ++fp;
            ++i;
        }
        roc.thresholds.push_back(thr);
        roc.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
        roc.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
    }
    double area = 0.0;
    for (size_t k = 1; k < roc.tpr.size(); ++k)
        area += 0.5 * (roc.tpr[k] + roc.tpr[k - 1]) * (roc.fpr[k] - roc.fpr[k - 1]);
    roc.auc_trapezoid = area;
    return roc;
}

void write_roc_csv(const RocCurve& roc, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError(path + ": cannot open for writing");
    f << "threshold,fpr,tpr\n";
    char buf[64];
    for (size_t i = 0; i < roc.tpr.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g", roc.thresholds[i], roc.fpr[i],
                      roc.tpr[i]);
        f << buf << "\n";
    }
}

double global_auc(const std::vector<ScoreSeries>& all_series) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& s : all_series) {
        if (s.labels.size() != s.score.size())
            throw ValidationError("global_auc: series '" + s.clip_id + "' has no labels");
        scores.insert(scores.end(), s.score.begin(), s.score.end());
        labels.insert(labels.end(), s.labels.begin(), s.labels.end());
    }
    return auc(scores, labels);
}

std::vector<AblationSpec> default_ablation_grid() {
    return {
        {"convgru", false, true, false, false, 82.4},
        {"multipath", true, true, false, false, 86.1},
        {"nonlocal", true, true, true, false, 86.7},
        {"full", true, true, true, true, 88.3},
    };
}

NetworkConfig derive_network_config(const NetworkConfig& base, const AblationSpec& spec) {
    NetworkConfig c = base;
    c.use_nonlocal = spec.nonlocal;
    c.use_gru = spec.convgru;
    c.active_paths.clear();
    if (!spec.multi_path) c.active_paths = {base.num_paths - 1};
    return c;
}

AblationReport run_ablation(const DatasetManifest& manifest, const NetworkConfig& base_net,
                            const TrainConfig& base_train, const std::vector<AblationSpec>& specs,
                            const LossNetConfig& loss_net_config, const std::string& out_dir) {
    if (manifest.test_clips.empty())
        throw ConfigError("ablation: manifest has no labeled test clips");
    AblationReport report;
    for (const auto& spec : specs) {
        auto t0 = std::chrono::steady_clock::now();
        NetworkConfig net_cfg = derive_network_config(base_net, spec);
        TrainConfig tc = base_train;
        if (!spec.nt_loss) tc.weights.lambda_nt = 0.0;

        std::unique_ptr<LossNetwork<float>> loss_net;
        if (tc.weights.lambda_nt != 0.0)
            loss_net = std::make_unique<LossNetwork<float>>(loss_net_config);

        std::string run_dir = (fs::path(out_dir) / ("variant_" + spec.name)).string();
        fs::create_directories(run_dir);
        TrainResult tr = train(manifest, net_cfg, tc, loss_net.get(), run_dir);
        LoadedCheckpoint ckpt = load_network_checkpoint(tr.final_checkpoint);

        std::vector<ScoreSeries> series(manifest.test_clips.size());
        parallel_for(static_cast<int>(manifest.test_clips.size()),
                     static_cast<int>(std::thread::hardware_concurrency()), [&](int i) {
                         VideoClip clip =
                             load_clip(manifest, manifest.test_clips[static_cast<size_t>(i)]);
                         series[static_cast<size_t>(i)] =
                             score_clip(clip, *ckpt.network, net_cfg.input_len);
                     });

        AblationRow row;
        row.spec = spec;
        row.auc = global_auc(series);
        row.delta_s = score_gap(series).delta_s;
        row.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.rows.push_back(row);
    }
    write_ablation_report(report, (fs::path(out_dir) / "ablation.json").string(),
                          (fs::path(out_dir) / "ablation.csv").string());
    return report;
}

void write_ablation_report(const AblationReport& report, const std::string& json_path,
                           const std::string& csv_path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : report.rows) {
        j.push_back({{"name", r.spec.name},
                     {"multi_path", r.spec.multi_path},
                     {"convgru", r.spec.convgru},
                     {"nonlocal", r.spec.nonlocal},
                     {"nt_loss", r.spec.nt_loss},
                     {"auc", r.auc},
                     {"delta_s", r.delta_s},
                     {"seconds", r.seconds},
                     {"reference_auc_pct", r.spec.reference_auc_pct}});
    }
    std::ofstream jf(json_path, std::ios::trunc);
    if (!jf) throw IoError(json_path + ": cannot open for writing");
    jf << j.dump(2) << "\n";

    std::ofstream cf(csv_path, std::ios::trunc);
    if (!cf) throw IoError(csv_path + ": cannot open for writing");
    cf << "name,multi_path,convgru,nonlocal,nt_loss,auc,delta_s,seconds,reference_auc_pct\n";
    char buf[128];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%d,%.10g,%.10g,%.6g,%.4g",
                      r.spec.name.c_str(), r.spec.multi_path, r.spec.convgru, r.spec.nonlocal,
                      r.spec.nt_loss, r.auc, r.delta_s, r.seconds, r.spec.reference_auc_pct);
        cf << buf << "\n";
    }
}

}  // namespace mpvad
