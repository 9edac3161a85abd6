#pragma once

#include <string>
#include <vector>

#include "mpvad/losses.hpp"
#include "mpvad/scoring.hpp"
#include "mpvad/trainer.hpp"

namespace mpvad {

// ============================================================================
// Frame-level evaluation: tie-aware rank AUC (the Mann-Whitney statistic, so
// ties count 1/2), the ROC curve for export, and the ablation harness that
// trains and scores the named architecture variants on one dataset.
// ============================================================================

// P(score of random abnormal > score of random normal), ties = 1/2. Throws
// UndefinedMetricError unless both classes are present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct RocCurve {
    std::vector<double> thresholds;
    std::vector<double> tpr;
    std::vector<double> fpr;
    double auc_trapezoid = 0.0;
};

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);
void write_roc_csv(const RocCurve& roc, const std::string& path);

// Concatenates all scored frames across clips and computes one global AUC.
double global_auc(const std::vector<ScoreSeries>& all_series);

// --- ablation harness --------------------------------------------------------

struct AblationSpec {
    std::string name;
    bool multi_path = true;
    bool convgru = true;
    bool nonlocal = true;
    bool nt_loss = true;
    // AUC (%) reported for this variant by the full-scale reference study;
    // recorded in reports for context, not reproduced at desk scale.
    double reference_auc_pct = 0.0;
};

// The four studied variants, shallowest first: ConvGRU-only single path,
// + multi-path, + non-local, + noise tolerance loss.
std::vector<AblationSpec> default_ablation_grid();

NetworkConfig derive_network_config(const NetworkConfig& base, const AblationSpec& spec);

struct AblationRow {
    AblationSpec spec;
    double auc = 0.0;
    double delta_s = 0.0;
    double seconds = 0.0;
};

struct AblationReport {
    std::vector<AblationRow> rows;
};

// Trains and evaluates every variant with the same seed and data order.
// loss_net_config supplies the frozen network for variants with the noise
// tolerance loss enabled. Artifacts (JSON + CSV) land under out_dir.
AblationReport run_ablation(const DatasetManifest& manifest, const NetworkConfig& base_net,
                            const TrainConfig& base_train, const std::vector<AblationSpec>& specs,
                            const LossNetConfig& loss_net_config, const std::string& out_dir);

void write_ablation_report(const AblationReport& report, const std::string& json_path,
                           const std::string& csv_path);

}  // namespace mpvad
