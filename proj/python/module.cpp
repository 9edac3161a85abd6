// Python bindings for the main operations: synthetic data generation,
// training, scoring, losses and evaluation on numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mpvad/checkpoint.hpp"
#include "mpvad/evaluation.hpp"

namespace py = pybind11;
using namespace mpvad;

namespace {

Tensor<float> tensor_from_array(const py::array_t<float, py::array::c_style>& a) {
    if (a.ndim() != 3) throw ValidationError("expected a [C,H,W] float32 array");
    Tensor<float> t({static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                     static_cast<int>(a.shape(2))});
    std::copy(a.data(), a.data() + t.numel(), t.data.begin());
    return t;
}

py::array_t<float> array_from_tensor(const Tensor<float>& t) {
    py::array_t<float> a({t.dim(0), t.dim(1), t.dim(2)});
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    return a;
}

std::vector<Tensor<float>> frames_from_array(
    const py::array_t<float, py::array::c_style>& stack) {
    if (stack.ndim() != 4) throw ValidationError("expected a [T,C,H,W] float32 array");
    std::vector<Tensor<float>> frames;
    const size_t frame_elems =
        static_cast<size_t>(stack.shape(1)) * stack.shape(2) * stack.shape(3);
    for (py::ssize_t t = 0; t < stack.shape(0); ++t) {
        Tensor<float> f({static_cast<int>(stack.shape(1)), static_cast<int>(stack.shape(2)),
                         static_cast<int>(stack.shape(3))});
        std::copy(stack.data() + t * frame_elems, stack.data() + (t + 1) * frame_elems,
                  f.data.begin());
        frames.push_back(std::move(f));
    }
    return frames;
}

VideoClip clip_from_array(const py::array_t<float, py::array::c_style>& stack,
                          std::optional<std::vector<int>> labels) {
    VideoClip clip;
    clip.id = "array";
    clip.frames = frames_from_array(stack);
    if (labels) {
        if (labels->size() != clip.frames.size())
            throw ValidationError("labels must have one entry per frame");
        clip.labels = std::move(labels);
    }
    return clip;
}

py::dict series_to_dict(const ScoreSeries& s) {
    py::dict d;
    d["clip_id"] = s.clip_id;
    d["skipped_prefix"] = s.skipped_prefix;
    d["frame_indices"] = s.frame_indices;
    d["psnr"] = s.psnr;
    d["score"] = s.score;
    if (!s.labels.empty()) d["labels"] = s.labels;
    return d;
}

}  // namespace

PYBIND11_MODULE(mpvad, m) {
    m.doc() = "Multi-path frame-prediction video anomaly detection toolkit";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", PyExc_ValueError);

    m.def(
        "generate_synthetic",
        [](const std::string& root, uint64_t seed, int num_clips, int frames_per_clip,
           int frame_size, double anomaly_rate) {
            SynthConfig cfg;
            cfg.root = root;
            cfg.seed = seed;
            cfg.num_clips = num_clips;
            cfg.frames_per_clip = frames_per_clip;
            cfg.frame_size = frame_size;
            cfg.anomaly_rate = anomaly_rate;
            generate_synthetic(cfg);
            return root + "/manifest.json";
        },
        py::arg("root"), py::arg("seed") = 7, py::arg("num_clips") = 20,
        py::arg("frames_per_clip") = 100, py::arg("frame_size") = 64,
        py::arg("anomaly_rate") = 0.25,
        "Write the synthetic benchmark dataset; returns the manifest path.");

    m.def(
        "load_clip_frames",
        [](const std::string& manifest_path, const std::string& clip_id) {
            DatasetManifest mf = load_manifest(manifest_path);
            VideoClip clip = load_clip(mf, clip_id);
            py::array_t<float> stack(
                {clip.length(), clip.frames[0].dim(0), clip.frames[0].dim(1),
                 clip.frames[0].dim(2)});
            float* dst = stack.mutable_data();
            for (const auto& f : clip.frames) dst = std::copy(f.data.begin(), f.data.end(), dst);
            py::object labels = py::none();
            if (clip.labels) labels = py::cast(*clip.labels);
            return py::make_tuple(stack, labels);
        },
        py::arg("manifest"), py::arg("clip_id"),
        "Load one clip as a [T,C,H,W] float32 array plus optional labels.");

    m.def(
        "train",
        [](const std::string& manifest_path, const std::string& out_dir, int p,
           std::vector<int> channels, std::vector<int> divisors, int epochs, int batch,
           double lr, double wd, double lambda_int, double lambda_gd, double lambda_nt,
           int loss_net_width, int stride, uint64_t seed, int workers) {
            DatasetManifest mf = load_manifest(manifest_path);
            NetworkConfig nc;
            nc.num_paths = static_cast<int>(channels.size());
            nc.input_len = p;
            nc.in_channels = mf.channels;
            nc.path_channels = std::move(channels);
            nc.path_divisors = std::move(divisors);
            nc.seed = seed;
            TrainConfig tc;
            tc.epochs = epochs;
            tc.batch_size = batch;
            tc.learning_rate = lr;
            tc.weight_decay = wd;
            tc.weights.lambda_int = lambda_int;
            tc.weights.lambda_gd = lambda_gd;
            tc.weights.lambda_nt = lambda_nt;
            tc.window_stride = stride;
            tc.seed = seed;
            tc.num_workers = workers;
            std::unique_ptr<LossNetwork<float>> ln;
            if (lambda_nt != 0.0)
                ln = std::make_unique<LossNetwork<float>>(
                    LossNetConfig::scaled(loss_net_width, seed));
            TrainResult r = train(mf, nc, tc, ln.get(), out_dir);
            return r.final_checkpoint;
        },
        py::arg("manifest"), py::arg("out_dir"), py::arg("p") = 8,
        py::arg("channels") = std::vector<int>{32, 64, 128},
        py::arg("divisors") = std::vector<int>{2, 4, 8}, py::arg("epochs") = 50,
        py::arg("batch") = 4, py::arg("lr") = 3e-4, py::arg("wd") = 1e-4,
        py::arg("lambda_int") = 1.0, py::arg("lambda_gd") = 1.0, py::arg("lambda_nt") = 1.0,
        py::arg("loss_net_width") = 8, py::arg("stride") = 1, py::arg("seed") = 0,
        py::arg("workers") = 0, "Train and return the final checkpoint path.");

    m.def(
        "predict_next",
        [](const std::string& checkpoint, const py::array_t<float, py::array::c_style>& stack) {
            LoadedCheckpoint ckpt = load_network_checkpoint(checkpoint);
            std::vector<Tensor<float>> frames = frames_from_array(stack);
            Tape<float> tape;
            Var<float> pred = ckpt.network->forward(tape, frames);
            return array_from_tensor(tape.value(pred.id));
        },
        py::arg("checkpoint"), py::arg("frames"),
        "Predict the next frame from a [P,C,H,W] window.");

    m.def(
        "score_frames",
        [](const std::string& checkpoint, const py::array_t<float, py::array::c_style>& stack,
           std::optional<std::vector<int>> labels, int p, int q) {
            LoadedCheckpoint ckpt = load_network_checkpoint(checkpoint);
            VideoClip clip = clip_from_array(stack, std::move(labels));
            const int use_p = p > 0 ? p : ckpt.config.input_len;
            ScoreSeries s = q == 1 ? score_clip(clip, *ckpt.network, use_p)
                                   : score_clip_reuse(clip, *ckpt.network, use_p, q);
            return series_to_dict(s);
        },
        py::arg("checkpoint"), py::arg("frames"), py::arg("labels") = py::none(),
        py::arg("p") = 0, py::arg("q") = 1,
        "Score a [T,C,H,W] clip; returns psnr/score lists (prefix excluded).");

    m.def(
        "mse",
        [](const py::array_t<float, py::array::c_style>& a,
           const py::array_t<float, py::array::c_style>& b) {
            return mse(tensor_from_array(a), tensor_from_array(b));
        },
        py::arg("target"), py::arg("pred"));

    m.def(
        "psnr",
        [](const py::array_t<float, py::array::c_style>& a,
           const py::array_t<float, py::array::c_style>& b, double max_value) {
            return psnr_db(tensor_from_array(a), tensor_from_array(b), max_value);
        },
        py::arg("target"), py::arg("pred"), py::arg("max_value") = 1.0);

    m.def("normalize_scores", &normalize_scores, py::arg("psnr_values"));

    m.def(
        "intensity_loss",
        [](const py::array_t<float, py::array::c_style>& target,
           const py::array_t<float, py::array::c_style>& pred, const std::string& reduction) {
            Tape<float> tp;
            Var<float> p = tp.constant(tensor_from_array(pred));
            Reduction red = reduction == "mean" ? Reduction::mean : Reduction::sum;
            return static_cast<double>(
                tp.value(intensity_loss(tp, p, tensor_from_array(target), red).id)[0]);
        },
        py::arg("target"), py::arg("pred"), py::arg("reduction") = "sum");

    m.def(
        "gradient_difference_loss",
        [](const py::array_t<float, py::array::c_style>& target,
           const py::array_t<float, py::array::c_style>& pred, const std::string& reduction) {
            Tape<float> tp;
            Var<float> p = tp.constant(tensor_from_array(pred));
            Reduction red = reduction == "mean" ? Reduction::mean : Reduction::sum;
            return static_cast<double>(tp.value(
                gradient_difference_loss(tp, p, tensor_from_array(target), red).id)[0]);
        },
        py::arg("target"), py::arg("pred"), py::arg("reduction") = "sum");

    m.def("auc", &auc, py::arg("scores"), py::arg("labels"),
          "Tie-aware rank AUC (Mann-Whitney).");

    m.def(
        "score_gap",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            ScoreSeries s;
            s.clip_id = "array";
            s.score = scores;
            s.psnr.assign(scores.size(), 0.0);
            for (size_t i = 0; i < scores.size(); ++i)
                s.frame_indices.push_back(static_cast<int>(i));
            s.labels = labels;
            return score_gap({s}).delta_s;
        },
        py::arg("scores"), py::arg("labels"),
        "Mean abnormal score minus mean normal score.");
}
