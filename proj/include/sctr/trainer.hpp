#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sctr/altf.hpp"
#include "sctr/autodiff.hpp"
#include "sctr/feature.hpp"
#include "sctr/halrtc.hpp"
#include "sctr/metrics.hpp"
#include "sctr/superpixel.hpp"
#include "sctr/tensor.hpp"

namespace sctr {

/// End-to-end run configuration. The paper-tuned ranges (lr_base, weight
/// decay, omega0, downsample) are enforced unless `force` is set; the fields
/// below them select implementation knobs with safe defaults.
struct TrainConfig {
    double lr_base = 1e-3;
    double weight_decay = 0.5;
    double omega0 = 3.0;
    std::array<int, 3> downsample{1, 1, 1};
    int iterations = 3000;
    int k_target = 32;
    double compactness = 10.0;
    uint32_t seed = 0;
    double sampling_rate = 0.2;
    bool force = false;

    int backbone_width = 256;
    int residual_blocks = 4;
    bool attention = true;
    FeatureMode feature_mode = FeatureMode::gray_mean;
    RankConfig rank_cfg{};
    GuideConfig guide_cfg{};
    bool reimpose_observed = true;
    double lr_min_frac = 0.1; // cosine floor as a fraction of lr_base
    int minibatch = 0;         // observed coords per patch per step; 0 = full batch
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (cfg.iterations < 1)
        throw ArgumentError("train config: iterations must be >= 1");
    if (cfg.k_target < 1) throw ArgumentError("train config: k_target must be >= 1");
    if (cfg.compactness <= 0)
        throw ArgumentError("train config: compactness must be positive");
    if (!(cfg.sampling_rate > 0.0 && cfg.sampling_rate <= 1.0))
        throw ArgumentError("train config: sampling_rate must be in (0, 1]");
    if (cfg.backbone_width < 1 || cfg.residual_blocks < 0)
        throw ArgumentError("train config: backbone shape invalid");
    if (!(cfg.lr_min_frac >= 0.0 && cfg.lr_min_frac <= 1.0))
        throw ArgumentError("train config: lr_min_frac must be in [0, 1]");
    if (cfg.minibatch < 0) throw ArgumentError("train config: minibatch must be >= 0");
    if (cfg.force) return;
    if (cfg.lr_base < 5e-5 || cfg.lr_base > 5e-3)
        throw ArgumentError("train config: lr_base outside [5e-5, 5e-3] (use force)");
    if (cfg.weight_decay < 0.5 || cfg.weight_decay > 3.0)
        throw ArgumentError("train config: weight_decay outside [0.5, 3.0] (use force)");
    if (cfg.omega0 < 1.0 || cfg.omega0 > 5.0)
        throw ArgumentError("train config: omega0 outside [1, 5] (use force)");
    static const std::array<std::array<int, 3>, 3> allowed{
        std::array<int, 3>{1, 1, 1}, std::array<int, 3>{1, 2, 1},
        std::array<int, 3>{2, 2, 1}};
    if (std::find(allowed.begin(), allowed.end(), cfg.downsample) == allowed.end())
        throw ArgumentError(
            "train config: downsample must be (1,1,1), (1,2,1) or (2,2,1) (use force)");
}

struct RunResult {
    DenseTensor3<double> reconstruction;
    MetricReport metrics;
    std::vector<double> loss_curve;
    TrainConfig config_echo;
    double wall_time_s = 0.0;
    int patch_count = 0;
    long long iteration_cost = 0;
};

/// Optional capture of intermediate stage outputs so callers can persist the
/// guide, label map, and trained parameters alongside the reconstruction.
struct TrainArtifacts {
    DenseTensor3<double> guide;
    LabelMap labels;
    AltfModel<double> model;
    std::vector<int> patch_labels; // superpixel label per model patch index
};

enum class TrainVariant { full, no_superpixel, no_altf, neither };

inline TrainVariant train_variant_from_string(const std::string& s) {
    if (s == "full") return TrainVariant::full;
    if (s == "no_superpixel") return TrainVariant::no_superpixel;
    if (s == "no_altf") return TrainVariant::no_altf;
    if (s == "neither") return TrainVariant::neither;
    throw ArgumentError("unknown train variant: " + s);
}

inline const char* to_string(TrainVariant v) {
    switch (v) {
        case TrainVariant::full: return "full";
        case TrainVariant::no_superpixel: return "no_superpixel";
        case TrainVariant::no_altf: return "no_altf";
        default: return "neither";
    }
}

/// Uniform-random entry mask with exactly round(rate * numel) observed.
inline ObservationMask make_mask(int i1, int i2, int i3, double sampling_rate,
                                 uint32_t seed) {
    if (!(sampling_rate > 0.0 && sampling_rate <= 1.0))
        throw ArgumentError("make_mask: sampling_rate must be in (0, 1]");
    ObservationMask mask(i1, i2, i3);
    const std::size_t n = mask.size();
    const auto want = static_cast<std::size_t>(
        std::llround(sampling_rate * static_cast<double>(n)));
    if (want == 0) throw ArgumentError("make_mask: zero observed entries");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937 gen(seed);
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t t = 0; t < want && t < n; ++t) mask.flags[order[t]] = 1;
    return mask;
}

template <class T>
ObservationMask make_mask(const DenseTensor3<T>& like, double sampling_rate,
                          uint32_t seed) {
    return make_mask(like.i1, like.i2, like.i3, sampling_rate, seed);
}

namespace detail {

inline LabelMap whole_image_labels(int rows, int cols) {
    LabelMap lm;
    lm.rows = rows;
    lm.cols = cols;
    lm.num_labels = 1;
    lm.labels.assign(static_cast<std::size_t>(rows) * cols, 0);
    return lm;
}

/// Per-patch observed flat coordinate lists in the mode-3 unfolding layout,
/// for minibatch subsampling.
inline std::vector<Eigen::Index> observed_positions(const Matrix<double>& mask01) {
    std::vector<Eigen::Index> pos;
    for (Eigen::Index i = 0; i < mask01.size(); ++i)
        if (mask01(i) > 0) pos.push_back(i);
    return pos;
}

} // namespace detail

/// Core training routine shared by train_sctr and the ablations.
inline RunResult train_run(const DenseTensor3<double>& data, const ObservationMask& mask,
                           const TrainConfig& cfg, bool use_superpixels, bool use_altf,
                           double peak = 0.0, TrainArtifacts* artifacts = nullptr) {
    validate_train_config(cfg);
    if (!mask.congruent(data)) throw ArgumentError("train: mask shape mismatch");
    if (mask.count_observed() == 0) throw ArgumentError("train: empty mask");
    const auto t0 = std::chrono::steady_clock::now();

    DenseTensor3<double> observed = data;
    for (std::size_t f = 0; f < observed.data.size(); ++f)
        if (!mask.flags[f]) observed.data[f] = 0.0;

    GuideResult<double> guide = compute_guide(observed, mask, cfg.guide_cfg);

    LabelMap labels;
    if (use_superpixels) {
        FeatureImage feat = guide_to_feature_image(guide.guide, cfg.feature_mode);
        labels = slic_segment(feat, cfg.k_target, cfg.compactness, 10, cfg.seed);
    } else {
        labels = detail::whole_image_labels(data.i1, data.i2);
    }

    auto patches = extract_patches(labels, observed, mask, guide.guide, cfg.rank_cfg);

    BackboneConfig bb;
    bb.width = use_altf ? cfg.backbone_width : 1;
    bb.residual_blocks = use_altf ? cfg.residual_blocks : 0;
    bb.omega0 = cfg.omega0;
    bb.attention = use_altf && cfg.attention;
    auto shapes = patch_shapes_of(patches);
    auto model = make_altf_model<double>(shapes, bb, cfg.downsample, cfg.seed);

    // ablation without the coordinate network: factor matrices become plain
    // learnable parameters, cores stay
    std::vector<std::array<int, 3>> free_ids;
    if (!use_altf) {
        std::mt19937 fgen(cfg.seed + 0x51f15eedu);
        free_ids.reserve(shapes.size());
        for (std::size_t k = 0; k < shapes.size(); ++k) {
            const auto& s = shapes[k];
            std::string base = "patch" + std::to_string(k) + ".free_";
            std::array<int, 3> ids{};
            const int dims[3] = {s.h, s.w, s.c};
            const char* names[3] = {"u", "v", "w"};
            for (int a = 0; a < 3; ++a)
                ids[a] = model.store.add(
                    base + names[a],
                    detail::gaussian_init<double>(fgen, dims[a], s.ranks[a], 0.1));
            free_ids.push_back(ids);
        }
    }

    std::vector<PatchGraph<double>> graphs;
    graphs.reserve(patches.size());
    for (std::size_t k = 0; k < patches.size(); ++k) {
        Matrix<double> target = unfold(patches[k].data, 3);
        DenseTensor3<double> m01t(patches[k].h, patches[k].w, patches[k].c);
        for (std::size_t f = 0; f < m01t.data.size(); ++f)
            m01t.data[f] = patches[k].mask.flags[f] ? 1.0 : 0.0;
        Matrix<double> m01 = unfold(m01t, 3);
        graphs.push_back(build_patch_graph<double>(model, static_cast<int>(k), &target,
                                                   &m01,
                                                   use_altf ? nullptr : &free_ids[k]));
    }

    std::vector<std::vector<Eigen::Index>> obs_pos;
    if (cfg.minibatch > 0) {
        obs_pos.reserve(graphs.size());
        for (auto& pg : graphs) obs_pos.push_back(detail::observed_positions(pg.sse->mask01));
    }

    AdamState astate;
    AdamConfig acfg;
    acfg.weight_decay = cfg.weight_decay;
    ScheduleState sched;
    sched.lr_base = cfg.lr_base;
    sched.lr_min = cfg.lr_base * cfg.lr_min_frac;
    sched.total_steps = cfg.iterations;

    std::mt19937 batch_gen(cfg.seed + 0xb47c4u);
    std::vector<double> curve;
    curve.reserve(cfg.iterations);
    try {
        for (int it = 0; it < cfg.iterations; ++it) {
            if (cfg.minibatch > 0) {
                for (std::size_t k = 0; k < graphs.size(); ++k) {
                    auto& pos = obs_pos[k];
                    auto& sse = *graphs[k].sse;
                    const auto take =
                        std::min<std::size_t>(pos.size(), static_cast<std::size_t>(cfg.minibatch));
                    if (take == 0 || take == pos.size()) continue;
                    // partial Fisher-Yates: deterministic per (seed, iteration)
                    for (std::size_t t = 0; t < take; ++t) {
                        std::uniform_int_distribution<std::size_t> pick(t, pos.size() - 1);
                        std::swap(pos[t], pos[pick(batch_gen)]);
                    }
                    sse.mask01.setZero();
                    for (std::size_t t = 0; t < take; ++t) sse.mask01(pos[t]) = 1.0;
                    graphs[k].observed_count = take;
                }
            }
            double loss = 0.0;
            for (auto& pg : graphs) {
                pg.graph->zero_local_grads();
                pg.graph->forward();
                if (pg.observed_count > 0)
                    loss += pg.sse->value(0, 0) / static_cast<double>(pg.observed_count);
            }
            if (!std::isfinite(loss))
                throw NumericError("train: loss diverged at iteration " +
                                   std::to_string(it));
            model.store.zero_grads();
            for (auto& pg : graphs)
                if (pg.observed_count > 0)
                    pg.graph->backward(pg.sse, 1.0 / static_cast<double>(pg.observed_count));
            for (auto& pg : graphs) pg.graph->flush_grads();
            sched.step = it;
            acfg.lr = cosine_lr(sched);
            adam_step(model.store, astate, acfg);
            curve.push_back(loss);
        }
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " [after " +
                           std::to_string(curve.size()) + " completed iterations]");
    }

    // assembly: membership-true pixels only; membership partitions the image
    DenseTensor3<double> recon(data.i1, data.i2, data.i3);
    for (std::size_t k = 0; k < patches.size(); ++k) {
        graphs[k].graph->forward();
        DenseTensor3<double> pred =
            fold(graphs[k].pred_unfold3->value, 3, graphs[k].shape);
        const auto& p = patches[k];
        for (int i = 0; i < p.h; ++i)
            for (int j = 0; j < p.w; ++j) {
                if (!p.member(i, j)) continue;
                for (int b = 0; b < p.c; ++b)
                    recon(p.row0 + i, p.col0 + j, b) = pred(i, j, b);
            }
    }
    if (cfg.reimpose_observed)
        for (std::size_t f = 0; f < recon.data.size(); ++f)
            if (mask.flags[f]) recon.data[f] = data.data[f];

    double used_peak = peak;
    if (used_peak <= 0.0) {
        for (double v : data.data) used_peak = std::max(used_peak, std::abs(v));
        if (used_peak <= 0.0) used_peak = 1.0;
    }

    RunResult res;
    res.metrics = compute_metrics(data, recon, used_peak);
    res.reconstruction = std::move(recon);
    res.loss_curve = std::move(curve);
    res.config_echo = cfg;
    res.patch_count = static_cast<int>(patches.size());
    res.iteration_cost = estimate_iteration_cost(shapes, bb.width);
    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (artifacts) {
        artifacts->guide = std::move(guide.guide);
        artifacts->labels = std::move(labels);
        artifacts->patch_labels.clear();
        for (const auto& p : patches) artifacts->patch_labels.push_back(p.label);
        artifacts->model = std::move(model); // graphs are dead weight past this point
    }
    return res;
}

inline RunResult train_sctr(const DenseTensor3<double>& data, const ObservationMask& mask,
                            const TrainConfig& cfg, double peak = 0.0,
                            TrainArtifacts* artifacts = nullptr) {
    return train_run(data, mask, cfg, true, true, peak, artifacts);
}

inline RunResult train_ablation(const DenseTensor3<double>& data,
                                const ObservationMask& mask, const TrainConfig& cfg,
                                TrainVariant variant, double peak = 0.0,
                                TrainArtifacts* artifacts = nullptr) {
    const bool superpixels =
        variant == TrainVariant::full || variant == TrainVariant::no_altf;
    const bool altf =
        variant == TrainVariant::full || variant == TrainVariant::no_superpixel;
    return train_run(data, mask, cfg, superpixels, altf, peak, artifacts);
}

struct SweepRow {
    double alpha = 0.0;
    int n = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

/// One full training run per granularity coefficient, k_target = round(8*2^a).
inline std::vector<SweepRow> sweep_granularity(const DenseTensor3<double>& data,
                                               const ObservationMask& mask,
                                               const TrainConfig& cfg,
                                               const std::vector<double>& alphas,
                                               double peak = 0.0) {
    if (alphas.empty()) throw ArgumentError("sweep_granularity: no alphas given");
    std::vector<SweepRow> rows;
    rows.reserve(alphas.size());
    for (double a : alphas) {
        TrainConfig run_cfg = cfg;
        run_cfg.k_target =
            static_cast<int>(std::llround(8.0 * std::pow(2.0, a)));
        RunResult r = train_sctr(data, mask, run_cfg, peak);
        rows.push_back({a, run_cfg.k_target, r.metrics.psnr_db, r.metrics.ssim});
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "alpha,n,psnr,ssim\n";
    for (const auto& r : rows) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%g,%d,%.6g,%.6g\n", r.alpha, r.n, r.psnr_db,
                      r.ssim);
        out += buf;
    }
    return out;
}

} // namespace sctr
