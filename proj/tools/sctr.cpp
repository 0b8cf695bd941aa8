// Command line surface for the SCTR pipeline. Subcommands cover each stage
// (mask, guide, segment, train, eval, sweep, report) so stages can be cached
// and inspected between runs. Exit codes: 0 ok, 1 usage, 2 data/format,
// 3 numeric; every failure prints exactly one line to stderr.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sctr/io.hpp"
#include "sctr/synth.hpp"

namespace fs = std::filesystem;
using namespace sctr;

namespace {

std::string single_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

// "inf" for infinities, otherwise %.6g with a guaranteed decimal point so the
// output always reads as a float ("1.0", not "1").
std::string fmt_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    std::string s = buf;
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

ImageKind kind_of(const std::string& path) {
    const auto n = path.size();
    return n >= 4 && path.compare(n - 4, 4, ".png") == 0 ? ImageKind::png8
                                                         : ImageKind::tensor_file;
}

std::string write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing", 0);
    out << text;
    return path;
}

struct GlobalOpts {
    std::string config_path;
    uint32_t seed = 0;
    bool seed_given = false;
    int threads = 1;
    bool force = false;

    TrainConfig config() const {
        TrainConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw FormatError(config_path + ": cannot open", 0);
            json j = json::parse(in, nullptr, false);
            if (j.is_discarded())
                throw FormatError(config_path + ": invalid JSON", 0);
            cfg = train_config_from_json(j);
        }
        if (seed_given) cfg.seed = seed;
        if (force) cfg.force = true;
        return cfg;
    }
};

void add_globals(CLI::App* cmd, GlobalOpts& g) {
    cmd->add_option("--config", g.config_path,
                    "JSON config file; keys mirror the train config fields");
    cmd->add_option("--seed", g.seed, "Override the config seed")
        ->each([&](const std::string&) { g.seed_given = true; });
    cmd->add_option("--threads", g.threads,
                    "Worker threads for patch training (this build runs serially)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--force-out-of-range", g.force,
                  "Accept hyperparameters outside the validated ranges");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"superpixel-guided continuous tensor reconstruction toolkit"};
    app.require_subcommand(1);
    GlobalOpts g;

    // mask ------------------------------------------------------------------
    auto* mask_cmd = app.add_subcommand("mask", "Sample a random observation mask");
    std::vector<int> mask_shape;
    std::string mask_like, mask_out = "mask.t";
    double mask_rate = 0.2;
    mask_cmd->add_option("--shape", mask_shape, "Tensor shape I1,I2,I3")
        ->delimiter(',')
        ->expected(3);
    mask_cmd->add_option("--like", mask_like, "Take the shape from this tensor file");
    mask_cmd->add_option("--rate", mask_rate, "Sampling rate in (0,1]");
    mask_cmd->add_option("--out", mask_out, "Output mask file");
    add_globals(mask_cmd, g);

    // guide -----------------------------------------------------------------
    auto* guide_cmd = app.add_subcommand("guide", "Low-rank completion for the guide");
    std::string guide_data, guide_mask, guide_out = "guide.t";
    guide_cmd->add_option("--data", guide_data, "Observed tensor (.t or .png)")
        ->required();
    guide_cmd->add_option("--mask", guide_mask, "Observation mask file")->required();
    guide_cmd->add_option("--out", guide_out, "Output guide tensor file");
    add_globals(guide_cmd, g);

    // segment ---------------------------------------------------------------
    auto* seg_cmd = app.add_subcommand("segment", "Superpixel segmentation of a guide");
    std::string seg_guide, seg_out = "labels.png", seg_viz;
    int seg_k = 32;
    double seg_compact = 10.0;
    std::string seg_feature = "gray_mean";
    seg_cmd->add_option("--guide", seg_guide, "Guide tensor (.t or .png)")->required();
    seg_cmd->add_option("--k", seg_k, "Target superpixel count");
    seg_cmd->add_option("--compactness", seg_compact, "SLIC compactness");
    seg_cmd->add_option("--feature", seg_feature, "Feature image mode")
        ->check(CLI::IsMember({"gray_mean", "pca3"}));
    seg_cmd->add_option("--out", seg_out, "Output label map PNG (16-bit + sidecar)");
    seg_cmd->add_option("--viz", seg_viz, "Optional boundary visualization PNG");
    add_globals(seg_cmd, g);

    // train -----------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Run SCTR or an ablation variant");
    std::string train_data, train_mask, train_variant = "full", train_dir = ".";
    std::string train_dataset;
    train_cmd->add_option("--data", train_data, "Ground-truth tensor (.t or .png)")
        ->required();
    train_cmd->add_option("--mask", train_mask,
                          "Observation mask file (sampled from the config rate if absent)");
    train_cmd->add_option("--variant", train_variant, "full|no_superpixel|no_altf|neither");
    train_cmd->add_option("--out-dir", train_dir, "Artifact output directory");
    train_cmd->add_option("--dataset", train_dataset,
                          "Dataset name for the metrics row (default: data file stem)");
    add_globals(train_cmd, g);

    // eval ------------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM between two tensors");
    std::string eval_ref, eval_est;
    eval_cmd->add_option("ref", eval_ref, "Reference tensor")->required();
    eval_cmd->add_option("est", eval_est, "Estimate tensor")->required();
    add_globals(eval_cmd, g);

    // sweep -----------------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "Granularity sweep over alpha");
    std::string sweep_data, sweep_mask, sweep_out;
    std::vector<double> sweep_alphas = {0.0, 1.0, 2.0, 3.0};
    sweep_cmd->add_option("--data", sweep_data, "Ground-truth tensor (.t or .png)")
        ->required();
    sweep_cmd->add_option("--mask", sweep_mask,
                          "Observation mask file (sampled from the config rate if absent)");
    sweep_cmd->add_option("--alphas", sweep_alphas,
                          "Granularity coefficients; segments n = round(8*2^a)")
        ->delimiter(',');
    sweep_cmd->add_option("--out", sweep_out, "CSV output path (stdout if absent)");
    add_globals(sweep_cmd, g);

    // report ----------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Merge metric CSVs into a Markdown grid");
    std::vector<std::string> report_files;
    std::string report_out;
    report_cmd->add_option("csv", report_files, "Metric CSV files")->required();
    report_cmd->add_option("--out", report_out, "Markdown output path (stdout if absent)");
    add_globals(report_cmd, g);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        std::fprintf(stderr, "sctr: usage: %s\n", single_line(e.what()).c_str());
        return 1;
    }

    try {
        if (*mask_cmd) {
            int i1, i2, i3;
            if (!mask_like.empty()) {
                TensorData like = load_tensor(mask_like);
                i1 = like.data.i1, i2 = like.data.i2, i3 = like.data.i3;
            } else if (mask_shape.size() == 3) {
                i1 = mask_shape[0], i2 = mask_shape[1], i3 = mask_shape[2];
            } else {
                throw ArgumentError("mask: give --shape I1,I2,I3 or --like <tensor>");
            }
            save_mask(mask_out, make_mask(i1, i2, i3, mask_rate, g.seed));
        } else if (*guide_cmd) {
            TrainConfig cfg = g.config();
            TensorData td = load_image(guide_data, kind_of(guide_data));
            ObservationMask m = load_mask(guide_mask);
            GuideResult<double> gr = halrtc_complete(td.data, m, cfg.guide_cfg);
            save_tensor(guide_out, gr.guide, td.peak, td.bands);
        } else if (*seg_cmd) {
            TensorData td = load_image(seg_guide, kind_of(seg_guide));
            FeatureImage feat = guide_to_feature_image(
                td.data, seg_feature == "pca3" ? FeatureMode::pca3 : FeatureMode::gray_mean);
            LabelMap lm = slic_segment(feat, seg_k, seg_compact, 10, g.seed);
            save_label_map(seg_out, lm, seg_k, seg_compact, g.seed);
            if (!seg_viz.empty()) save_png8(seg_viz, boundary_overlay(feat, lm));
        } else if (*train_cmd) {
            TrainConfig cfg = g.config();
            TensorData td = load_image(train_data, kind_of(train_data));
            fs::create_directories(train_dir);
            auto in_dir = [&](const std::string& name) {
                return (fs::path(train_dir) / name).string();
            };
            ObservationMask m;
            std::string mask_path = train_mask;
            if (!train_mask.empty()) {
                m = load_mask(train_mask);
            } else {
                m = make_mask(td.data, cfg.sampling_rate, cfg.seed);
                mask_path = in_dir("mask.t");
                save_mask(mask_path, m);
            }
            TrainVariant variant = train_variant_from_string(train_variant);
            TrainArtifacts art;
            RunResult res = train_ablation(td.data, m, cfg, variant, td.peak, &art);

            const std::string dataset =
                train_dataset.empty() ? fs::path(train_data).stem().string() : train_dataset;
            const double rate = static_cast<double>(m.count_observed()) /
                                static_cast<double>(m.size());
            json manifest;
            manifest["config"] = train_config_to_json(res.config_echo);
            manifest["variant"] = to_string(variant);
            manifest["inputs"] = {{"data", train_data}, {"mask", mask_path}};
            json artifacts;
            save_tensor(in_dir("guide.t"), art.guide, td.peak, td.bands);
            artifacts["guide"] = in_dir("guide.t");
            save_label_map(in_dir("labels.png"), art.labels, cfg.k_target,
                           cfg.compactness, cfg.seed);
            artifacts["labels"] = in_dir("labels.png");
            save_checkpoint(in_dir("checkpoint.ckpt"), art.model.store,
                            altf_checkpoint_extra(art.model, art.patch_labels));
            artifacts["checkpoint"] = in_dir("checkpoint.ckpt");
            save_tensor(in_dir("reconstruction.t"), res.reconstruction, td.peak, td.bands);
            artifacts["reconstruction"] = in_dir("reconstruction.t");
            artifacts["metrics_csv"] = write_text(
                in_dir("metrics.csv"),
                metric_csv_header() + "\n" +
                    metric_csv_row(dataset, to_string(variant), rate,
                                   res.metrics) +
                    "\n");
            artifacts["loss_curve_csv"] =
                write_text(in_dir("loss_curve.csv"), loss_curve_csv(res.loss_curve));
            manifest["artifacts"] = artifacts;
            manifest["metrics"] = {{"psnr_db", res.metrics.psnr_db},
                                   {"ssim", res.metrics.ssim},
                                   {"peak", res.metrics.peak}};
            manifest["wall_time_s"] = res.wall_time_s;
            manifest["patch_count"] = res.patch_count;
            manifest["iteration_cost"] = res.iteration_cost;
            write_text(in_dir("manifest.json"), manifest.dump(2) + "\n");
            std::printf("psnr=%s ssim=%s manifest=%s\n",
                        fmt_metric(res.metrics.psnr_db).c_str(),
                        fmt_metric(res.metrics.ssim).c_str(),
                        in_dir("manifest.json").c_str());
        } else if (*eval_cmd) {
            TensorData ref = load_image(eval_ref, kind_of(eval_ref));
            TensorData est = load_image(eval_est, kind_of(eval_est));
            MetricReport rep = compute_metrics(ref.data, est.data, ref.peak);
            std::printf("psnr=%s ssim=%s\n", fmt_metric(rep.psnr_db).c_str(),
                        fmt_metric(rep.ssim).c_str());
        } else if (*sweep_cmd) {
            TrainConfig cfg = g.config();
            TensorData td = load_image(sweep_data, kind_of(sweep_data));
            ObservationMask m = sweep_mask.empty()
                                    ? make_mask(td.data, cfg.sampling_rate, cfg.seed)
                                    : load_mask(sweep_mask);
            auto rows = sweep_granularity(td.data, m, cfg, sweep_alphas, td.peak);
            const std::string csv = sweep_csv(rows);
            if (sweep_out.empty())
                std::fputs(csv.c_str(), stdout);
            else
                write_text(sweep_out, csv);
        } else if (*report_cmd) {
            std::string text;
            for (const auto& f : report_files) {
                std::ifstream in(f, std::ios::binary);
                if (!in) throw FormatError(f + ": cannot open", 0);
                text.append(std::istreambuf_iterator<char>(in), {});
                if (!text.empty() && text.back() != '\n') text += '\n';
            }
            const std::string md = report_markdown(parse_metric_csv(text));
            if (report_out.empty())
                std::fputs(md.c_str(), stdout);
            else
                write_text(report_out, md);
        }
    } catch (const ArgumentError& e) {
        std::fprintf(stderr, "sctr: usage: %s\n", single_line(e.what()).c_str());
        return 1;
    } catch (const FormatError& e) {
        if (e.offset != SIZE_MAX)
            std::fprintf(stderr, "sctr: format: %s (byte %zu)\n",
                         single_line(e.what()).c_str(), e.offset);
        else
            std::fprintf(stderr, "sctr: format: %s\n", single_line(e.what()).c_str());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "sctr: numeric: %s\n", single_line(e.what()).c_str());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sctr: internal: %s\n", single_line(e.what()).c_str());
        return 3;
    }
    return 0;
}
