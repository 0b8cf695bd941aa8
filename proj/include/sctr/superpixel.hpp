#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "sctr/feature.hpp"
#include "sctr/tensor.hpp"

namespace sctr {

/// Per-pixel superpixel labels over the spatial grid, values in [0, num_labels).
struct LabelMap {
    int rows = 0, cols = 0;
    int num_labels = 0;
    std::vector<int> labels;

    LabelMap() = default;
    LabelMap(int r, int c) : rows(r), cols(c), labels(static_cast<std::size_t>(r) * c, 0) {}

    int& at(int i, int j) { return labels[static_cast<std::size_t>(i) * cols + j]; }
    int operator()(int i, int j) const { return labels[static_cast<std::size_t>(i) * cols + j]; }
};

struct RankConfig {
    double energy = 0.99;
    int r_max = 16;
    // Uniform override for the complexity estimator's fixed-rank scenario.
    bool fixed = false;
    std::array<int, 3> fixed_ranks{1, 1, 1};
};

/// One superpixel patch: tight bbox (half-open), bbox-local membership mask,
/// bbox crops of data/mask/guide spanning full axis 3, and Tucker ranks.
template <class T>
struct PatchSpec {
    int label = 0;
    int row0 = 0, row1 = 0, col0 = 0, col1 = 0;
    std::vector<uint8_t> membership; // (row1-row0) x (col1-col0), row-major
    int h = 0, w = 0, c = 0;
    std::array<int, 3> ranks{1, 1, 1};
    DenseTensor3<T> data;
    ObservationMask mask;
    DenseTensor3<T> guide;

    bool member(int r, int c_) const {
        return membership[static_cast<std::size_t>(r) * (col1 - col0) + c_] != 0;
    }
};

namespace detail {

struct SlicCenter {
    double row, col;
    std::vector<double> color;
};

inline double color_dist2(const std::vector<Matrix<double>>& ch, double scale, int i, int j,
                          const SlicCenter& c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < ch.size(); ++k) {
        double d = scale * ch[k](i, j) - c.color[k];
        acc += d * d;
    }
    return acc;
}

/// Squared gradient magnitude used for the 3x3 center perturbation.
inline double gradient2(const std::vector<Matrix<double>>& ch, double scale, int i, int j) {
    const int rows = static_cast<int>(ch[0].rows()), cols = static_cast<int>(ch[0].cols());
    int im = std::max(i - 1, 0), ip = std::min(i + 1, rows - 1);
    int jm = std::max(j - 1, 0), jp = std::min(j + 1, cols - 1);
    double acc = 0.0;
    for (const auto& m : ch) {
        double dv = scale * (m(ip, j) - m(im, j));
        double dh = scale * (m(i, jp) - m(i, jm));
        acc += dv * dv + dh * dh;
    }
    return acc;
}

struct Component {
    int label;
    std::vector<int> pixels; // flat indices
};

/// 4-connected components of a label image, in raster order of first pixel.
inline std::vector<Component> connected_components(const LabelMap& lm) {
    const int rows = lm.rows, cols = lm.cols;
    std::vector<int> comp(static_cast<std::size_t>(rows) * cols, -1);
    std::vector<Component> comps;
    std::deque<int> queue;
    for (int start = 0; start < rows * cols; ++start) {
        if (comp[start] >= 0) continue;
        int id = static_cast<int>(comps.size());
        comps.push_back({lm.labels[start], {}});
        comp[start] = id;
        queue.push_back(start);
        while (!queue.empty()) {
            int p = queue.front();
            queue.pop_front();
            comps[id].pixels.push_back(p);
            int i = p / cols, j = p % cols;
            const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
            for (int d = 0; d < 4; ++d) {
                int ni = i + di[d], nj = j + dj[d];
                if (ni < 0 || ni >= rows || nj < 0 || nj >= cols) continue;
                int q = ni * cols + nj;
                if (comp[q] < 0 && lm.labels[q] == comps[id].label) {
                    comp[q] = id;
                    queue.push_back(q);
                }
            }
        }
    }
    return comps;
}

/// Merge every non-largest component of each label into the largest adjacent
/// settled label, then fold labels smaller than min_label_pixels into their
/// largest neighbor, then relabel consecutively in raster order.
/// Orphans only join regions already settled (the per-label main components
/// and previously merged orphans), so settled regions stay 4-connected.
inline void enforce_connectivity(LabelMap& lm, int min_label_pixels) {
    const int rows = lm.rows, cols = lm.cols;
    auto comps = connected_components(lm);

    std::vector<std::size_t> label_sizes;
    for (const auto& c : comps) {
        if (c.label >= static_cast<int>(label_sizes.size())) label_sizes.resize(c.label + 1, 0);
        label_sizes[c.label] += c.pixels.size();
    }
    // main component of each label = its largest one
    std::vector<int> main_comp(label_sizes.size(), -1);
    for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        int l = comps[ci].label;
        if (main_comp[l] < 0 || comps[ci].pixels.size() > comps[main_comp[l]].pixels.size())
            main_comp[l] = static_cast<int>(ci);
    }
    std::vector<char> settled_pixel(lm.labels.size(), 0);
    std::vector<char> comp_settled(comps.size(), 0);
    std::vector<std::size_t> settled_size(label_sizes.size(), 0);
    for (std::size_t l = 0; l < label_sizes.size(); ++l)
        if (main_comp[l] >= 0) {
            comp_settled[main_comp[l]] = 1;
            settled_size[l] = comps[main_comp[l]].pixels.size();
            for (int p : comps[main_comp[l]].pixels) settled_pixel[p] = 1;
        }
    const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (std::size_t ci = 0; ci < comps.size(); ++ci) {
            if (comp_settled[ci]) continue;
            // adjacent settled label with the largest settled size
            int best = -1;
            std::size_t best_size = 0;
            for (int p : comps[ci].pixels) {
                int i = p / cols, j = p % cols;
                for (int d = 0; d < 4; ++d) {
                    int ni = i + di[d], nj = j + dj[d];
                    if (ni < 0 || ni >= rows || nj < 0 || nj >= cols) continue;
                    int q = ni * cols + nj;
                    if (!settled_pixel[q]) continue;
                    int nl = lm.labels[q];
                    if (settled_size[nl] > best_size ||
                        (settled_size[nl] == best_size && nl < best)) {
                        best = nl;
                        best_size = settled_size[nl];
                    }
                }
            }
            if (best < 0) continue; // touches no settled region yet; later pass
            settled_size[best] += comps[ci].pixels.size();
            for (int p : comps[ci].pixels) {
                lm.labels[p] = best;
                settled_pixel[p] = 1;
            }
            comp_settled[ci] = 1;
            progressed = true;
        }
    }

    // fold tiny labels into their largest neighbor until none remain
    for (;;) {
        comps = connected_components(lm);
        int victim = -1;
        std::size_t victim_size = 0;
        for (const auto& c : comps)
            if (static_cast<int>(c.pixels.size()) < min_label_pixels &&
                c.pixels.size() != static_cast<std::size_t>(rows) * cols)
                if (victim < 0 || c.pixels.size() < victim_size) {
                    victim = static_cast<int>(&c - comps.data());
                    victim_size = c.pixels.size();
                }
        if (victim < 0) break;
        std::vector<std::size_t> sizes;
        for (const auto& c : comps) {
            if (c.label >= static_cast<int>(sizes.size())) sizes.resize(c.label + 1, 0);
            sizes[c.label] += c.pixels.size();
        }
        int best = -1;
        std::size_t best_size = 0;
        for (int p : comps[victim].pixels) {
            int i = p / cols, j = p % cols;
            for (int d = 0; d < 4; ++d) {
                int ni = i + di[d], nj = j + dj[d];
                if (ni < 0 || ni >= rows || nj < 0 || nj >= cols) continue;
                int nl = lm.labels[ni * cols + nj];
                if (nl == comps[victim].label) continue;
                if (sizes[nl] > best_size || (sizes[nl] == best_size && nl < best)) {
                    best = nl;
                    best_size = sizes[nl];
                }
            }
        }
        if (best < 0) break;
        for (int p : comps[victim].pixels) lm.labels[p] = best;
    }

    // consecutive relabel, raster order of first appearance
    std::vector<int> seen(std::max<std::size_t>(label_sizes.size(), 1), -1);
    int next = 0;
    for (auto& l : lm.labels) {
        if (l >= static_cast<int>(seen.size())) seen.resize(l + 1, -1);
        if (seen[l] < 0) seen[l] = next++;
        l = seen[l];
    }
    lm.num_labels = next;
}

} // namespace detail

/// SLIC over a feature image. Centers start on a regular grid, perturbed to the
/// lowest-gradient spot in a 3x3 neighborhood; pixels are assigned within
/// 2S x 2S windows under D = sqrt(d_color^2 + (d_spatial/S)^2 * m^2); labels are
/// made 4-connected afterwards. Channels are scaled by feature.slic_scale
/// before distance computation. The algorithm is deterministic; seed is part
/// of the interface for config plumbing and does not influence the result.
inline LabelMap slic_segment(const FeatureImage& feature, int k_target, double compactness = 10.0,
                             int max_iters = 10, uint32_t seed = 0) {
    (void)seed;
    if (feature.channels.empty()) throw ArgumentError("slic_segment: empty feature image");
    const int rows = static_cast<int>(feature.channels[0].rows());
    const int cols = static_cast<int>(feature.channels[0].cols());
    const long npix = static_cast<long>(rows) * cols;
    if (k_target < 1 || k_target > npix)
        throw ArgumentError("slic_segment: k_target out of range");
    if (compactness <= 0) throw ArgumentError("slic_segment: compactness must be positive");
    const auto& ch = feature.channels;
    const double scale = feature.slic_scale;
    const double s = std::sqrt(static_cast<double>(npix) / k_target);

    // grid init
    int ny = std::max(1, static_cast<int>(std::round(rows / s)));
    int nx = std::max(1, static_cast<int>(std::round(cols / s)));
    std::vector<detail::SlicCenter> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int gy = 0; gy < ny; ++gy)
        for (int gx = 0; gx < nx; ++gx) {
            int ci = std::min(rows - 1, static_cast<int>((gy + 0.5) * rows / ny));
            int cj = std::min(cols - 1, static_cast<int>((gx + 0.5) * cols / nx));
            // 3x3 lowest-gradient perturbation
            int bi = ci, bj = cj;
            double bg = std::numeric_limits<double>::infinity();
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    int i = ci + di, j = cj + dj;
                    if (i < 0 || i >= rows || j < 0 || j >= cols) continue;
                    double g = detail::gradient2(ch, scale, i, j);
                    if (g < bg) {
                        bg = g;
                        bi = i;
                        bj = j;
                    }
                }
            detail::SlicCenter c;
            c.row = bi;
            c.col = bj;
            for (const auto& m : ch) c.color.push_back(scale * m(bi, bj));
            centers.push_back(std::move(c));
        }

    LabelMap lm(rows, cols);
    std::vector<double> best_d(static_cast<std::size_t>(rows) * cols);
    const double m2_s2 = (compactness * compactness) / (s * s);
    for (int iter = 0; iter < max_iters; ++iter) {
        std::fill(best_d.begin(), best_d.end(), std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const auto& c = centers[k];
            int r0 = std::max(0, static_cast<int>(c.row - s));
            int r1 = std::min(rows - 1, static_cast<int>(c.row + s));
            int c0 = std::max(0, static_cast<int>(c.col - s));
            int c1 = std::min(cols - 1, static_cast<int>(c.col + s));
            for (int i = r0; i <= r1; ++i)
                for (int j = c0; j <= c1; ++j) {
                    double dc2 = detail::color_dist2(ch, scale, i, j, c);
                    double ds2 = (i - c.row) * (i - c.row) + (j - c.col) * (j - c.col);
                    double d = dc2 + ds2 * m2_s2;
                    std::size_t p = static_cast<std::size_t>(i) * cols + j;
                    if (d < best_d[p]) {
                        best_d[p] = d;
                        lm.labels[p] = static_cast<int>(k);
                    }
                }
        }
        // pixels outside every window (possible on ragged grids): nearest center
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                std::size_t p = static_cast<std::size_t>(i) * cols + j;
                if (std::isinf(best_d[p])) {
                    double bd = std::numeric_limits<double>::infinity();
                    for (std::size_t k = 0; k < centers.size(); ++k) {
                        double ds2 = (i - centers[k].row) * (i - centers[k].row) +
                                     (j - centers[k].col) * (j - centers[k].col);
                        double d = detail::color_dist2(ch, scale, i, j, centers[k]) + ds2 * m2_s2;
                        if (d < bd) {
                            bd = d;
                            lm.labels[p] = static_cast<int>(k);
                        }
                    }
                    best_d[p] = bd;
                }
            }
        // recompute centers
        std::vector<detail::SlicCenter> next(centers.size());
        std::vector<std::size_t> counts(centers.size(), 0);
        for (auto& c : next) {
            c.row = c.col = 0.0;
            c.color.assign(ch.size(), 0.0);
        }
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                int k = lm.labels[static_cast<std::size_t>(i) * cols + j];
                next[k].row += i;
                next[k].col += j;
                for (std::size_t q = 0; q < ch.size(); ++q)
                    next[k].color[q] += scale * ch[q](i, j);
                ++counts[k];
            }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (counts[k] == 0) {
                next[k] = centers[k]; // keep empty clusters where they were
                continue;
            }
            next[k].row /= counts[k];
            next[k].col /= counts[k];
            for (auto& v : next[k].color) v /= counts[k];
        }
        centers = std::move(next);
    }

    detail::enforce_connectivity(lm, 16);
    return lm;
}

/// R_i = smallest rank whose leading singular values carry >= energy of the
/// squared spectral mass of unfold(patch, i), clamped to [1, min(dim_i, r_max)].
template <class T>
std::array<int, 3> estimate_patch_ranks(const DenseTensor3<T>& guide_patch, double energy = 0.99,
                                        int r_max = 16) {
    if (energy <= 0.0 || energy > 1.0)
        throw ArgumentError("estimate_patch_ranks: energy must be in (0,1]");
    if (r_max < 1) throw ArgumentError("estimate_patch_ranks: r_max must be >= 1");
    std::array<int, 3> ranks{1, 1, 1};
    for (int mode = 1; mode <= 3; ++mode) {
        auto s = svd(unfold(guide_patch, mode)).s;
        double total = 0.0;
        for (int i = 0; i < s.size(); ++i) total += s(i) * s(i);
        int r = 1;
        if (total > 0.0) {
            double acc = 0.0;
            for (int i = 0; i < s.size(); ++i) {
                acc += s(i) * s(i);
                if (acc >= energy * total) {
                    r = i + 1;
                    break;
                }
            }
        }
        ranks[mode - 1] = std::clamp(r, 1, std::min(guide_patch.dim(mode), r_max));
    }
    return ranks;
}

/// Build per-superpixel patches: tight bboxes, bbox-local membership, bbox
/// crops of data/mask/guide across full axis 3, and ranks from the guide crop
/// (or the fixed override in rank_cfg).
template <class T>
std::vector<PatchSpec<T>> extract_patches(const LabelMap& labels, const DenseTensor3<T>& data,
                                          const ObservationMask& mask,
                                          const DenseTensor3<T>& guide,
                                          const RankConfig& rank_cfg = {}) {
    if (labels.rows != data.i1 || labels.cols != data.i2)
        throw ArgumentError("extract_patches: label map does not match data shape");
    if (!mask.congruent(data)) throw ArgumentError("extract_patches: mask shape mismatch");
    if (guide.i1 != data.i1 || guide.i2 != data.i2)
        throw ArgumentError("extract_patches: guide spatial shape mismatch");

    const int nl = labels.num_labels;
    std::vector<std::array<int, 4>> boxes(nl, {labels.rows, -1, labels.cols, -1});
    for (int i = 0; i < labels.rows; ++i)
        for (int j = 0; j < labels.cols; ++j) {
            auto& b = boxes[labels(i, j)];
            b[0] = std::min(b[0], i);
            b[1] = std::max(b[1], i);
            b[2] = std::min(b[2], j);
            b[3] = std::max(b[3], j);
        }

    std::vector<PatchSpec<T>> patches;
    patches.reserve(nl);
    for (int l = 0; l < nl; ++l) {
        const auto& b = boxes[l];
        if (b[1] < 0) continue; // label absent (cannot happen after relabeling)
        PatchSpec<T> p;
        p.label = l;
        p.row0 = b[0];
        p.row1 = b[1] + 1;
        p.col0 = b[2];
        p.col1 = b[3] + 1;
        p.h = p.row1 - p.row0;
        p.w = p.col1 - p.col0;
        p.c = data.i3;
        p.membership.assign(static_cast<std::size_t>(p.h) * p.w, 0);
        p.data = DenseTensor3<T>(p.h, p.w, data.i3);
        p.mask = ObservationMask(p.h, p.w, data.i3);
        p.guide = DenseTensor3<T>(p.h, p.w, guide.i3);
        for (int i = 0; i < p.h; ++i)
            for (int j = 0; j < p.w; ++j) {
                int gi = p.row0 + i, gj = p.col0 + j;
                if (labels(gi, gj) == l)
                    p.membership[static_cast<std::size_t>(i) * p.w + j] = 1;
                for (int k = 0; k < data.i3; ++k) {
                    p.data(i, j, k) = data(gi, gj, k);
                    p.mask.at(i, j, k) = mask(gi, gj, k) ? 1 : 0;
                }
                for (int k = 0; k < guide.i3; ++k) p.guide(i, j, k) = guide(gi, gj, k);
            }
        if (rank_cfg.fixed) {
            p.ranks = {std::clamp(rank_cfg.fixed_ranks[0], 1, p.h),
                       std::clamp(rank_cfg.fixed_ranks[1], 1, p.w),
                       std::clamp(rank_cfg.fixed_ranks[2], 1, p.c)};
        } else {
            p.ranks = estimate_patch_ranks(p.guide, rank_cfg.energy, rank_cfg.r_max);
            p.ranks[2] = std::min(p.ranks[2], p.c);
        }
        patches.push_back(std::move(p));
    }
    return patches;
}

} // namespace sctr
