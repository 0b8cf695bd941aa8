#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sctr/autodiff.hpp"
#include "sctr/superpixel.hpp"
#include "sctr/tensor.hpp"

namespace sctr {

struct BackboneConfig {
    int width = 256;
    int residual_blocks = 4;
    double omega0 = 3.0;
    int attention_heads = 1;
    bool attention = true; // disable for the coordinate-locality checks
};

/// Shape/rank summary of one registered patch.
struct PatchShape {
    int h = 0, w = 0, c = 0;
    std::array<int, 3> ranks{1, 1, 1};
};

/// Parameter layout of the ALTF network: one shared backbone, per-patch U/V/W
/// heads (D x R_i linear maps with bias) and per-patch core tensors (stored as
/// their mode-1 unfolding).
template <class S>
struct AltfModel {
    BackboneConfig cfg;
    std::array<int, 3> downsample{1, 1, 1};
    ParamStore<S> store;

    int w_first = -1, b_first = -1;
    std::vector<std::array<int, 2>> blocks; // {W, b} per residual block
    int wq = -1, wk = -1, wv = -1;

    struct PatchParams {
        PatchShape shape;
        std::array<int, 3> head_w{-1, -1, -1};
        std::array<int, 3> head_b{-1, -1, -1};
        int core = -1;
    };
    std::vector<PatchParams> patches;

    std::size_t backbone_scalar_count() const {
        std::size_t n = static_cast<std::size_t>(store[w_first].value.size()) +
                        store[b_first].value.size();
        for (const auto& blk : blocks)
            n += static_cast<std::size_t>(store[blk[0]].value.size()) +
                 store[blk[1]].value.size();
        if (cfg.attention)
            n += static_cast<std::size_t>(store[wq].value.size()) +
                 store[wk].value.size() + store[wv].value.size();
        return n;
    }
    std::size_t patch_scalar_count(int k) const {
        const auto& p = patches.at(k);
        std::size_t n = 0;
        for (int a = 0; a < 3; ++a)
            n += static_cast<std::size_t>(store[p.head_w[a]].value.size()) +
                 store[p.head_b[a]].value.size();
        n += static_cast<std::size_t>(store[p.core].value.size());
        return n;
    }
};

namespace detail {

template <class S>
Matrix<S> uniform_init(std::mt19937& gen, int rows, int cols, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix<S> m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = static_cast<S>(dist(gen));
    return m;
}

template <class S>
Matrix<S> gaussian_init(std::mt19937& gen, int rows, int cols, double sigma) {
    std::normal_distribution<double> dist(0.0, sigma);
    Matrix<S> m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = static_cast<S>(dist(gen));
    return m;
}

} // namespace detail

/// Per-axis coordinate array: strictly increasing, endpoints +-1 (single-point
/// axes sit at 0).
template <class S>
Matrix<S> coordinate_array(int n) {
    if (n < 1) throw ArgumentError("coordinate_array: axis length must be >= 1");
    Matrix<S> c(n, 1);
    if (n == 1) {
        c(0, 0) = S(0);
        return c;
    }
    for (int i = 0; i < n; ++i)
        c(i, 0) = static_cast<S>(-1.0 + 2.0 * i / (n - 1));
    return c;
}

/// Piecewise-linear interpolation matrix mapping n_coarse rows sampled at
/// coordinate_array(n_coarse) onto n_full rows at coordinate_array(n_full).
template <class S>
Matrix<S> interp_rows_matrix(int n_full, int n_coarse) {
    Matrix<S> L = Matrix<S>::Zero(n_full, n_coarse);
    if (n_coarse == 1) {
        L.col(0).setOnes();
        return L;
    }
    for (int i = 0; i < n_full; ++i) {
        double t = n_full == 1 ? 0.0 : -1.0 + 2.0 * i / (n_full - 1);
        double pos = (t + 1.0) / 2.0 * (n_coarse - 1);
        int j = static_cast<int>(std::floor(pos));
        if (j >= n_coarse - 1) {
            L(i, n_coarse - 1) = S(1);
        } else {
            double w = pos - j;
            L(i, j) = static_cast<S>(1.0 - w);
            L(i, j + 1) = static_cast<S>(w);
        }
    }
    return L;
}

/// SIREN-style initialization; parameter registration order is fixed so a seed
/// fully determines the model.
template <class S>
AltfModel<S> make_altf_model(const std::vector<PatchShape>& patch_shapes,
                             const BackboneConfig& cfg, std::array<int, 3> downsample,
                             uint32_t seed) {
    if (cfg.width < 1) throw ArgumentError("make_altf_model: width must be >= 1");
    if (cfg.residual_blocks < 0)
        throw ArgumentError("make_altf_model: residual_blocks must be >= 0");
    if (cfg.attention_heads != 1)
        throw ArgumentError("make_altf_model: only single-head attention is supported");
    for (int d : downsample)
        if (d < 1) throw ArgumentError("make_altf_model: downsample factors must be >= 1");

    AltfModel<S> model;
    model.cfg = cfg;
    model.downsample = downsample;
    std::mt19937 gen(seed);
    const int d = cfg.width;
    const double later = std::sqrt(6.0 / d) / cfg.omega0;

    model.w_first = model.store.add("backbone.first.w",
                                    detail::uniform_init<S>(gen, 1, d, 1.0));
    model.b_first = model.store.add("backbone.first.b", Matrix<S>::Zero(1, d));
    for (int i = 0; i < cfg.residual_blocks; ++i) {
        int w = model.store.add("backbone.block" + std::to_string(i) + ".w",
                                detail::uniform_init<S>(gen, d, d, later));
        int b = model.store.add("backbone.block" + std::to_string(i) + ".b",
                                Matrix<S>::Zero(1, d));
        model.blocks.push_back({w, b});
    }
    if (cfg.attention) {
        model.wq = model.store.add("backbone.attn.wq", detail::uniform_init<S>(gen, d, d, later));
        model.wk = model.store.add("backbone.attn.wk", detail::uniform_init<S>(gen, d, d, later));
        model.wv = model.store.add("backbone.attn.wv", detail::uniform_init<S>(gen, d, d, later));
    }
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t k = 0; k < patch_shapes.size(); ++k) {
        const auto& ps = patch_shapes[k];
        if (ps.h < 1 || ps.w < 1 || ps.c < 1)
            throw ArgumentError("make_altf_model: patch dims must be positive");
        for (int a = 0; a < 3; ++a) {
            int dim = a == 0 ? ps.h : (a == 1 ? ps.w : ps.c);
            if (ps.ranks[a] < 1 || ps.ranks[a] > dim)
                throw ArgumentError("make_altf_model: rank out of range for patch axis");
        }
        typename AltfModel<S>::PatchParams pp;
        pp.shape = ps;
        const char* axis_names[3] = {"u", "v", "w"};
        std::string base = "patch" + std::to_string(k);
        for (int a = 0; a < 3; ++a) {
            pp.head_w[a] = model.store.add(base + ".head_" + axis_names[a] + ".w",
                                           detail::uniform_init<S>(gen, d, ps.ranks[a],
                                                                   head_bound));
            pp.head_b[a] = model.store.add(base + ".head_" + axis_names[a] + ".b",
                                           Matrix<S>::Zero(1, ps.ranks[a]));
        }
        pp.core = model.store.add(
            base + ".core",
            detail::gaussian_init<S>(gen, ps.ranks[0], ps.ranks[1] * ps.ranks[2], 0.1));
        model.patches.push_back(std::move(pp));
    }
    return model;
}

template <class S>
AltfModel<S> make_altf_model(const std::vector<PatchShape>& patch_shapes,
                             const BackboneConfig& cfg = {}, uint32_t seed = 0) {
    return make_altf_model<S>(patch_shapes, cfg, {1, 1, 1}, seed);
}

template <class T>
std::vector<PatchShape> patch_shapes_of(const std::vector<PatchSpec<T>>& patches) {
    std::vector<PatchShape> out;
    out.reserve(patches.size());
    for (const auto& p : patches) out.push_back({p.h, p.w, p.c, p.ranks});
    return out;
}

namespace detail {

/// Appends the backbone pipeline to the graph: SineLayer, residual sine
/// blocks, ReLU, single-head self-attention with residual.
template <class S>
Node<S>* backbone_subgraph(Graph<S>& g, const AltfModel<S>& model, Node<S>* coords) {
    const S omega = static_cast<S>(model.cfg.omega0);
    Node<S>* x = g.template add<MatMulNode<S>>(coords, g.template add<ParamNode<S>>(&g, model.w_first));
    x = g.template add<AddRowVecNode<S>>(x, g.template add<ParamNode<S>>(&g, model.b_first));
    Node<S>* h = g.template add<SinNode<S>>(x, omega);
    for (const auto& blk : model.blocks) {
        Node<S>* t = g.template add<MatMulNode<S>>(h, g.template add<ParamNode<S>>(&g, blk[0]));
        t = g.template add<AddRowVecNode<S>>(t, g.template add<ParamNode<S>>(&g, blk[1]));
        t = g.template add<SinNode<S>>(t, omega);
        h = g.template add<AddNode<S>>(h, t);
    }
    Node<S>* r = g.template add<ReluNode<S>>(h);
    if (!model.cfg.attention) return r;
    Node<S>* q = g.template add<MatMulNode<S>>(r, g.template add<ParamNode<S>>(&g, model.wq));
    Node<S>* k = g.template add<MatMulNode<S>>(r, g.template add<ParamNode<S>>(&g, model.wk));
    Node<S>* v = g.template add<MatMulNode<S>>(r, g.template add<ParamNode<S>>(&g, model.wv));
    Node<S>* scores = g.template add<MatMulNode<S>>(q, k, false, true);
    scores = g.template add<ScaleNode<S>>(
        scores, static_cast<S>(1.0 / std::sqrt(static_cast<double>(model.cfg.width))));
    Node<S>* attn = g.template add<RowSoftmaxNode<S>>(scores);
    Node<S>* av = g.template add<MatMulNode<S>>(attn, v);
    return g.template add<AddNode<S>>(r, av);
}

/// Factor matrix for one axis: backbone at the downsampled coordinates, axis
/// head, then linear row interpolation back to full length.
template <class S>
Node<S>* factor_subgraph(Graph<S>& g, const AltfModel<S>& model, int patch_index, int axis) {
    const auto& pp = model.patches[patch_index];
    int full = axis == 0 ? pp.shape.h : (axis == 1 ? pp.shape.w : pp.shape.c);
    int coarse = (full + model.downsample[axis] - 1) / model.downsample[axis];
    Node<S>* coords = g.template add<ConstNode<S>>(coordinate_array<S>(coarse));
    Node<S>* feats = backbone_subgraph(g, model, coords);
    Node<S>* f = g.template add<MatMulNode<S>>(
        feats, g.template add<ParamNode<S>>(&g, pp.head_w[axis]));
    f = g.template add<AddRowVecNode<S>>(f, g.template add<ParamNode<S>>(&g, pp.head_b[axis]));
    if (coarse == full) return f;
    Node<S>* interp =
        g.template add<ConstNode<S>>(interp_rows_matrix<S>(full, coarse));
    return g.template add<MatMulNode<S>>(interp, f);
}

} // namespace detail

/// One patch's forward graph: generated factors, Tucker composition tracked on
/// unfoldings, and the masked SSE against the patch's observed entries.
template <class S>
struct PatchGraph {
    std::unique_ptr<Graph<S>> graph;
    Node<S>* factor_u = nullptr;
    Node<S>* factor_v = nullptr;
    Node<S>* factor_w = nullptr;
    Node<S>* pred_unfold3 = nullptr; // (C x H*W) mode-3 unfolding of the patch
    MaskedSseNode<S>* sse = nullptr; // null when built without a target
    std::size_t observed_count = 0;
    std::array<int, 3> shape{0, 0, 0};
};

/// Builds the forward (and optionally loss) graph for one registered patch.
/// free_factors replaces backbone+heads with directly learnable factor
/// parameters (the no-altf ablation); the ids must then be registered in
/// the model's store and passed in.
template <class S>
PatchGraph<S> build_patch_graph(AltfModel<S>& model, int patch_index,
                                const Matrix<S>* target_unfold3 = nullptr,
                                const Matrix<S>* mask_unfold3 = nullptr,
                                const std::array<int, 3>* free_factor_ids = nullptr) {
    if (patch_index < 0 || patch_index >= static_cast<int>(model.patches.size()))
        throw ArgumentError("build_patch_graph: unregistered patch");
    const auto& pp = model.patches[patch_index];
    PatchGraph<S> pg;
    pg.graph = std::make_unique<Graph<S>>(&model.store);
    Graph<S>& g = *pg.graph;
    pg.shape = {pp.shape.h, pp.shape.w, pp.shape.c};

    if (free_factor_ids) {
        pg.factor_u = g.template add<ParamNode<S>>(&g, (*free_factor_ids)[0]);
        pg.factor_v = g.template add<ParamNode<S>>(&g, (*free_factor_ids)[1]);
        pg.factor_w = g.template add<ParamNode<S>>(&g, (*free_factor_ids)[2]);
    } else {
        pg.factor_u = detail::factor_subgraph(g, model, patch_index, 0);
        pg.factor_v = detail::factor_subgraph(g, model, patch_index, 1);
        pg.factor_w = detail::factor_subgraph(g, model, patch_index, 2);
    }

    Node<S>* core = g.template add<ParamNode<S>>(&g, pp.core);
    const int r2 = pp.shape.ranks[1], r3 = pp.shape.ranks[2];
    // sequential mode products 1,2,3 tracked as unfoldings
    Node<S>* y1 = g.template add<MatMulNode<S>>(pg.factor_u, core); // (H x R2 R3)
    Node<S>* a2 = g.template add<RefoldNode<S>>(y1, 1, 2,
                                                std::array<int, 3>{pp.shape.h, r2, r3});
    Node<S>* y2 = g.template add<MatMulNode<S>>(pg.factor_v, a2); // (W x H R3)
    Node<S>* b3 = g.template add<RefoldNode<S>>(
        y2, 2, 3, std::array<int, 3>{pp.shape.h, pp.shape.w, r3});
    pg.pred_unfold3 = g.template add<MatMulNode<S>>(pg.factor_w, b3); // (C x H W)

    if (target_unfold3) {
        if (!mask_unfold3)
            throw ArgumentError("build_patch_graph: target requires a mask");
        double count = mask_unfold3->template cast<double>().sum();
        pg.observed_count = static_cast<std::size_t>(count + 0.5);
        pg.sse = g.template add<MaskedSseNode<S>>(pg.pred_unfold3, *target_unfold3,
                                                  *mask_unfold3, 1.0);
    }
    return pg;
}

/// Feature matrix (N x D) for a coordinate column through the shared backbone.
template <class S>
Matrix<S> backbone_forward(AltfModel<S>& model, const Matrix<S>& coords) {
    if (coords.cols() != 1 || coords.rows() < 1)
        throw ArgumentError("backbone_forward: coords must be a nonempty column");
    Graph<S> g(&model.store);
    Node<S>* in = g.template add<ConstNode<S>>(coords);
    Node<S>* out = detail::backbone_subgraph(g, model, in);
    g.forward();
    return out->value;
}

/// Generated factor matrices (U, V, W) for one registered patch, at full axis
/// lengths (post-interpolation).
template <class S>
std::array<Matrix<S>, 3> generate_factors(AltfModel<S>& model, int patch_index) {
    PatchGraph<S> pg = build_patch_graph(model, patch_index);
    pg.graph->forward();
    return {pg.factor_u->value, pg.factor_v->value, pg.factor_w->value};
}

/// Tucker-composed reconstruction of one registered patch.
template <class S>
DenseTensor3<S> reconstruct_patch(AltfModel<S>& model, int patch_index) {
    PatchGraph<S> pg = build_patch_graph(model, patch_index);
    pg.graph->forward();
    return fold(pg.pred_unfold3->value, 3, pg.shape);
}

/// Per-iteration operation count of the complexity analysis:
/// sum_k [D^2 (H+W+C) + D (H R1 + W R2 + C R3) + H R1 R2 R3 + H W R2 R3 + H W C R3].
inline long long estimate_iteration_cost(const std::vector<PatchShape>& patches, int d) {
    long long total = 0;
    const long long dd = static_cast<long long>(d) * d;
    for (const auto& p : patches) {
        const long long h = p.h, w = p.w, c = p.c;
        const long long r1 = p.ranks[0], r2 = p.ranks[1], r3 = p.ranks[2];
        total += dd * (h + w + c);
        total += static_cast<long long>(d) * (h * r1 + w * r2 + c * r3);
        total += h * r1 * r2 * r3;
        total += h * w * r2 * r3;
        total += h * w * c * r3;
    }
    return total;
}

template <class T>
long long estimate_iteration_cost(const std::vector<PatchSpec<T>>& patches, int d) {
    return estimate_iteration_cost(patch_shapes_of(patches), d);
}

} // namespace sctr
