#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "sctr/tensor.hpp"

namespace sctr {

/// Learnable dense parameter with gradient and Adam moment buffers.
template <class S>
struct Param {
    std::string name;
    Matrix<S> value;
    Matrix<S> grad;
    Matrix<S> m, v; // Adam first/second moments
};

template <class S>
struct ParamStore {
    std::vector<Param<S>> params;

    int add(std::string name, Matrix<S> init) {
        Param<S> p;
        p.name = std::move(name);
        p.grad = Matrix<S>::Zero(init.rows(), init.cols());
        p.m = Matrix<S>::Zero(init.rows(), init.cols());
        p.v = Matrix<S>::Zero(init.rows(), init.cols());
        p.value = std::move(init);
        params.push_back(std::move(p));
        return static_cast<int>(params.size()) - 1;
    }
    Param<S>& operator[](int id) { return params[id]; }
    const Param<S>& operator[](int id) const { return params[id]; }
    void zero_grads() {
        for (auto& p : params) p.grad.setZero();
    }
    std::size_t count_scalars() const {
        std::size_t n = 0;
        for (const auto& p : params) n += static_cast<std::size_t>(p.value.size());
        return n;
    }
};

/// Reverse-mode graph node. Forward recomputes value from inputs; backward
/// pushes this->grad into the inputs' grads (accumulating).
template <class S>
struct Node {
    Matrix<S> value;
    Matrix<S> grad;
    const char* tag = "node";

    virtual ~Node() = default;
    virtual void forward() = 0;
    virtual void backward() = 0;

    void ensure_grad() {
        if (grad.rows() != value.rows() || grad.cols() != value.cols())
            grad = Matrix<S>::Zero(value.rows(), value.cols());
    }
};

/// Static computation graph. Nodes execute in insertion order on forward and
/// reverse order on backward. Parameter gradients land in a graph-local buffer
/// so several graphs sharing a ParamStore can be reduced deterministically
/// (flush_grads in a fixed graph order).
template <class S>
class Graph {
public:
    explicit Graph(ParamStore<S>* store) : store_(store) {}

    ParamStore<S>* store() const { return store_; }

    template <class N, class... Args>
    N* add(Args&&... args) {
        auto node = std::make_unique<N>(std::forward<Args>(args)...);
        N* raw = node.get();
        nodes_.push_back(std::move(node));
        return raw;
    }

    void forward() {
        for (auto& n : nodes_) n->forward();
    }

    /// Accumulates d(seed * out)/d(param) into the graph-local buffers.
    /// Intermediate node grads are reset here; parameter buffers are not
    /// (call zero_local_grads between optimization steps).
    void backward(Node<S>* out, S seed = S(1), bool check_finite = true) {
        if (out->value.rows() != 1 || out->value.cols() != 1)
            throw ArgumentError("backward: loss node must be scalar");
        for (auto& n : nodes_) {
            n->ensure_grad();
            n->grad.setZero();
        }
        out->grad(0, 0) = seed;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (check_finite && !(*it)->grad.allFinite())
                throw NumericError(std::string("backward: non-finite gradient at ") +
                                   (*it)->tag);
            (*it)->backward();
        }
    }

    // graph-local parameter gradient buffers
    Matrix<S>& local_grad(int param_id) {
        if (param_id >= static_cast<int>(local_.size())) local_.resize(param_id + 1);
        auto& g = local_[param_id];
        const auto& v = (*store_)[param_id].value;
        if (g.rows() != v.rows() || g.cols() != v.cols())
            g = Matrix<S>::Zero(v.rows(), v.cols());
        return g;
    }
    void zero_local_grads() {
        for (auto& g : local_)
            if (g.size() > 0) g.setZero();
    }
    /// Adds the local buffers into the store's grads. Call once per graph, in
    /// a fixed order across graphs, for bit-deterministic reductions.
    void flush_grads() {
        for (std::size_t id = 0; id < local_.size(); ++id)
            if (local_[id].size() > 0) (*store_)[static_cast<int>(id)].grad += local_[id];
    }
    /// Param ids this graph touches (ascending).
    std::vector<int> touched_params() const {
        std::vector<int> ids;
        for (std::size_t id = 0; id < local_.size(); ++id)
            if (local_[id].size() > 0) ids.push_back(static_cast<int>(id));
        return ids;
    }

private:
    ParamStore<S>* store_;
    std::vector<std::unique_ptr<Node<S>>> nodes_;
    std::vector<Matrix<S>> local_;
};

// ---- nodes ----

template <class S>
struct ConstNode : Node<S> {
    explicit ConstNode(Matrix<S> v) {
        this->value = std::move(v);
        this->tag = "const";
    }
    void forward() override {}
    void backward() override {}
};

template <class S>
struct ParamNode : Node<S> {
    Graph<S>* g;
    int id;
    ParamNode(Graph<S>* graph, int param_id) : g(graph), id(param_id) {
        this->tag = "param";
        this->value = (*g->store())[id].value;
    }
    void forward() override { this->value = (*g->store())[id].value; }
    void backward() override { g->local_grad(id) += this->grad; }
};

/// C = op(A) * op(B), with optional transposes.
template <class S>
struct MatMulNode : Node<S> {
    Node<S>*a, *b;
    bool ta, tb;
    MatMulNode(Node<S>* a_, Node<S>* b_, bool trans_a = false, bool trans_b = false)
        : a(a_), b(b_), ta(trans_a), tb(trans_b) {
        this->tag = "matmul";
        if (ta && tb) throw ArgumentError("matmul: double-transpose form not supported");
    }
    void forward() override {
        if (!ta && !tb)
            this->value.noalias() = a->value * b->value;
        else if (ta && !tb)
            this->value.noalias() = a->value.transpose() * b->value;
        else
            this->value.noalias() = a->value * b->value.transpose();
    }
    void backward() override {
        const Matrix<S>& g = this->grad;
        if (!ta && !tb) {
            a->grad.noalias() += g * b->value.transpose();
            b->grad.noalias() += a->value.transpose() * g;
        } else if (ta && !tb) {
            a->grad.noalias() += b->value * g.transpose();
            b->grad.noalias() += a->value * g;
        } else {
            a->grad.noalias() += g * b->value;
            b->grad.noalias() += g.transpose() * a->value;
        }
    }
};

template <class S>
struct AddNode : Node<S> {
    Node<S>*a, *b;
    AddNode(Node<S>* a_, Node<S>* b_) : a(a_), b(b_) { this->tag = "add"; }
    void forward() override { this->value = a->value + b->value; }
    void backward() override {
        a->grad += this->grad;
        b->grad += this->grad;
    }
};

/// C = A + broadcast of a 1xD row vector over A's rows.
template <class S>
struct AddRowVecNode : Node<S> {
    Node<S>*a, *b;
    AddRowVecNode(Node<S>* a_, Node<S>* row) : a(a_), b(row) { this->tag = "add_rowvec"; }
    void forward() override {
        this->value = a->value.rowwise() + b->value.row(0);
    }
    void backward() override {
        a->grad += this->grad;
        b->grad.row(0) += this->grad.colwise().sum();
    }
};

template <class S>
struct MulNode : Node<S> {
    Node<S>*a, *b;
    MulNode(Node<S>* a_, Node<S>* b_) : a(a_), b(b_) { this->tag = "mul"; }
    void forward() override { this->value = a->value.cwiseProduct(b->value); }
    void backward() override {
        a->grad += this->grad.cwiseProduct(b->value);
        b->grad += this->grad.cwiseProduct(a->value);
    }
};

/// C = sin(omega * A).
template <class S>
struct SinNode : Node<S> {
    Node<S>* a;
    S omega;
    SinNode(Node<S>* a_, S omega_ = S(1)) : a(a_), omega(omega_) { this->tag = "sin"; }
    void forward() override { this->value = (omega * a->value.array()).sin().matrix(); }
    void backward() override {
        a->grad.array() +=
            this->grad.array() * omega * (omega * a->value.array()).cos();
    }
};

template <class S>
struct ReluNode : Node<S> {
    Node<S>* a;
    explicit ReluNode(Node<S>* a_) : a(a_) { this->tag = "relu"; }
    void forward() override { this->value = a->value.cwiseMax(S(0)); }
    void backward() override {
        a->grad.array() +=
            this->grad.array() * (a->value.array() > S(0)).template cast<S>();
    }
};

template <class S>
struct ScaleNode : Node<S> {
    Node<S>* a;
    S c;
    ScaleNode(Node<S>* a_, S c_) : a(a_), c(c_) { this->tag = "scale"; }
    void forward() override { this->value = c * a->value; }
    void backward() override { a->grad += c * this->grad; }
};

/// Row-wise softmax with max-subtraction stabilization.
template <class S>
struct RowSoftmaxNode : Node<S> {
    Node<S>* a;
    explicit RowSoftmaxNode(Node<S>* a_) : a(a_) { this->tag = "softmax"; }
    void forward() override {
        this->value = a->value;
        for (Eigen::Index r = 0; r < this->value.rows(); ++r) {
            S mx = this->value.row(r).maxCoeff();
            this->value.row(r) = (this->value.row(r).array() - mx).exp();
            this->value.row(r) /= this->value.row(r).sum();
        }
    }
    void backward() override {
        for (Eigen::Index r = 0; r < this->value.rows(); ++r) {
            S dot = this->grad.row(r).cwiseProduct(this->value.row(r)).sum();
            a->grad.row(r).array() +=
                this->value.row(r).array() * (this->grad.row(r).array() - dot);
        }
    }
};

/// Re-expresses a mode-`from` unfolding as a mode-`to` unfolding of the same
/// underlying tensor (a fixed permutation, hence an exact linear op).
template <class S>
struct RefoldNode : Node<S> {
    Node<S>* a;
    int from, to;
    std::array<int, 3> shape;
    RefoldNode(Node<S>* a_, int from_mode, int to_mode, std::array<int, 3> tensor_shape)
        : a(a_), from(from_mode), to(to_mode), shape(tensor_shape) {
        this->tag = "refold";
    }
    void forward() override { this->value = unfold(fold(a->value, from, shape), to); }
    void backward() override { a->grad += unfold(fold(this->grad, to, shape), from); }
};

/// Scalar node: value = sum over mask of (pred - target)^2, divided by `divisor`
/// (1 for a plain SSE, count for a mean). Target and mask are fixed data.
template <class S>
struct MaskedSseNode : Node<S> {
    Node<S>* pred;
    Matrix<S> target, mask01;
    double divisor;
    MaskedSseNode(Node<S>* pred_, Matrix<S> target_, Matrix<S> mask_, double divisor_ = 1.0)
        : pred(pred_), target(std::move(target_)), mask01(std::move(mask_)),
          divisor(divisor_) {
        this->tag = "masked_sse";
        if (divisor <= 0) throw ArgumentError("masked_sse: divisor must be positive");
    }
    void forward() override {
        Matrix<S> diff = (pred->value - target).cwiseProduct(mask01);
        this->value.resize(1, 1);
        this->value(0, 0) = static_cast<S>(diff.squaredNorm() / divisor);
    }
    void backward() override {
        pred->grad.noalias() += (this->grad(0, 0) * S(2.0 / divisor)) *
                                (pred->value - target).cwiseProduct(mask01);
    }
};

template <class S>
struct SumNode : Node<S> {
    Node<S>* a;
    explicit SumNode(Node<S>* a_) : a(a_) { this->tag = "sum"; }
    void forward() override {
        this->value.resize(1, 1);
        this->value(0, 0) = a->value.sum();
    }
    void backward() override { a->grad.array() += this->grad(0, 0); }
};

// ---- optimizer ----

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    long step = 0;
};

/// Standard bias-corrected Adam with decoupled weight decay applied before the
/// update: value <- value * (1 - lr * weight_decay).
template <class S>
void adam_step(ParamStore<S>& store, AdamState& state, const AdamConfig& cfg) {
    if (cfg.lr <= 0) throw ArgumentError("adam_step: lr must be positive");
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (auto& p : store.params) {
        if (cfg.weight_decay != 0.0)
            p.value *= static_cast<S>(1.0 - cfg.lr * cfg.weight_decay);
        p.m = static_cast<S>(cfg.beta1) * p.m + static_cast<S>(1.0 - cfg.beta1) * p.grad;
        p.v = static_cast<S>(cfg.beta2) * p.v +
              static_cast<S>(1.0 - cfg.beta2) * p.grad.cwiseProduct(p.grad);
        Matrix<S> mhat = p.m / static_cast<S>(bc1);
        Matrix<S> vhat = p.v / static_cast<S>(bc2);
        p.value.array() -=
            static_cast<S>(cfg.lr) * mhat.array() /
            (vhat.array().sqrt() + static_cast<S>(cfg.eps));
        if (!p.value.allFinite())
            throw NumericError("adam_step: non-finite value in parameter " + p.name);
    }
}

// ---- schedule ----

struct ScheduleState {
    long step = 0;
    double lr_base = 1e-3;
    double lr_min = 0.0;
    long total_steps = 1;
};

/// lr_min + 0.5 (lr_base - lr_min) (1 + cos(pi step / total)); clamps past total.
inline double cosine_lr(const ScheduleState& s) {
    if (s.total_steps < 1) throw ArgumentError("cosine_lr: total_steps must be >= 1");
    if (s.step >= s.total_steps) return s.lr_min;
    long step = s.step < 0 ? 0 : s.step;
    return s.lr_min + 0.5 * (s.lr_base - s.lr_min) *
                          (1.0 + std::cos(M_PI * static_cast<double>(step) /
                                          static_cast<double>(s.total_steps)));
}

} // namespace sctr
