#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rentcast::ag {

/// Row-major dense matrix of doubles. Every tensor in the model is rank 2;
/// higher-rank data (windows x regions) is flattened onto the row axis.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0);

    double& operator()(int r, int c) { return data[std::size_t(r) * cols + c]; }
    double operator()(int r, int c) const { return data[std::size_t(r) * cols + c]; }
    std::span<double> row(int r) { return {data.data() + std::size_t(r) * cols, std::size_t(cols)}; }
    std::span<const double> row(int r) const { return {data.data() + std::size_t(r) * cols, std::size_t(cols)}; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// Trainable tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, int rows, int cols) : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
    void zero_grad();
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Append-only computation tape. Build the forward pass with the free
/// functions below, then call backward() on a 1x1 result.
class Graph {
public:
    explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    /// Constant input copied into the tape.
    Var input(Matrix m);
    /// Constant input by reference; `m` must outlive the graph.
    Var input_ref(const Matrix& m);
    Var param(Parameter& p);

    const Matrix& value(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    /// Gradient of the last backward() w.r.t. an intermediate node; empty if none flowed.
    const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

    void backward(Var scalar);

    using BackwardFn = std::function<void(Graph&, int self)>;
    /// Registers an op output. `backward` is dropped when no input needs a gradient.
    Var emit(Matrix value, bool requires_grad, BackwardFn backward);
    Matrix& grad_slot(int id);
    const Matrix& grad_in(int id) const { return nodes_[id].grad; }
    bool grad_enabled() const { return grad_enabled_; }

    /// ReLU activation-pattern recording (used by finite-difference checks to
    /// detect perturbations that cross a kink).
    void record_relu_pattern(bool on) { record_relu_ = on; }
    bool recording_relu() const { return record_relu_; }
    std::vector<std::uint8_t>& relu_pattern() { return relu_pattern_; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        const Matrix* ref = nullptr;
        Parameter* param = nullptr;
        Matrix grad;
        bool requires_grad = false;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
    bool grad_enabled_;
    bool record_relu_ = false;
    std::vector<std::uint8_t> relu_pattern_;
};

/// y = x W^T + b. x [M,K], w [N,K], b [1,N] or invalid.
Var linear(Graph& g, Var x, Var w, Var b);
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, double s);
Var relu(Graph& g, Var a);
Var tanh(Graph& g, Var a);
Var sigmoid(Graph& g, Var a);
Var concat_cols(Graph& g, std::span<const Var> parts);
Var slice_cols(Graph& g, Var a, int begin, int count);
Var gather_rows(Graph& g, Var a, std::vector<int> rows);
/// x [B*seq, H] with row b*seq+t; adds pos[t] [seq, H] to every row at position t.
Var add_positional(Graph& g, Var x, Var pos, int seq);
/// Per-row normalisation with learned gain/bias [1, H] (population variance).
Var layer_norm(Graph& g, Var x, Var gain, Var bias, double eps = 1e-5);
/// Multi-head scaled dot-product attention over each sequence of `seq` rows.
/// q, k, v [B*seq, H]; no mask.
Var self_attention(Graph& g, Var q, Var k, Var v, int batch, int seq, int heads);
Var sum(Graph& g, Var a);
/// Sum_i weights[i] * scalars[i]; every scalar is 1x1.
Var weighted_sum(Graph& g, std::span<const Var> scalars, std::span<const double> weights);
/// Mean squared error over all rows and the listed columns; returns 1x1.
Var column_group_mse(Graph& g, Var pred, Var target, std::span<const int> cols);

}  // namespace rentcast::ag
