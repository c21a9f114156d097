#pragma once

// Tape-based reverse-mode automatic differentiation over Eigen matrices.
//
// Define-by-run: every operation evaluates eagerly and records a backward
// closure on the tape. Gradients are double precision throughout and every
// primitive is covered by a finite-difference test, so composites built from
// these ops inherit verified gradients. Single-threaded by design; reduction
// order is fixed, which keeps training bit-reproducible under a seed.

#include <Eigen/Core>

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace herbrec::ad {

using Mat = Eigen::MatrixXd;

class Tape;

// Persistent trainable matrix. Lives outside any tape; tapes accumulate into
// `grad` on backward().
struct Parameter {
    std::string name;
    Mat value;
    Mat grad;

    Parameter() = default;
    Parameter(std::string n, Mat v)
        : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
    Eigen::Index size() const { return value.size(); }
};

// Lightweight handle to a tape node.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Mat& val() const;
    Eigen::Index rows() const { return val().rows(); }
    Eigen::Index cols() const { return val().cols(); }
    double scalar() const { return val()(0, 0); }
};

class Tape {
public:
    Tape() { nodes_.reserve(4096); }

    // Leaves -----------------------------------------------------------------
    Var constant(Mat v);            // no gradient
    Var input(Mat v);               // gradient tracked (inspect via grad_of)
    Var param(Parameter& p);        // gradient accumulated into p.grad

    // Arithmetic ---------------------------------------------------------------
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var neg(Var a);
    Var mul(Var a, Var b);          // Hadamard
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);

    // Shape ------------------------------------------------------------------
    Var concat_cols(Var a, Var b);
    Var concat_rows(const std::vector<Var>& parts);
    Var block(Var a, Eigen::Index i, Eigen::Index j, Eigen::Index p, Eigen::Index q);
    Var gather_rows(Var a, std::vector<int> idx);
    Var repeat_rows(Var row_vec, Eigen::Index n);   // 1xC -> nxC
    Var repeat_cols(Var col_vec, Eigen::Index m);   // Nx1 -> Nxm
    Var take_diag(Var a);                           // NxN -> Nx1

    // Broadcast --------------------------------------------------------------
    Var add_row_vec(Var a, Var r);  // NxC + 1xC
    Var add_col_vec(Var a, Var c);  // NxC + Nx1
    Var mul_row_vec(Var a, Var r);
    Var mul_col_vec(Var a, Var c);

    // Reductions ---------------------------------------------------------------
    Var sum_all(Var a);             // 1x1
    Var mean_all(Var a);            // 1x1
    Var row_sum(Var a);             // Nx1
    Var col_sum(Var a);             // 1xC

    // Nonlinearities -----------------------------------------------------------
    Var sigmoid(Var a);
    Var relu(Var a);
    Var leaky_relu(Var a, double slope);
    Var exp(Var a);
    Var log(Var a);
    Var sqrt(Var a);
    Var softplus(Var a);            // log(1 + e^x), stable
    Var cwise_inverse(Var a);       // 1/x
    Var softmax_rows(Var a);

    // Engine -------------------------------------------------------------------
    void backward(Var loss);        // loss must be 1x1
    const Mat& value(int id) const { return nodes_[id].value; }
    const Mat& grad_of(Var v);      // zero matrix if never touched
    void clear();
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        bool needs_grad = false;
        bool grad_alloc = false;
        Parameter* parameter = nullptr;
        std::function<void(Tape&, const Mat&)> backprop;  // receives this node's grad
    };

    int push(Mat value, bool needs_grad,
             std::function<void(Tape&, const Mat&)> backprop = nullptr,
             Parameter* parameter = nullptr);
    Mat& grad_buf(int id);
    void accum(int id, const Mat& g);
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }

    std::vector<Node> nodes_;
    std::unordered_map<Parameter*, int> param_cache_;

    friend struct Var;
};

inline const Mat& Var::val() const { return tape->value(id); }

// Convenience free functions so expressions read naturally.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator*(double s, Var a) { return a.tape->scale(a, s); }

// Composites built from verified primitives -----------------------------------

// Row-wise layer normalization with learned gain/bias (1xC each).
Var layer_norm_rows(Tape& t, Var a, Var gamma, Var beta, double eps = 1e-5);

// Row-wise L2 normalization; rows with norm below `guard` pass through.
Var l2_normalize_rows(Tape& t, Var a, double guard = 1e-12);

// Mean squared error between same-shaped matrices.
Var mse(Tape& t, Var pred, Var target);

}  // namespace herbrec::ad
