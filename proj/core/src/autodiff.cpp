#include "herbrec/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace herbrec::ad {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
}

}  // namespace

int Tape::push(Mat value, bool needs_grad,
               std::function<void(Tape&, const Mat&)> backprop, Parameter* parameter) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.backprop = std::move(backprop);
    n.parameter = parameter;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
        n.grad = Mat::Zero(n.value.rows(), n.value.cols());
        n.grad_alloc = true;
    }
    return n.grad;
}

void Tape::accum(int id, const Mat& g) {
    if (!nodes_[id].needs_grad) return;
    grad_buf(id) += g;
}

Var Tape::constant(Mat v) { return {this, push(std::move(v), false)}; }

Var Tape::input(Mat v) { return {this, push(std::move(v), true)}; }

Var Tape::param(Parameter& p) {
    auto it = param_cache_.find(&p);
    if (it != param_cache_.end()) return {this, it->second};
    const int id = push(p.value, true, nullptr, &p);
    param_cache_.emplace(&p, id);
    return {this, id};
}

Var Tape::add(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "add");
    const int ia = a.id, ib = b.id;
    return {this, push(a.val() + b.val(), needs(a) || needs(b),
                       [ia, ib](Tape& t, const Mat& g) {
                           t.accum(ia, g);
                           t.accum(ib, g);
                       })};
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "sub");
    const int ia = a.id, ib = b.id;
    return {this, push(a.val() - b.val(), needs(a) || needs(b),
                       [ia, ib](Tape& t, const Mat& g) {
                           t.accum(ia, g);
                           t.accum(ib, -g);
                       })};
}

Var Tape::neg(Var a) {
    const int ia = a.id;
    return {this, push(-a.val(), needs(a),
                       [ia](Tape& t, const Mat& g) { t.accum(ia, -g); })};
}

Var Tape::mul(Var a, Var b) {
    check_same_shape(a.val(), b.val(), "mul");
    const int ia = a.id, ib = b.id;
    return {this, push(a.val().cwiseProduct(b.val()), needs(a) || needs(b),
                       [ia, ib](Tape& t, const Mat& g) {
                           t.accum(ia, g.cwiseProduct(t.value(ib)));
                           t.accum(ib, g.cwiseProduct(t.value(ia)));
                       })};
}

Var Tape::matmul(Var a, Var b) {
    if (a.val().cols() != b.val().rows())
        throw std::invalid_argument("matmul: inner dimension mismatch");
    const int ia = a.id, ib = b.id;
    return {this, push(a.val() * b.val(), needs(a) || needs(b),
                       [ia, ib](Tape& t, const Mat& g) {
                           t.accum(ia, g * t.value(ib).transpose());
                           t.accum(ib, t.value(ia).transpose() * g);
                       })};
}

Var Tape::transpose(Var a) {
    const int ia = a.id;
    return {this, push(a.val().transpose(), needs(a),
                       [ia](Tape& t, const Mat& g) { t.accum(ia, g.transpose()); })};
}

Var Tape::scale(Var a, double s) {
    const int ia = a.id;
    return {this, push(a.val() * s, needs(a),
                       [ia, s](Tape& t, const Mat& g) { t.accum(ia, g * s); })};
}

Var Tape::add_scalar(Var a, double s) {
    const int ia = a.id;
    return {this, push(a.val().array() + s, needs(a),
                       [ia](Tape& t, const Mat& g) { t.accum(ia, g); })};
}

Var Tape::concat_cols(Var a, Var b) {
    if (a.val().rows() != b.val().rows())
        throw std::invalid_argument("concat_cols: row mismatch");
    Mat v(a.val().rows(), a.val().cols() + b.val().cols());
    v << a.val(), b.val();
    const int ia = a.id, ib = b.id;
    const Eigen::Index ca = a.val().cols(), cb = b.val().cols();
    return {this, push(std::move(v), needs(a) || needs(b),
                       [ia, ib, ca, cb](Tape& t, const Mat& g) {
                           t.accum(ia, g.leftCols(ca));
                           t.accum(ib, g.rightCols(cb));
                       })};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
    Eigen::Index rows = 0;
    const Eigen::Index cols = parts.front().val().cols();
    bool any_grad = false;
    for (const Var& p : parts) {
        if (p.val().cols() != cols) throw std::invalid_argument("concat_rows: col mismatch");
        rows += p.val().rows();
        any_grad = any_grad || needs(p);
    }
    Mat v(rows, cols);
    std::vector<int> ids;
    std::vector<Eigen::Index> sizes;
    Eigen::Index at = 0;
    for (const Var& p : parts) {
        v.middleRows(at, p.val().rows()) = p.val();
        ids.push_back(p.id);
        sizes.push_back(p.val().rows());
        at += p.val().rows();
    }
    return {this, push(std::move(v), any_grad,
                       [ids, sizes](Tape& t, const Mat& g) {
                           Eigen::Index r = 0;
                           for (std::size_t k = 0; k < ids.size(); ++k) {
                               t.accum(ids[k], g.middleRows(r, sizes[k]));
                               r += sizes[k];
                           }
                       })};
}

Var Tape::block(Var a, Eigen::Index i, Eigen::Index j, Eigen::Index p, Eigen::Index q) {
    const int ia = a.id;
    const Eigen::Index rows = a.val().rows(), cols = a.val().cols();
    if (i < 0 || j < 0 || i + p > rows || j + q > cols)
        throw std::invalid_argument("block: out of range");
    return {this, push(a.val().block(i, j, p, q), needs(a),
                       [ia, i, j, p, q, rows, cols](Tape& t, const Mat& g) {
                           Mat full = Mat::Zero(rows, cols);
                           full.block(i, j, p, q) = g;
                           t.accum(ia, full);
                       })};
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
    const int ia = a.id;
    Mat v(static_cast<Eigen::Index>(idx.size()), a.val().cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= a.val().rows())
            throw std::invalid_argument("gather_rows: index out of range");
        v.row(static_cast<Eigen::Index>(k)) = a.val().row(idx[k]);
    }
    const Eigen::Index rows = a.val().rows(), cols = a.val().cols();
    return {this, push(std::move(v), needs(a),
                       [ia, idx = std::move(idx), rows, cols](Tape& t, const Mat& g) {
                           Mat full = Mat::Zero(rows, cols);
                           for (std::size_t k = 0; k < idx.size(); ++k)
                               full.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
                           t.accum(ia, full);
                       })};
}

Var Tape::repeat_rows(Var row_vec, Eigen::Index n) {
    if (row_vec.val().rows() != 1) throw std::invalid_argument("repeat_rows: expects 1xC");
    const int ia = row_vec.id;
    return {this, push(row_vec.val().replicate(n, 1), needs(row_vec),
                       [ia](Tape& t, const Mat& g) {
                           t.accum(ia, g.colwise().sum());
                       })};
}

Var Tape::repeat_cols(Var col_vec, Eigen::Index m) {
    if (col_vec.val().cols() != 1) throw std::invalid_argument("repeat_cols: expects Nx1");
    const int ia = col_vec.id;
    return {this, push(col_vec.val().replicate(1, m), needs(col_vec),
                       [ia](Tape& t, const Mat& g) {
                           t.accum(ia, g.rowwise().sum());
                       })};
}

Var Tape::take_diag(Var a) {
    if (a.val().rows() != a.val().cols()) throw std::invalid_argument("take_diag: not square");
    const int ia = a.id;
    const Eigen::Index n = a.val().rows();
    return {this, push(a.val().diagonal(), needs(a),
                       [ia, n](Tape& t, const Mat& g) {
                           Mat full = Mat::Zero(n, n);
                           full.diagonal() = g.col(0);
                           t.accum(ia, full);
                       })};
}

Var Tape::add_row_vec(Var a, Var r) {
    if (r.val().rows() != 1 || r.val().cols() != a.val().cols())
        throw std::invalid_argument("add_row_vec: shape mismatch");
    const int ia = a.id, ir = r.id;
    Mat v = a.val();
    v.rowwise() += r.val().row(0);
    return {this, push(std::move(v), needs(a) || needs(r),
                       [ia, ir](Tape& t, const Mat& g) {
                           t.accum(ia, g);
                           t.accum(ir, g.colwise().sum());
                       })};
}

Var Tape::add_col_vec(Var a, Var c) {
    if (c.val().cols() != 1 || c.val().rows() != a.val().rows())
        throw std::invalid_argument("add_col_vec: shape mismatch");
    const int ia = a.id, ic = c.id;
    Mat v = a.val();
    v.colwise() += c.val().col(0);
    return {this, push(std::move(v), needs(a) || needs(c),
                       [ia, ic](Tape& t, const Mat& g) {
                           t.accum(ia, g);
                           t.accum(ic, g.rowwise().sum());
                       })};
}

Var Tape::mul_row_vec(Var a, Var r) {
    if (r.val().rows() != 1 || r.val().cols() != a.val().cols())
        throw std::invalid_argument("mul_row_vec: shape mismatch");
    const int ia = a.id, ir = r.id;
    Mat v = a.val().array().rowwise() * r.val().row(0).array();
    return {this, push(std::move(v), needs(a) || needs(r),
                       [ia, ir](Tape& t, const Mat& g) {
                           t.accum(ia, g.array().rowwise() * t.value(ir).row(0).array());
                           t.accum(ir, (g.cwiseProduct(t.value(ia))).colwise().sum());
                       })};
}

Var Tape::mul_col_vec(Var a, Var c) {
    if (c.val().cols() != 1 || c.val().rows() != a.val().rows())
        throw std::invalid_argument("mul_col_vec: shape mismatch");
    const int ia = a.id, ic = c.id;
    Mat v = a.val().array().colwise() * c.val().col(0).array();
    return {this, push(std::move(v), needs(a) || needs(c),
                       [ia, ic](Tape& t, const Mat& g) {
                           t.accum(ia, g.array().colwise() * t.value(ic).col(0).array());
                           t.accum(ic, (g.cwiseProduct(t.value(ia))).rowwise().sum());
                       })};
}

Var Tape::sum_all(Var a) {
    const int ia = a.id;
    const Eigen::Index r = a.val().rows(), c = a.val().cols();
    Mat v(1, 1);
    v(0, 0) = a.val().sum();
    return {this, push(std::move(v), needs(a),
                       [ia, r, c](Tape& t, const Mat& g) {
                           t.accum(ia, Mat::Constant(r, c, g(0, 0)));
                       })};
}

Var Tape::mean_all(Var a) {
    return scale(sum_all(a), 1.0 / static_cast<double>(a.val().size()));
}

Var Tape::row_sum(Var a) {
    const int ia = a.id;
    const Eigen::Index c = a.val().cols();
    return {this, push(a.val().rowwise().sum(), needs(a),
                       [ia, c](Tape& t, const Mat& g) {
                           t.accum(ia, g.col(0).replicate(1, c));
                       })};
}

Var Tape::col_sum(Var a) {
    const int ia = a.id;
    const Eigen::Index r = a.val().rows();
    return {this, push(a.val().colwise().sum(), needs(a),
                       [ia, r](Tape& t, const Mat& g) {
                           t.accum(ia, g.row(0).replicate(r, 1));
                       })};
}

Var Tape::sigmoid(Var a) {
    const int ia = a.id;
    Mat v = (1.0 / (1.0 + (-a.val().array()).exp())).matrix();
    const int self = push(std::move(v), needs(a));
    nodes_[self].backprop = [ia, self](Tape& t, const Mat& g) {
        const auto& y = t.value(self).array();
        t.accum(ia, (g.array() * y * (1.0 - y)).matrix());
    };
    return {this, self};
}

Var Tape::relu(Var a) {
    const int ia = a.id;
    return {this, push(a.val().cwiseMax(0.0), needs(a),
                       [ia](Tape& t, const Mat& g) {
                           const auto& x = t.value(ia).array();
                           t.accum(ia, (g.array() * (x > 0.0).cast<double>()).matrix());
                       })};
}

Var Tape::leaky_relu(Var a, double slope) {
    const int ia = a.id;
    Mat v = a.val().array().max(a.val().array() * slope).matrix();
    return {this, push(std::move(v), needs(a),
                       [ia, slope](Tape& t, const Mat& g) {
                           const auto& x = t.value(ia).array();
                           Mat d = (x > 0.0).select(Mat::Ones(x.rows(), x.cols()),
                                                    Mat::Constant(x.rows(), x.cols(), slope));
                           t.accum(ia, g.cwiseProduct(d));
                       })};
}

Var Tape::exp(Var a) {
    const int ia = a.id;
    const int self = push(a.val().array().exp().matrix(), needs(a));
    nodes_[self].backprop = [ia, self](Tape& t, const Mat& g) {
        t.accum(ia, g.cwiseProduct(t.value(self)));
    };
    return {this, self};
}

Var Tape::log(Var a) {
    const int ia = a.id;
    return {this, push(a.val().array().log().matrix(), needs(a),
                       [ia](Tape& t, const Mat& g) {
                           t.accum(ia, g.cwiseQuotient(t.value(ia)));
                       })};
}

Var Tape::sqrt(Var a) {
    const int ia = a.id;
    const int self = push(a.val().array().sqrt().matrix(), needs(a));
    nodes_[self].backprop = [ia, self](Tape& t, const Mat& g) {
        t.accum(ia, (g.array() / (2.0 * t.value(self).array())).matrix());
    };
    return {this, self};
}

Var Tape::softplus(Var a) {
    const int ia = a.id;
    // max(x,0) + log1p(exp(-|x|)) avoids overflow on both tails.
    Mat v = (a.val().array().max(0.0) + (-a.val().array().abs()).exp().log1p()).matrix();
    return {this, push(std::move(v), needs(a),
                       [ia](Tape& t, const Mat& g) {
                           const auto& x = t.value(ia).array();
                           t.accum(ia, (g.array() / (1.0 + (-x).exp())).matrix());
                       })};
}

Var Tape::cwise_inverse(Var a) {
    const int ia = a.id;
    const int self = push(a.val().cwiseInverse(), needs(a));
    nodes_[self].backprop = [ia, self](Tape& t, const Mat& g) {
        const auto& y = t.value(self).array();
        t.accum(ia, (-g.array() * y * y).matrix());
    };
    return {this, self};
}

Var Tape::softmax_rows(Var a) {
    const int ia = a.id;
    Mat v = a.val();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double mx = v.row(i).maxCoeff();
        v.row(i) = (v.row(i).array() - mx).exp();
        v.row(i) /= v.row(i).sum();
    }
    const int self = push(std::move(v), needs(a));
    nodes_[self].backprop = [ia, self](Tape& t, const Mat& g) {
        const Mat& y = t.value(self);
        Mat gy = g.cwiseProduct(y);
        Mat dot = gy.rowwise().sum();  // Nx1
        Mat out = gy - (y.array().colwise() * dot.col(0).array()).matrix();
        t.accum(ia, out);
    };
    return {this, self};
}

void Tape::backward(Var loss) {
    if (loss.val().rows() != 1 || loss.val().cols() != 1)
        throw std::invalid_argument("backward: loss must be 1x1");
    grad_buf(loss.id)(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.needs_grad || !n.grad_alloc) continue;
        if (n.backprop) n.backprop(*this, n.grad);
        if (n.parameter) n.parameter->grad += n.grad;
    }
}

const Mat& Tape::grad_of(Var v) {
    return grad_buf(v.id);
}

void Tape::clear() {
    nodes_.clear();
    param_cache_.clear();
}

// Composites -------------------------------------------------------------------

Var layer_norm_rows(Tape& t, Var a, Var gamma, Var beta, double eps) {
    const Eigen::Index c = a.cols();
    Var mean = t.scale(t.row_sum(a), 1.0 / static_cast<double>(c));       // Nx1
    Var centered = t.sub(a, t.repeat_cols(mean, c));
    Var var = t.scale(t.row_sum(t.mul(centered, centered)), 1.0 / static_cast<double>(c));
    Var inv_std = t.cwise_inverse(t.sqrt(t.add_scalar(var, eps)));
    Var normed = t.mul_col_vec(centered, inv_std);
    return t.add_row_vec(t.mul_row_vec(normed, gamma), beta);
}

Var l2_normalize_rows(Tape& t, Var a, double guard) {
    Mat norms = a.val().rowwise().norm();
    Mat scales(norms.rows(), 1);
    for (Eigen::Index i = 0; i < norms.rows(); ++i)
        scales(i, 0) = norms(i, 0) < guard ? 1.0 : 0.0;  // 1 marks guarded rows
    bool any_guarded = scales.col(0).sum() > 0.0;
    if (!any_guarded) {
        Var norm = t.sqrt(t.row_sum(t.mul(a, a)));
        return t.mul_col_vec(a, t.cwise_inverse(norm));
    }
    // Guarded rows pass through unnormalized: scale = 1 for them, 1/norm else.
    Var norm = t.sqrt(t.add_col_vec(t.row_sum(t.mul(a, a)), t.constant(scales)));
    // For guarded rows norm^2 ~ 0 so sqrt(0 + 1) = 1 -> identity scaling.
    return t.mul_col_vec(a, t.cwise_inverse(norm));
}

Var mse(Tape& t, Var pred, Var target) {
    Var d = t.sub(pred, target);
    return t.mean_all(t.mul(d, d));
}

}  // namespace herbrec::ad
