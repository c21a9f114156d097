#include "doctest.h"

#include "herbrec/autodiff.hpp"
#include "herbrec/gradcheck.hpp"
#include "herbrec/params.hpp"
#include "herbrec/rng.hpp"

using namespace herbrec;
using ad::Mat;
using ad::Tape;
using ad::Var;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal() * scale;
    return m;
}

// FD-check a unary/binary op wired into a scalar loss sum(w ⊙ f(x[, y])).
double check_op(const std::function<Var(Tape&, Var, Var)>& build,
                Eigen::Index r, Eigen::Index c, std::uint64_t seed,
                Eigen::Index r2 = -1, Eigen::Index c2 = -1) {
    Rng rng(seed);
    ad::Parameter px("x", random_mat(r, c, rng));
    ad::Parameter py("y", random_mat(r2 < 0 ? r : r2, c2 < 0 ? c : c2, rng));
    Mat weights = random_mat(1, 1, rng);  // draw to vary loss weighting seedwise

    auto run = [&](bool with_grad) {
        Tape t;
        Var x = t.param(px);
        Var y = t.param(py);
        Var out = build(t, x, y);
        Var loss = t.mean_all(t.mul(out, out));  // quadratic head exercises chain
        if (with_grad) t.backward(loss);
        return loss.scalar();
    };
    auto report = grad_check({&px, &py}, run, 1e-5);
    return report.max_rel_err;
}

}  // namespace

TEST_CASE("arithmetic primitives match finite differences") {
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.add(x, y); }, 3, 4, 1) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.sub(x, y); }, 3, 4, 2) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.neg(x); }, 3, 4, 3) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.mul(x, y); }, 3, 4, 4) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.matmul(x, y); }, 3, 4, 5, 4, 2) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.transpose(x); }, 3, 4, 6) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.scale(x, -2.5); }, 3, 4, 7) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.add_scalar(x, 0.7); }, 3, 4, 8) < 1e-6);
}

TEST_CASE("shape primitives match finite differences") {
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.concat_cols(x, y); }, 3, 4, 11, 3, 2) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.concat_rows({x, y, x}); }, 3, 4, 12, 2, 4) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.block(x, 1, 1, 2, 3); }, 3, 4, 13) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.gather_rows(x, {2, 0, 2, 1}); }, 3, 4, 14) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.repeat_rows(t.block(x, 0, 0, 1, 4), 5); }, 3, 4, 15) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.repeat_cols(t.block(x, 0, 0, 3, 1), 5); }, 3, 4, 16) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.take_diag(x); }, 4, 4, 17) < 1e-6);
}

TEST_CASE("broadcast primitives match finite differences") {
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.add_row_vec(x, y); }, 3, 4, 21, 1, 4) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.add_col_vec(x, y); }, 3, 4, 22, 3, 1) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.mul_row_vec(x, y); }, 3, 4, 23, 1, 4) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var y) { return t.mul_col_vec(x, y); }, 3, 4, 24, 3, 1) < 1e-6);
}

TEST_CASE("reductions match finite differences") {
    CHECK(check_op([](Tape& t, Var x, Var) { return t.sum_all(x); }, 3, 4, 31) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.mean_all(x); }, 3, 4, 32) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.row_sum(x); }, 3, 4, 33) < 1e-6);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.col_sum(x); }, 3, 4, 34) < 1e-6);
}

TEST_CASE("nonlinearities match finite differences") {
    CHECK(check_op([](Tape& t, Var x, Var) { return t.sigmoid(x); }, 3, 4, 41) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.relu(x); }, 3, 4, 42) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.leaky_relu(x, 0.2); }, 3, 4, 43) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.exp(x); }, 3, 4, 44) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.softplus(x); }, 3, 4, 45) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.softmax_rows(x); }, 3, 5, 46) < 1e-5);
    // log/sqrt/inverse need positive inputs
    CHECK(check_op([](Tape& t, Var x, Var) { return t.log(t.add_scalar(t.mul(x, x), 0.5)); }, 3, 4, 47) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.sqrt(t.add_scalar(t.mul(x, x), 0.5)); }, 3, 4, 48) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return t.cwise_inverse(t.add_scalar(t.mul(x, x), 0.5)); }, 3, 4, 49) < 1e-5);
}

TEST_CASE("composites match finite differences") {
    CHECK(check_op([](Tape& t, Var x, Var) {
              Rng r(7);
              Mat g = random_mat(1, 4, r), b = random_mat(1, 4, r);
              return layer_norm_rows(t, x, t.input(g), t.input(b));
          }, 3, 4, 51) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var) { return l2_normalize_rows(t, x); }, 3, 4, 52) < 1e-5);
    CHECK(check_op([](Tape& t, Var x, Var y) { return mse(t, x, y); }, 3, 4, 53) < 1e-5);
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
    Rng rng(99);
    Tape t;
    Var x = t.constant(random_mat(5, 7, rng, 3.0));
    Var y = t.softmax_rows(x);
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK(y.val().row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
    Var x_shift = t.add_scalar(x, 17.0);
    Var y2 = t.softmax_rows(x_shift);
    CHECK((y.val() - y2.val()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parameter reused twice accumulates both contributions") {
    ad::Parameter p("w", Mat::Constant(1, 1, 3.0));
    Tape t;
    Var w1 = t.param(p);
    Var w2 = t.param(p);
    CHECK(w1.id == w2.id);  // same leaf, no duplicate copy
    Var loss = t.sum_all(t.mul(w1, w2));  // w^2
    t.backward(loss);
    CHECK(p.grad(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("x0 leaf gradient is reachable through deep chains") {
    Rng rng(5);
    Tape t;
    Var x = t.input(random_mat(2, 3, rng));
    Var h = x;
    for (int i = 0; i < 20; ++i) h = t.leaky_relu(t.add_scalar(h, 0.01), 0.2);
    t.backward(t.sum_all(h));
    CHECK(t.grad_of(x).cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("l2 normalize guards all-zero rows") {
    Tape t;
    Mat m(2, 3);
    m << 3.0, 4.0, 0.0, 0.0, 0.0, 0.0;
    Var out = l2_normalize_rows(t, t.constant(m));
    CHECK(out.val().row(0).norm() == doctest::Approx(1.0));
    CHECK(out.val().row(1).norm() == doctest::Approx(0.0));
}

TEST_CASE("linear map gradient is near exact") {
    Rng rng(123);
    ad::Parameter w("w", random_mat(4, 3, rng));
    Mat x = random_mat(5, 4, rng);
    Mat target = random_mat(5, 3, rng);
    auto run = [&](bool with_grad) {
        Tape t;
        Var pred = t.matmul(t.constant(x), t.param(w));
        Var loss = t.sum_all(t.mul(pred, t.constant(target)));  // linear in w
        if (with_grad) t.backward(loss);
        return loss.scalar();
    };
    auto rep = grad_check({&w}, run, 1e-5);
    CHECK(rep.max_rel_err < 1e-8);
}

TEST_CASE("adam converges on a quadratic") {
    ad::Parameter p("p", Mat::Constant(2, 2, 5.0));
    AdamOptimizer opt({&p}, 0.1);
    for (int i = 0; i < 500; ++i) {
        opt.zero_grads();
        Tape t;
        Var v = t.param(p);
        t.backward(t.sum_all(t.mul(v, v)));
        opt.step();
    }
    CHECK(p.value.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("grad_check sampled coordinates stay within bounds") {
    Rng rng(77);
    ad::Parameter w("w", random_mat(6, 6, rng));
    auto run = [&](bool with_grad) {
        Tape t;
        Var v = t.param(w);
        Var loss = t.mean_all(t.sigmoid(t.matmul(v, t.transpose(v))));
        if (with_grad) t.backward(loss);
        return loss.scalar();
    };
    auto rep = grad_check({&w}, run, 1e-5, 10, 42);
    CHECK(rep.coords_checked == 10);
    CHECK(rep.max_rel_err < 1e-5);
}
