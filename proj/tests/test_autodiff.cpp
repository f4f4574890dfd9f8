#include <doctest.h>

#include <cmath>
#include <functional>

#include "dcf/optim.hpp"
#include "dcf/tape.hpp"

using namespace dcf;

namespace {

// Wraps a single-input tape with scalar output as a ScalarFn over the
// flattened input.
ScalarFn tape_fn(Tape& tape, int in_node, Eigen::Index rows, Eigen::Index cols,
                 const ParamStore& params) {
    auto reshape = [rows, cols](const Eigen::VectorXd& x) {
        Tensor t(rows, cols);
        Eigen::Index at = 0;
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) t(i, j) = x[at++];
        return t;
    };
    ScalarFn fn;
    fn.value = [&tape, &params, reshape](const Eigen::VectorXd& x) {
        tape.forward({reshape(x)}, params);
        return tape.value(tape.outputs()[0])(0, 0);
    };
    fn.grad = [&tape, &params, in_node, reshape](const Eigen::VectorXd& x) {
        tape.forward({reshape(x)}, params);
        tape.backward();
        const Tensor& g = tape.gradient(in_node);
        Eigen::VectorXd out(g.size());
        Eigen::Index at = 0;
        for (Eigen::Index i = 0; i < g.rows(); ++i)
            for (Eigen::Index j = 0; j < g.cols(); ++j) out[at++] = g(i, j);
        return out;
    };
    return fn;
}

}  // namespace

TEST_CASE("forward squaring and softmax symmetry") {
    ParamStore none;
    Tape tape;
    int x = tape.input(1, 1);
    tape.set_output(tape.square(x));
    tape.forward({Tensor::Constant(1, 1, 3.0)}, none);
    CHECK(tape.value(tape.outputs()[0])(0, 0) == doctest::Approx(9.0));
    tape.backward();
    CHECK(tape.gradient(x)(0, 0) == doctest::Approx(6.0));

    Tape tape2;
    int v = tape2.input(3, 1);
    int s = tape2.softmax_t(v, 1.0);
    tape2.set_output(tape2.sum_all(s));
    tape2.forward({Tensor::Zero(3, 1)}, none);
    for (int i = 0; i < 3; ++i)
        CHECK(tape2.value(s)(i, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    // Softmax rows sum to one, so the gradient of their sum vanishes.
    tape2.backward();
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(tape2.gradient(v)(i, 0)) < 1e-14);
}

TEST_CASE("two-layer tanh MLP matches straight-line reimplementation") {
    Rng rng(7, "mlp-oracle");
    ParamStore params;
    int w1 = params.add("w1", glorot_uniform(5, 3, rng));
    int b1 = params.add("b1", glorot_uniform(5, 1, rng));
    int w2 = params.add("w2", glorot_uniform(2, 5, rng));
    int b2 = params.add("b2", glorot_uniform(2, 1, rng));

    Tape tape;
    int x = tape.input(3, 1);
    int h = tape.tanh(tape.add(tape.matmul(tape.param(w1, 5, 3), x), tape.param(b1, 5, 1)));
    int y = tape.add(tape.matmul(tape.param(w2, 2, 5), h), tape.param(b2, 2, 1));
    tape.set_output(tape.sum_all(y));

    Tensor xin(3, 1);
    xin << 0.3, -1.2, 0.75;
    tape.forward({xin}, params);

    // Independent duplicate arithmetic with plain loops.
    double hand[2] = {0.0, 0.0};
    for (int o = 0; o < 2; ++o) {
        double acc = params.value(b2)(o, 0);
        for (int i = 0; i < 5; ++i) {
            double hi = params.value(b1)(i, 0);
            for (int j = 0; j < 3; ++j) hi += params.value(w1)(i, j) * xin(j, 0);
            acc += params.value(w2)(o, i) * std::tanh(hi);
        }
        hand[o] = acc;
    }
    CHECK(tape.value(y)(0, 0) == doctest::Approx(hand[0]).epsilon(1e-14));
    CHECK(tape.value(y)(1, 0) == doctest::Approx(hand[1]).epsilon(1e-14));

    // Replaying the same input reproduces values bit for bit.
    double first = tape.value(tape.outputs()[0])(0, 0);
    tape.forward({xin}, params);
    CHECK(tape.value(tape.outputs()[0])(0, 0) == first);

    // Three-layer-deep gradient vs finite differences through the same tape.
    ScalarFn fn = tape_fn(tape, x, 3, 1, params);
    Eigen::VectorXd pt(3);
    pt << 0.3, -1.2, 0.75;
    CHECK(grad_check(fn, pt) < 1e-6);
}

TEST_CASE("every primitive matches central finite differences") {
    struct Case {
        const char* name;
        std::function<int(Tape&, int)> build;
        double lo, hi;
    };
    const std::vector<Case> cases = {
        {"tanh", [](Tape& t, int a) { return t.tanh(a); }, -2.0, 2.0},
        {"sigmoid", [](Tape& t, int a) { return t.sigmoid(a); }, -3.0, 3.0},
        {"exp", [](Tape& t, int a) { return t.exp(a); }, -1.5, 1.5},
        {"log", [](Tape& t, int a) { return t.log(a); }, 0.4, 3.0},
        {"softplus", [](Tape& t, int a) { return t.softplus(a); }, -3.0, 3.0},
        {"square", [](Tape& t, int a) { return t.square(a); }, -2.0, 2.0},
        {"smooth_abs", [](Tape& t, int a) { return t.smooth_abs(a); }, 0.2, 2.5},
        {"log_gamma", [](Tape& t, int a) { return t.log_gamma(a); }, 1.1, 8.0},
        {"affine", [](Tape& t, int a) { return t.affine(a, -1.7, 0.4); }, -2.0, 2.0},
        {"softmax_t", [](Tape& t, int a) { return t.square(t.softmax_t(a, 0.5)); }, -1.5, 1.5},
        {"colsum", [](Tape& t, int a) { return t.square(t.col_sum(a)); }, -1.0, 1.0},
        {"mean", [](Tape& t, int a) { return t.square(t.mean_all(a)); }, -1.0, 1.0},
        {"slice+concat",
         [](Tape& t, int a) {
             int s1 = t.slice_rows(a, 0, 1);
             int s2 = t.slice_rows(a, 1, 2);
             return t.square(t.concat_rows({s2, s1}));
         },
         -1.0, 1.0},
        {"lse", [](Tape& t, int a) { return t.square(t.log_sum_exp_rows(a)); }, -2.0, 2.0},
        {"matmul_self",
         [](Tape& t, int a) { return t.matmul_ta(a, t.square(a)); },
         -1.0, 1.0},
    };

    Rng rng(11, "primitive-grad");
    ParamStore none;
    for (const Case& c : cases) {
        CAPTURE(c.name);
        Tape tape;
        int in = tape.input(3, 2);
        tape.set_output(tape.sum_all(c.build(tape, in)));
        ScalarFn fn = tape_fn(tape, in, 3, 2, none);

        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::VectorXd pt(6);
            for (int i = 0; i < 6; ++i) pt[i] = rng.uniform(c.lo, c.hi);
            worst = std::max(worst, grad_check(fn, pt, 1e-5));
        }
        CHECK_MESSAGE(worst < 1e-5, c.name);
    }
}

TEST_CASE("broadcast add/sub/mul gradients") {
    Rng rng(13, "broadcast-grad");
    ParamStore params;
    int pcol = params.add("col", glorot_uniform(3, 1, rng));
    int prow = params.add("row", glorot_uniform(1, 4, rng));

    Tape tape;
    int in = tape.input(3, 4);
    int a = tape.add(in, tape.param(pcol, 3, 1));
    int b = tape.sub(a, tape.param(prow, 1, 4));
    int m = tape.mul(b, tape.param(pcol, 3, 1));
    tape.set_output(tape.sum_all(tape.square(m)));
    ScalarFn fn = tape_fn(tape, in, 3, 4, params);
    Eigen::VectorXd pt(12);
    for (int i = 0; i < 12; ++i) pt[i] = rng.uniform(-1.0, 1.0);
    CHECK(grad_check(fn, pt) < 1e-6);

    // Parameter gradients against finite differences too.
    tape.forward({Eigen::Map<Tensor>(pt.data(), 4, 3).transpose().eval()}, params);
    tape.backward();
    auto grads = tape.param_gradients(params);
    Tensor xin = Eigen::Map<Tensor>(pt.data(), 4, 3).transpose();
    for (int which : {0, 1}) {
        Tensor& p = params.value(which);
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            double h = 1e-6;
            double saved = p(i);
            p(i) = saved + h;
            tape.forward({xin}, params);
            double up = tape.value(tape.outputs()[0])(0, 0);
            p(i) = saved - h;
            tape.forward({xin}, params);
            double dn = tape.value(tape.outputs()[0])(0, 0);
            p(i) = saved;
            CHECK(grads[which](i) == doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-5));
        }
    }
}

TEST_CASE("constant subgraph contributes exactly zero gradient") {
    Rng rng(3, "const-grad");
    ParamStore params;
    int unused = params.add("unused", glorot_uniform(2, 2, rng));
    int used = params.add("used", glorot_uniform(1, 2, rng));

    Tape tape;
    int live = tape.input(2, 1);
    int dead = tape.input(2, 1);
    // A whole branch (dead input times the unused parameter) never reaches
    // the output.
    tape.square(tape.matmul(tape.param(unused, 2, 2), dead));
    tape.set_output(tape.sum_all(tape.matmul(tape.param(used, 1, 2), tape.square(live))));

    tape.forward({Tensor::Constant(2, 1, 1.5), Tensor::Constant(2, 1, -0.5)}, params);
    tape.backward();
    CHECK(tape.has_gradient(live));
    CHECK(!tape.has_gradient(dead));
    auto grads = tape.param_gradients(params);
    CHECK(grads[0].isZero(0.0));   // exactly zero, not just small
    CHECK(!grads[1].isZero(0.0));
}

TEST_CASE("error paths: shapes, order, non-finite") {
    ParamStore none;
    Tape tape;
    int a = tape.input(2, 2);
    int b = tape.input(3, 2);
    CHECK_THROWS_AS(tape.matmul(a, b), Error);  // inner dims disagree

    Tape t2;
    t2.input(2, 1);
    CHECK_THROWS_AS(t2.backward(), Error);  // backward before forward

    Tape t3;
    int x = t3.input(1, 1);
    t3.set_output(t3.log(x));
    CHECK_THROWS_AS(t3.forward({Tensor::Constant(1, 1, -1.0)}, none), Error);  // log(-1) = nan

    Tape t4;
    t4.input(2, 2);
    CHECK_THROWS_AS(t4.forward({Tensor::Zero(3, 3)}, none), Error);  // declared shape mismatch
}

TEST_CASE("adam: zero grad, first step, decoupled decay") {
    AdamConfig cfg;
    cfg.lr = 0.1;

    std::vector<Tensor> params{Tensor::Constant(1, 1, 2.0)};
    std::vector<Tensor> zero{Tensor::Zero(1, 1)};
    AdamState st;
    CHECK(adam_step(params, zero, st, cfg));
    CHECK(params[0](0, 0) == doctest::Approx(2.0));  // zero gradient, zero decay

    // Bias-corrected first step moves by ~lr.
    std::vector<Tensor> p2{Tensor::Constant(1, 1, 1.0)};
    std::vector<Tensor> g2{Tensor::Constant(1, 1, 1.0)};
    AdamState st2;
    CHECK(adam_step(p2, g2, st2, cfg));
    CHECK(p2[0](0, 0) == doctest::Approx(1.0 - 0.1).epsilon(1e-6));

    // Decoupled decay shrinks by (1 - lr * wd) under zero gradient.
    AdamConfig wd = cfg;
    wd.weight_decay = 1e-5;
    std::vector<Tensor> p3{Tensor::Constant(1, 1, 3.0)};
    AdamState st3;
    CHECK(adam_step(p3, zero, st3, wd));
    CHECK(p3[0](0, 0) == doctest::Approx(3.0 * (1.0 - 0.1 * 1e-5)).epsilon(1e-14));

    // Non-finite gradient skips the step and flags it.
    std::vector<Tensor> bad{Tensor::Constant(1, 1, std::nan(""))};
    CHECK(!adam_step(p3, bad, st3, wd));
    CHECK(st3.skipped == 1);
    CHECK(p3[0](0, 0) == doctest::Approx(3.0 * (1.0 - 0.1 * 1e-5)).epsilon(1e-14));
}

TEST_CASE("grad_check on sum of squares") {
    ScalarFn fn;
    fn.value = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
    fn.grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); };
    Eigen::VectorXd pt(4);
    pt << 1.0, -2.0, 0.5, 3.0;
    CHECK(grad_check(fn, pt) < 1e-8);
}

TEST_CASE("one-cycle schedule shape") {
    OneCycle oc{1e-3, 25.0, 1e4, 0.3};
    CHECK(oc.at(0, 1000) == doctest::Approx(1e-3 / 25.0));
    CHECK(oc.at(299, 1000) == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(oc.at(999, 1000) == doctest::Approx(1e-7).epsilon(1e-3));
    double mid = oc.at(650, 1000);
    CHECK(mid < 1e-3);
    CHECK(mid > 1e-7);
}
