// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "risgnn/autodiff.hpp"
#include "risgnn/rng.hpp"

using risgnn::Rng;
using risgnn::ad::Mat;
using risgnn::ad::Tape;
using risgnn::ad::Var;

namespace {

Mat random_mat(Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0) {
    Mat m(r, c);
    for (int j = 0; j < c; ++j)
        for (int i = 0; i < r; ++i) m(i, j) = rng.uniform(lo, hi);
    return m;
}

// Central finite differences of a scalar-valued graph in every entry of every
// input, compared against one reverse sweep.
void check_gradients(const std::vector<Mat>& inputs,
                     const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                     double tol = 1e-6, double eps = 1e-6) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const Mat& m : inputs) leaves.push_back(tape.leaf(m));
    const Var out = build(tape, leaves);
    REQUIRE(tape.value(out).rows() == 1);
    REQUIRE(tape.value(out).cols() == 1);
    tape.backward(out);

    for (std::size_t n = 0; n < inputs.size(); ++n) {
        const Mat analytic = tape.grad(leaves[n]);
        REQUIRE(analytic.rows() == inputs[n].rows());
        REQUIRE(analytic.cols() == inputs[n].cols());
        for (int j = 0; j < inputs[n].cols(); ++j) {
            for (int i = 0; i < inputs[n].rows(); ++i) {
                auto eval = [&](double delta) {
                    std::vector<Mat> shifted = inputs;
                    shifted[n](i, j) += delta;
                    Tape t2;
                    std::vector<Var> l2;
                    for (const Mat& m : shifted) l2.push_back(t2.leaf(m));
                    return t2.value(build(t2, l2))(0, 0);
                };
                const double fd = (eval(eps) - eval(-eps)) / (2.0 * eps);
                const double scale = std::max({1.0, std::abs(fd), std::abs(analytic(i, j))});
                CHECK(std::abs(analytic(i, j) - fd) <= tol * scale);
            }
        }
    }
}

}  // namespace

TEST_CASE("backward seeds a lone leaf with unit gradient") {
    Tape tape;
    Mat x(1, 1);
    x << 3.5;
    const Var v = tape.leaf(x);
    tape.backward(v);
    CHECK(tape.grad(v)(0, 0) == 1.0);
}

TEST_CASE("constants receive no gradient flow") {
    Tape tape;
    Mat x(2, 2), c(2, 2);
    x << 1, 2, 3, 4;
    c << 5, 6, 7, 8;
    const Var vx = tape.leaf(x);
    const Var vc = tape.constant(c);
    const Var out = risgnn::ad::total_sum(risgnn::ad::mul(vx, vc));
    tape.backward(out);
    CHECK(tape.grad(vx) == c);  // d(sum(x.*c))/dx = c
}

TEST_CASE("elementwise arithmetic gradients match finite differences") {
    Rng rng(1);
    const Mat a = random_mat(rng, 3, 4), b = random_mat(rng, 3, 4);
    check_gradients({a, b}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::mul(risgnn::ad::add(l[0], l[1]),
                                                     risgnn::ad::sub(l[0], l[1])));
    });
}

TEST_CASE("scale and add_scalar gradients match finite differences") {
    Rng rng(2);
    const Mat a = random_mat(rng, 2, 5);
    check_gradients({a}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(
            risgnn::ad::add_scalar(risgnn::ad::scale(l[0], -2.5), 0.75));
    });
}

TEST_CASE("matmul gradients match finite differences") {
    Rng rng(3);
    const Mat a = random_mat(rng, 3, 4), b = random_mat(rng, 4, 2);
    check_gradients({a, b}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::matmul(l[0], l[1]));
    });
    // Weighted output to exercise off-uniform upstream gradients.
    const Mat w = random_mat(rng, 3, 2);
    check_gradients({a, b}, [w](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(
            risgnn::ad::mul(risgnn::ad::matmul(l[0], l[1]), t.constant(w)));
    });
}

TEST_CASE("bias and row broadcast gradients match finite differences") {
    Rng rng(4);
    const Mat m = random_mat(rng, 3, 5);
    const Mat v = random_mat(rng, 3, 1);
    const Mat s = random_mat(rng, 1, 5, 0.2, 1.0);
    check_gradients({m, v}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::add_colvec(l[0], l[1]));
    });
    check_gradients({m, s}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::mul_rowvec(l[0], l[1]));
    });
    check_gradients({m, s}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::add_rowvec(l[0], l[1]));
    });
}

TEST_CASE("detached row subtraction passes gradient to the matrix only") {
    Rng rng(5);
    const Mat m = random_mat(rng, 3, 4);
    Mat r(1, 4);
    r << 0.3, -0.7, 1.1, 0.0;
    check_gradients({m}, [r](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(
            risgnn::ad::mul(risgnn::ad::sub_rowvec_const(l[0], r), l[0]));
    });
}

TEST_CASE("batched matvec applies a distinct matrix per column") {
    Rng rng(6);
    const int b = 3, n = 4, m = 2;
    std::vector<Mat> mats;
    for (int i = 0; i < b; ++i) mats.push_back(random_mat(rng, m, n));
    const Mat x = random_mat(rng, n, b);

    Tape tape;
    const Var vx = tape.leaf(x);
    const Var y = risgnn::ad::batched_matvec(mats, vx);
    for (int i = 0; i < b; ++i) {
        const Mat want = mats[static_cast<std::size_t>(i)] * x.col(i);
        CHECK((tape.value(y).col(i) - want).norm() < 1e-14);
    }
    check_gradients({x}, [&mats](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::batched_matvec(mats, l[0]));
    });
}

TEST_CASE("concatenation and slicing route gradients to the right rows") {
    Rng rng(7);
    const Mat a = random_mat(rng, 2, 3), b = random_mat(rng, 3, 3), c = random_mat(rng, 1, 3);
    check_gradients({a, b}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::vcat(l[0], l[1]));
    });
    check_gradients({a, b, c}, [](Tape& t, const std::vector<Var>& l) {
        const Var cat = risgnn::ad::vcat(l[0], l[1], l[2]);
        return risgnn::ad::total_sum(risgnn::ad::rows(cat, 1, 4));
    });
}

TEST_CASE("nonlinearity gradients match finite differences") {
    Rng rng(8);
    const Mat a = random_mat(rng, 3, 4);
    const Mat pos = random_mat(rng, 3, 4, 0.5, 2.0);
    check_gradients({a}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::softplus(l[0]));
    });
    check_gradients({a}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::exp_(l[0]));
    });
    check_gradients({pos}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::log1p_(l[0]));
    });
    check_gradients({pos}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::sqrt_(l[0]));
    });
    check_gradients({pos}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::inv_(l[0]));
    });
}

TEST_CASE("softplus stays finite and accurate at extreme inputs") {
    Tape tape;
    Mat x(1, 4);
    x << -745.0, -30.0, 30.0, 745.0;
    const Var y = risgnn::ad::softplus(tape.leaf(x));
    const Mat v = tape.value(y);
    CHECK(v(0, 0) >= 0.0);  // underflows toward zero, not NaN
    CHECK(v(0, 0) < 1e-300);
    CHECK(v(0, 1) == doctest::Approx(std::exp(-30.0)).epsilon(1e-9));
    CHECK(v(0, 2) == doctest::Approx(30.0 + std::exp(-30.0)).epsilon(1e-12));
    CHECK(v(0, 3) == 745.0);
    CHECK(v.allFinite());
}

TEST_CASE("clamped log zeroes gradient below the floor") {
    Tape tape;
    Mat x(1, 3);
    x << 0.5, 1e-15, 2.0;
    const double floor = 1e-12;
    const Var vx = tape.leaf(x);
    const Var out = risgnn::ad::total_sum(risgnn::ad::log_clamped(vx, floor));
    CHECK(tape.value(out)(0, 0) ==
          doctest::Approx(std::log(0.5) + std::log(floor) + std::log(2.0)).epsilon(1e-12));
    tape.backward(out);
    CHECK(tape.grad(vx)(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(tape.grad(vx)(0, 1) == 0.0);
    CHECK(tape.grad(vx)(0, 2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("max over inputs takes the earliest winner on ties") {
    Tape tape;
    Mat a(1, 2), b(1, 2);
    a << 2.0, 1.0;
    b << 2.0, 3.0;
    const Var va = tape.leaf(a), vb = tape.leaf(b);
    const Var out = risgnn::ad::total_sum(risgnn::ad::max_list({va, vb}));
    CHECK(tape.value(out)(0, 0) == 5.0);
    tape.backward(out);
    CHECK(tape.grad(va)(0, 0) == 1.0);  // tie: first input wins
    CHECK(tape.grad(vb)(0, 0) == 0.0);
    CHECK(tape.grad(va)(0, 1) == 0.0);
    CHECK(tape.grad(vb)(0, 1) == 1.0);
}

TEST_CASE("max and mean aggregation gradients match finite differences") {
    Rng rng(9);
    const Mat a = random_mat(rng, 2, 3), b = random_mat(rng, 2, 3), c = random_mat(rng, 2, 3);
    // Offsets keep FD away from the nonsmooth tie set.
    check_gradients({a, b, c}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(
            risgnn::ad::max_list({l[0], risgnn::ad::add_scalar(l[1], 3.0), l[2]}));
    });
    check_gradients({a, b, c}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::mean_list({l[0], l[1], l[2]}));
    });
}

TEST_CASE("column and total reductions agree with direct sums") {
    Rng rng(10);
    const Mat a = random_mat(rng, 4, 3);
    Tape tape;
    const Var va = tape.leaf(a);
    const Var cs = risgnn::ad::colsum(va);
    CHECK((tape.value(cs) - a.colwise().sum()).norm() < 1e-14);
    const Var ts = risgnn::ad::total_sum(va);
    CHECK(tape.value(ts)(0, 0) == doctest::Approx(a.sum()).epsilon(1e-14));
    check_gradients({a}, [](Tape& t, const std::vector<Var>& l) {
        return risgnn::ad::total_sum(risgnn::ad::mul(risgnn::ad::colsum(l[0]), risgnn::ad::colsum(l[0])));
    });
}

TEST_CASE("gradients accumulate across re-used nodes") {
    Rng rng(11);
    const Mat a = random_mat(rng, 2, 2, 0.5, 1.5);
    check_gradients({a}, [](Tape& t, const std::vector<Var>& l) {
        const Var sq = risgnn::ad::mul(l[0], l[0]);
        const Var mix = risgnn::ad::add(sq, risgnn::ad::scale(l[0], 3.0));
        return risgnn::ad::total_sum(risgnn::ad::mul(mix, l[0]));
    });
}

TEST_CASE("a deep composite expression differentiates correctly") {
    Rng rng(12);
    const Mat w1 = random_mat(rng, 4, 3), b1 = random_mat(rng, 4, 1);
    const Mat w2 = random_mat(rng, 1, 4), x = random_mat(rng, 3, 5);
    check_gradients({w1, b1, w2, x}, [](Tape& t, const std::vector<Var>& l) {
        const Var h = risgnn::ad::softplus(risgnn::ad::add_colvec(
            risgnn::ad::matmul(l[0], l[3]), l[1]));
        const Var y = risgnn::ad::matmul(l[2], h);
        return risgnn::ad::total_sum(risgnn::ad::mul(y, y));
    }, 1e-5);
}
