// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace risgnn::ad {

using Mat = Eigen::MatrixXd;

class Tape;

// Handle into a tape. Values are matrices; scalars are 1x1, batched row
// quantities are (1 x B), batched node features (width x B).
struct Var {
    Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

// Define-by-run reverse-mode tape. Every op records a closure that scatters
// the output gradient into its parents; backward() replays them in reverse.
class Tape {
  public:
    // Leaf holding data that needs no gradient.
    Var constant(Mat value);
    // Leaf whose gradient is read back after backward() (a parameter).
    Var leaf(Mat value);

    const Mat& value(Var v) const { return nodes_[v.id].value; }
    const Mat& grad(Var v) const { return nodes_[v.id].grad; }

    // Seeds d(out)/d(out) = 1 (out must be 1x1) and runs the tape backwards.
    void backward(Var out);

    void clear();
    std::size_t size() const { return nodes_.size(); }

    // --- op construction (used by the free functions below) ---
    Var make(Mat value, std::function<void(Tape&)> back);
    Mat& grad_ref(int id) { return nodes_[id].grad; }
    const Mat& value_of(int id) const { return nodes_[id].value; }

  private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(Tape&)> back;  // empty for leaves
    };
    std::vector<Node> nodes_;
};

// Elementwise arithmetic (shapes must match).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

// Scalar-by-constant operations.
Var scale(Var a, double c);
Var add_scalar(Var a, double c);

// C = A * B for general matrices.
Var matmul(Var a, Var b);

// out(:,b) = m(:,b) + v, with v a column vector parameter (bias broadcast).
Var add_colvec(Var m, Var v);

// out(:,b) = m(:,b) * s(0,b), with s a (1 x B) row.
Var mul_rowvec(Var m, Var s);

// out(:,b) = m(:,b) + s(0,b).
Var add_rowvec(Var m, Var s);

// out(:,b) = m(:,b) - r(0,b), with r plain data (no gradient), used for
// detached softmax stabilization.
Var sub_rowvec_const(Var m, const Mat& r);

// out.col(b) = mats[b] * x.col(b); per-sample constant matrices.
Var batched_matvec(const std::vector<Mat>& mats, Var x);

// Row-wise concatenation.
Var vcat(Var a, Var b);
Var vcat(Var a, Var b, Var c);

// Row slice [r0, r0+nr).
Var rows(Var a, int r0, int nr);

// Elementwise nonlinearities.
Var softplus(Var a);
Var exp_(Var a);
Var log1p_(Var a);
Var sqrt_(Var a);
Var inv_(Var a);
// log(max(a, floor)); gradient is zero on the clamped region.
Var log_clamped(Var a, double floor);

// Elementwise max over >= 1 inputs; ties resolve to the earliest input.
Var max_list(const std::vector<Var>& xs);
// Elementwise mean over >= 1 inputs.
Var mean_list(const std::vector<Var>& xs);

// Column sums: (r x B) -> (1 x B).
Var colsum(Var a);
// Sum of all entries -> 1x1.
Var total_sum(Var a);

}  // namespace risgnn::ad
