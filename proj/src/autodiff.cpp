// SPDX-License-Identifier: Apache-2.0
#include "risgnn/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace risgnn::ad {

namespace {

void check_same_tape(Var a, Var b) {
    if (a.tape != b.tape) throw std::invalid_argument("autodiff: operands on different tapes");
}

// Id the next node created on the tape will receive.
int next_id(const Tape& t) { return static_cast<int>(t.size()); }

}  // namespace

Var Tape::constant(Mat value) {
    nodes_.push_back(Node{std::move(value), Mat(), nullptr});
    nodes_.back().grad = Mat::Zero(nodes_.back().value.rows(), nodes_.back().value.cols());
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Mat value) { return constant(std::move(value)); }

Var Tape::make(Mat value, std::function<void(Tape&)> back) {
    nodes_.push_back(Node{std::move(value), Mat(), std::move(back)});
    nodes_.back().grad = Mat::Zero(nodes_.back().value.rows(), nodes_.back().value.cols());
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var out) {
    if (!out.valid() || out.tape != this) throw std::invalid_argument("backward: bad output var");
    const Mat& v = nodes_[out.id].value;
    if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("backward: output must be 1x1");
    nodes_[out.id].grad(0, 0) = 1.0;
    for (int i = out.id; i >= 0; --i) {
        if (nodes_[i].back) nodes_[i].back(*this);
    }
}

void Tape::clear() { nodes_.clear(); }

Var add(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    const int ia = a.id, ib = b.id, out = next_id(t);
    return t.make(t.value_of(ia) + t.value_of(ib), [ia, ib, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia) += g;
        tp.grad_ref(ib) += g;
    });
}

Var sub(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    const int ia = a.id, ib = b.id, out = next_id(t);
    return t.make(t.value_of(ia) - t.value_of(ib), [ia, ib, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia) += g;
        tp.grad_ref(ib) -= g;
    });
}

Var mul(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    const int ia = a.id, ib = b.id, out = next_id(t);
    return t.make(t.value_of(ia).cwiseProduct(t.value_of(ib)), [ia, ib, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia) += g.cwiseProduct(tp.value_of(ib));
        tp.grad_ref(ib) += g.cwiseProduct(tp.value_of(ia));
    });
}

Var scale(Var a, double c) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    return t.make(c * t.value_of(ia),
                  [ia, c, out](Tape& tp) { tp.grad_ref(ia) += c * tp.grad_ref(out); });
}

Var add_scalar(Var a, double c) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat v = t.value_of(ia).array() + c;
    return t.make(std::move(v), [ia, out](Tape& tp) { tp.grad_ref(ia) += tp.grad_ref(out); });
}

Var matmul(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    const int ia = a.id, ib = b.id, out = next_id(t);
    if (t.value_of(ia).cols() != t.value_of(ib).rows())
        throw std::invalid_argument("matmul: inner dimensions disagree");
    return t.make(t.value_of(ia) * t.value_of(ib), [ia, ib, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia).noalias() += g * tp.value_of(ib).transpose();
        tp.grad_ref(ib).noalias() += tp.value_of(ia).transpose() * g;
    });
}

Var add_colvec(Var m, Var v) {
    check_same_tape(m, v);
    Tape& t = *m.tape;
    const int im = m.id, iv = v.id, out = next_id(t);
    if (t.value_of(iv).cols() != 1 || t.value_of(iv).rows() != t.value_of(im).rows())
        throw std::invalid_argument("add_colvec: bias shape mismatch");
    Mat val = t.value_of(im).colwise() + Eigen::VectorXd(t.value_of(iv).col(0));
    return t.make(std::move(val), [im, iv, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(im) += g;
        tp.grad_ref(iv) += g.rowwise().sum();
    });
}

Var mul_rowvec(Var m, Var s) {
    check_same_tape(m, s);
    Tape& t = *m.tape;
    const int im = m.id, is = s.id, out = next_id(t);
    if (t.value_of(is).rows() != 1 || t.value_of(is).cols() != t.value_of(im).cols())
        throw std::invalid_argument("mul_rowvec: row shape mismatch");
    Mat val = t.value_of(im).array().rowwise() * t.value_of(is).row(0).array();
    return t.make(std::move(val), [im, is, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(im).array() += g.array().rowwise() * tp.value_of(is).row(0).array();
        tp.grad_ref(is) += g.cwiseProduct(tp.value_of(im)).colwise().sum();
    });
}

Var add_rowvec(Var m, Var s) {
    check_same_tape(m, s);
    Tape& t = *m.tape;
    const int im = m.id, is = s.id, out = next_id(t);
    if (t.value_of(is).rows() != 1 || t.value_of(is).cols() != t.value_of(im).cols())
        throw std::invalid_argument("add_rowvec: row shape mismatch");
    Mat val = t.value_of(im).array().rowwise() + t.value_of(is).row(0).array();
    return t.make(std::move(val), [im, is, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(im) += g;
        tp.grad_ref(is) += g.colwise().sum();
    });
}

Var sub_rowvec_const(Var m, const Mat& rv) {
    Tape& t = *m.tape;
    const int im = m.id, out = next_id(t);
    if (rv.rows() != 1 || rv.cols() != t.value_of(im).cols())
        throw std::invalid_argument("sub_rowvec_const: row shape mismatch");
    Mat val = t.value_of(im).array().rowwise() - rv.row(0).array();
    return t.make(std::move(val), [im, out](Tape& tp) { tp.grad_ref(im) += tp.grad_ref(out); });
}

Var batched_matvec(const std::vector<Mat>& mats, Var x) {
    Tape& t = *x.tape;
    const int ix = x.id, out = next_id(t);
    const Mat& xv = t.value_of(ix);
    if (static_cast<int>(mats.size()) != xv.cols())
        throw std::invalid_argument("batched_matvec: one matrix per column required");
    const Eigen::Index rows = mats.empty() ? 0 : mats.front().rows();
    Mat val(rows, xv.cols());
    for (Eigen::Index b = 0; b < xv.cols(); ++b) {
        if (mats[b].cols() != xv.rows()) throw std::invalid_argument("batched_matvec: shape mismatch");
        val.col(b).noalias() = mats[b] * xv.col(b);
    }
    // The matrices are shared batch inputs that outlive the tape pass.
    const std::vector<Mat>* mp = &mats;
    return t.make(std::move(val), [ix, mp, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        Mat& gx = tp.grad_ref(ix);
        for (Eigen::Index b = 0; b < g.cols(); ++b)
            gx.col(b).noalias() += (*mp)[b].transpose() * g.col(b);
    });
}

Var vcat(Var a, Var b) {
    check_same_tape(a, b);
    Tape& t = *a.tape;
    const int ia = a.id, ib = b.id, out = next_id(t);
    const Mat& av = t.value_of(ia);
    const Mat& bv = t.value_of(ib);
    if (av.cols() != bv.cols()) throw std::invalid_argument("vcat: column counts disagree");
    Mat val(av.rows() + bv.rows(), av.cols());
    val.topRows(av.rows()) = av;
    val.bottomRows(bv.rows()) = bv;
    const int ra = static_cast<int>(av.rows());
    const int rb = static_cast<int>(bv.rows());
    return t.make(std::move(val), [ia, ib, ra, rb, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia) += g.topRows(ra);
        tp.grad_ref(ib) += g.middleRows(ra, rb);
    });
}

Var vcat(Var a, Var b, Var c) { return vcat(vcat(a, b), c); }

Var rows(Var a, int r0, int nr) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    const Mat& av = t.value_of(ia);
    if (r0 < 0 || nr < 0 || r0 + nr > av.rows()) throw std::invalid_argument("rows: slice out of range");
    Mat val = av.middleRows(r0, nr);
    return t.make(std::move(val), [ia, r0, nr, out](Tape& tp) {
        tp.grad_ref(ia).middleRows(r0, nr) += tp.grad_ref(out);
    });
}

Var softplus(Var a) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    // Stable evaluation: max(x, 0) + log1p(exp(-|x|)).
    Mat val = t.value_of(ia).unaryExpr(
        [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
    return t.make(std::move(val), [ia, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        const Mat sig = tp.value_of(ia).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
        tp.grad_ref(ia) += g.cwiseProduct(sig);
    });
}

Var exp_(Var a) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat val = t.value_of(ia).array().exp();
    return t.make(std::move(val), [ia, out](Tape& tp) {
        tp.grad_ref(ia) += tp.grad_ref(out).cwiseProduct(tp.value_of(out));
    });
}

Var log1p_(Var a) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat val = t.value_of(ia).unaryExpr([](double x) { return std::log1p(x); });
    return t.make(std::move(val), [ia, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia).array() += g.array() / (1.0 + tp.value_of(ia).array());
    });
}

Var sqrt_(Var a) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat val = t.value_of(ia).array().sqrt();
    return t.make(std::move(val), [ia, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia).array() += 0.5 * g.array() / tp.value_of(out).array();
    });
}

Var inv_(Var a) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat val = t.value_of(ia).cwiseInverse();
    return t.make(std::move(val), [ia, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        const Mat& v = tp.value_of(out);
        tp.grad_ref(ia).array() -= g.array() * v.array() * v.array();
    });
}

Var log_clamped(Var a, double floor) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat val = t.value_of(ia).unaryExpr([floor](double x) { return std::log(std::max(x, floor)); });
    return t.make(std::move(val), [ia, floor, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        const Mat& x = tp.value_of(ia);
        Mat& gx = tp.grad_ref(ia);
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                if (x(i, j) > floor) gx(i, j) += g(i, j) / x(i, j);
    });
}

Var max_list(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("max_list: empty input");
    Tape& t = *xs.front().tape;
    std::vector<int> ids;
    ids.reserve(xs.size());
    for (Var x : xs) {
        check_same_tape(x, xs.front());
        ids.push_back(x.id);
    }
    Mat val = t.value_of(ids[0]);
    Eigen::MatrixXi which = Eigen::MatrixXi::Zero(val.rows(), val.cols());
    for (std::size_t n = 1; n < ids.size(); ++n) {
        const Mat& v = t.value_of(ids[n]);
        if (v.rows() != val.rows() || v.cols() != val.cols())
            throw std::invalid_argument("max_list: shape mismatch");
        for (Eigen::Index j = 0; j < val.cols(); ++j)
            for (Eigen::Index i = 0; i < val.rows(); ++i)
                if (v(i, j) > val(i, j)) {
                    val(i, j) = v(i, j);
                    which(i, j) = static_cast<int>(n);
                }
    }
    const int out = next_id(t);
    return t.make(std::move(val), [ids, which, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            for (Eigen::Index i = 0; i < g.rows(); ++i) tp.grad_ref(ids[which(i, j)])(i, j) += g(i, j);
    });
}

Var mean_list(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_list: empty input");
    Tape& t = *xs.front().tape;
    std::vector<int> ids;
    ids.reserve(xs.size());
    for (Var x : xs) {
        check_same_tape(x, xs.front());
        ids.push_back(x.id);
    }
    Mat val = t.value_of(ids[0]);
    for (std::size_t n = 1; n < ids.size(); ++n) val += t.value_of(ids[n]);
    val /= static_cast<double>(ids.size());
    const double w = 1.0 / static_cast<double>(ids.size());
    const int out = next_id(t);
    return t.make(std::move(val), [ids, w, out](Tape& tp) {
        const Mat g = w * tp.grad_ref(out);
        for (int id : ids) tp.grad_ref(id) += g;
    });
}

Var colsum(Var a) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat val = t.value_of(ia).colwise().sum();
    return t.make(std::move(val), [ia, out](Tape& tp) {
        const Mat& g = tp.grad_ref(out);
        tp.grad_ref(ia).array().rowwise() += g.row(0).array();
    });
}

Var total_sum(Var a) {
    Tape& t = *a.tape;
    const int ia = a.id, out = next_id(t);
    Mat val(1, 1);
    val(0, 0) = t.value_of(ia).sum();
    return t.make(std::move(val), [ia, out](Tape& tp) {
        tp.grad_ref(ia).array() += tp.grad_ref(out)(0, 0);
    });
}

}  // namespace risgnn::ad
