#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flowloc::ad {

using Mat = Eigen::MatrixXd;

/// Minimal reverse-mode tape over dense matrices. One tape per forward pass;
/// ops append nodes and backward() replays them in reverse.
class Tape {
 public:
  int input(Mat v, bool requires_grad = false) {
    nodes_.push_back({std::move(v), {}, nullptr, requires_grad});
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Mat& value(int id) const { return nodes_[id].value; }

  Mat& grad(int id) {
    auto& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  int matmul(int a, int b) {
    Mat v = nodes_[a].value * nodes_[b].value;
    return emit(std::move(v), [this, a, b](const Mat& g) {
      grad(a) += g * nodes_[b].value.transpose();
      grad(b) += nodes_[a].value.transpose() * g;
    });
  }

  int add(int a, int b) {
    Mat v = nodes_[a].value + nodes_[b].value;
    return emit(std::move(v), [this, a, b](const Mat& g) {
      grad(a) += g;
      grad(b) += g;
    });
  }

  /// Broadcast a 1 x d bias over every row.
  int add_rowvec(int a, int bias) {
    Mat v = nodes_[a].value.rowwise() + nodes_[bias].value.row(0);
    return emit(std::move(v), [this, a, bias](const Mat& g) {
      grad(a) += g;
      grad(bias) += g.colwise().sum();
    });
  }

  int scale(int a, double s) {
    Mat v = nodes_[a].value * s;
    return emit(std::move(v), [this, a, s](const Mat& g) { grad(a) += g * s; });
  }

  int relu(int a) {
    Mat v = nodes_[a].value.cwiseMax(0.0);
    return emit(std::move(v), [this, a](const Mat& g) {
      grad(a) += (nodes_[a].value.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
    });
  }

  int leaky_relu(int a, double alpha) {
    const Mat& x = nodes_[a].value;
    Mat v = x.array().max(x.array() * alpha).matrix();
    return emit(std::move(v), [this, a, alpha](const Mat& g) {
      Mat mask = (nodes_[a].value.array() > 0.0).cast<double>().matrix();
      grad(a) += g.cwiseProduct(mask + (Mat::Ones(mask.rows(), mask.cols()) - mask) * alpha);
    });
  }

  int sigmoid(int a) {
    Mat v = (1.0 / (1.0 + (-nodes_[a].value.array()).exp())).matrix();
    const int out = emit(Mat(v), [this, a](const Mat& g) {
      const Mat& y = nodes_[last_emitted_].value;
      grad(a) += g.cwiseProduct(y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y));
    });
    return out;
  }

  int gather_rows(int a, std::vector<int> idx) {
    const Mat& x = nodes_[a].value;
    Mat v(static_cast<long>(idx.size()), x.cols());
    for (size_t i = 0; i < idx.size(); ++i) v.row(static_cast<long>(i)) = x.row(idx[i]);
    return emit(std::move(v), [this, a, idx = std::move(idx)](const Mat& g) {
      Mat& ga = grad(a);
      for (size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<long>(i));
    });
  }

  /// out[idx[i]] += a[i]; output has out_rows rows.
  int scatter_add_rows(int a, std::vector<int> idx, long out_rows) {
    const Mat& x = nodes_[a].value;
    Mat v = Mat::Zero(out_rows, x.cols());
    for (size_t i = 0; i < idx.size(); ++i) v.row(idx[i]) += x.row(static_cast<long>(i));
    return emit(std::move(v), [this, a, idx = std::move(idx)](const Mat& g) {
      Mat& ga = grad(a);
      for (size_t i = 0; i < idx.size(); ++i) ga.row(static_cast<long>(i)) += g.row(idx[i]);
    });
  }

  /// Row-wise scaling by a learnable n x 1 column.
  int mul_colvec(int a, int col) {
    const Mat& x = nodes_[a].value;
    const Mat& c = nodes_[col].value;
    Mat v = (x.array().colwise() * c.col(0).array()).matrix();
    return emit(std::move(v), [this, a, col](const Mat& g) {
      const Mat& x2 = nodes_[a].value;
      const Mat& c2 = nodes_[col].value;
      grad(a) += (g.array().colwise() * c2.col(0).array()).matrix();
      grad(col).col(0) += g.cwiseProduct(x2).rowwise().sum();
    });
  }

  /// Row-wise scaling by constants (degree norms, probability weights).
  int scale_rows(int a, std::vector<double> coeff) {
    const Mat& x = nodes_[a].value;
    Mat v(x.rows(), x.cols());
    for (long i = 0; i < x.rows(); ++i) v.row(i) = x.row(i) * coeff[static_cast<size_t>(i)];
    return emit(std::move(v), [this, a, coeff = std::move(coeff)](const Mat& g) {
      Mat& ga = grad(a);
      for (long i = 0; i < g.rows(); ++i) ga.row(i) += g.row(i) * coeff[static_cast<size_t>(i)];
    });
  }

  /// Per-row dot product of two n x d matrices -> n x 1.
  int rows_dot(int a, int b) {
    Mat v = nodes_[a].value.cwiseProduct(nodes_[b].value).rowwise().sum();
    return emit(std::move(v), [this, a, b](const Mat& g) {
      grad(a) += (nodes_[b].value.array().colwise() * g.col(0).array()).matrix();
      grad(b) += (nodes_[a].value.array().colwise() * g.col(0).array()).matrix();
    });
  }

  /// Softmax over an n x 1 logits column within groups (e.g. incoming edges
  /// of each destination node).
  int segment_softmax(int logits, std::vector<int> groups, int n_groups) {
    const Mat& x = nodes_[logits].value;
    const long n = x.rows();
    std::vector<double> gmax(static_cast<size_t>(n_groups),
                             -std::numeric_limits<double>::infinity());
    for (long i = 0; i < n; ++i)
      gmax[groups[static_cast<size_t>(i)]] = std::max(gmax[groups[static_cast<size_t>(i)]], x(i, 0));
    std::vector<double> gsum(static_cast<size_t>(n_groups), 0.0);
    Mat v(n, 1);
    for (long i = 0; i < n; ++i) {
      v(i, 0) = std::exp(x(i, 0) - gmax[groups[static_cast<size_t>(i)]]);
      gsum[groups[static_cast<size_t>(i)]] += v(i, 0);
    }
    for (long i = 0; i < n; ++i) v(i, 0) /= gsum[groups[static_cast<size_t>(i)]];
    const int out = emit(Mat(v), [this, logits, groups = std::move(groups), n_groups](const Mat& g) {
      const Mat& y = nodes_[last_emitted_].value;
      std::vector<double> dot(static_cast<size_t>(n_groups), 0.0);
      for (long i = 0; i < g.rows(); ++i)
        dot[groups[static_cast<size_t>(i)]] += y(i, 0) * g(i, 0);
      Mat& gl = grad(logits);
      for (long i = 0; i < g.rows(); ++i)
        gl(i, 0) += y(i, 0) * (g(i, 0) - dot[groups[static_cast<size_t>(i)]]);
    });
    return out;
  }

  int concat_cols(const std::vector<int>& parts) {
    long cols = 0;
    const long rows = nodes_[parts[0]].value.rows();
    for (int p : parts) cols += nodes_[p].value.cols();
    Mat v(rows, cols);
    long off = 0;
    for (int p : parts) {
      v.middleCols(off, nodes_[p].value.cols()) = nodes_[p].value;
      off += nodes_[p].value.cols();
    }
    return emit(std::move(v), [this, parts](const Mat& g) {
      long o = 0;
      for (int p : parts) {
        grad(p) += g.middleCols(o, nodes_[p].value.cols());
        o += nodes_[p].value.cols();
      }
    });
  }

  int slice_cols(int a, long start, long count) {
    Mat v = nodes_[a].value.middleCols(start, count);
    return emit(std::move(v), [this, a, start, count](const Mat& g) {
      grad(a).middleCols(start, count) += g;
    });
  }

  int slice_rows(int a, long start, long count) {
    Mat v = nodes_[a].value.middleRows(start, count);
    return emit(std::move(v), [this, a, start, count](const Mat& g) {
      grad(a).middleRows(start, count) += g;
    });
  }

  /// Numerically stable mean binary cross-entropy of logits against a
  /// constant 0/1 target column: mean(softplus(l) - t*l). Returns a 1x1 node.
  int bce_with_logits(int logits, const Eigen::VectorXd& target) {
    const Mat& l = nodes_[logits].value;
    if (l.cols() != 1 || l.rows() != target.size())
      throw std::invalid_argument("bce_with_logits: shape mismatch");
    double loss = 0.0;
    for (long i = 0; i < l.rows(); ++i) {
      const double x = l(i, 0);
      const double softplus = x > 30.0 ? x : std::log1p(std::exp(x));
      loss += softplus - target(i) * x;
    }
    loss /= static_cast<double>(l.rows());
    Mat v(1, 1);
    v(0, 0) = loss;
    return emit(std::move(v), [this, logits, target](const Mat& g) {
      const Mat& l2 = nodes_[logits].value;
      const double s = g(0, 0) / static_cast<double>(l2.rows());
      Mat& gl = grad(logits);
      for (long i = 0; i < l2.rows(); ++i) {
        const double sig = 1.0 / (1.0 + std::exp(-l2(i, 0)));
        gl(i, 0) += s * (sig - target(i));
      }
    });
  }

  void backward(int loss_id) {
    if (nodes_[loss_id].value.size() != 1)
      throw std::invalid_argument("backward: loss must be a scalar node");
    grad(loss_id).setConstant(1.0);
    for (int i = loss_id; i >= 0; --i) {
      auto& n = nodes_[i];
      if (n.backward && n.grad.size() != 0) {
        last_emitted_ = i;
        n.backward(n.grad);
      }
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(const Mat&)> backward;
    bool requires_grad = false;
  };

  int emit(Mat v, std::function<void(const Mat&)> bw) {
    nodes_.push_back({std::move(v), {}, std::move(bw), true});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  int last_emitted_ = -1;  // set during backward so self-referencing ops can read their output
};

}  // namespace flowloc::ad
