#pragma once

// Recurrent layer kernels shared by training (double) and the fast
// inference / sensitivity paths (float or double). Sequences are time-major:
// column t * batch + b is step t of sequence b.

#include <Eigen/Core>

#include "msurr/surrogate/network.hpp"

namespace msurr::surrogate::detail {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Arr = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& a) {
  using S = typename Derived::Scalar;
  return (S(1) + (-a).exp()).inverse();
}

template <class S>
using LayerState = RecurrentState<S>;

/// Run the recurrence over `steps`; `st.gates` must hold the input projection.
template <class S, class UM>
void forward_recurrent(CellType cell, const UM& u, int steps, LayerState<S>& st) {
  const Eigen::Index cols = st.gates.cols();
  const Eigen::Index batch = cols / steps;
  const Eigen::Index h = u.cols();
  st.hidden.resize(h, cols);
  if (cell == CellType::Lstm) {
    st.cell.resize(h, cols);
    st.cell_tanh.resize(h, cols);
    for (int t = 0; t < steps; ++t) {
      auto a = st.gates.middleCols(t * batch, batch);
      if (t > 0) a.noalias() += u * st.hidden.middleCols((t - 1) * batch, batch);
      a.topRows(2 * h) = sigmoid(a.topRows(2 * h).array()).matrix();
      a.middleRows(2 * h, h) = a.middleRows(2 * h, h).array().tanh().matrix();
      a.bottomRows(h) = sigmoid(a.bottomRows(h).array()).matrix();
      auto c = st.cell.middleCols(t * batch, batch).array();
      c = a.topRows(h).array() * a.middleRows(2 * h, h).array();
      if (t > 0) c += a.middleRows(h, h).array() * st.cell.middleCols((t - 1) * batch, batch).array();
      st.cell_tanh.middleCols(t * batch, batch) = c.tanh().matrix();
      st.hidden.middleCols(t * batch, batch) =
          (a.bottomRows(h).array() * st.cell_tanh.middleCols(t * batch, batch).array()).matrix();
    }
  } else {
    st.rec_n = Mat<S>::Zero(h, cols);
    Mat<S> r = Mat<S>::Zero(3 * h, batch);
    for (int t = 0; t < steps; ++t) {
      auto a = st.gates.middleCols(t * batch, batch);
      if (t > 0) r.noalias() = u * st.hidden.middleCols((t - 1) * batch, batch);
      a.topRows(2 * h) = sigmoid(a.topRows(2 * h).array() + r.topRows(2 * h).array()).matrix();
      st.rec_n.middleCols(t * batch, batch) = r.bottomRows(h);
      a.bottomRows(h) =
          (a.bottomRows(h).array() + a.middleRows(h, h).array() * r.bottomRows(h).array()).tanh().matrix();
      auto out = st.hidden.middleCols(t * batch, batch).array();
      const auto z = a.topRows(h).array();
      out = (S(1) - z) * a.bottomRows(h).array();
      if (t > 0) out += z * st.hidden.middleCols((t - 1) * batch, batch).array();
    }
  }
}

/// Reverse pass through the recurrence. Returns dL/d(input projection);
/// adds dL/dU into `grad_u` when non-null.
template <class S, class UM>
Mat<S> backward_recurrent(CellType cell, const UM& u, const LayerState<S>& st, const Mat<S>& d_hidden, int steps,
                          Eigen::Map<Mat<S>>* grad_u) {
  const Eigen::Index cols = st.gates.cols();
  const Eigen::Index batch = cols / steps;
  const Eigen::Index h = u.cols();
  const Eigen::Index g = u.rows();
  Mat<S> dz(g, cols);
  Mat<S> dh_next = Mat<S>::Zero(h, batch);
  if (cell == CellType::Lstm) {
    Mat<S> dc_next = Mat<S>::Zero(h, batch);
    for (int t = steps - 1; t >= 0; --t) {
      const Eigen::Index at = t * batch;
      const auto a = st.gates.middleCols(at, batch);
      const auto i = a.topRows(h).array();
      const auto f = a.middleRows(h, h).array();
      const auto gg = a.middleRows(2 * h, h).array();
      const auto o = a.bottomRows(h).array();
      const auto tc = st.cell_tanh.middleCols(at, batch).array();
      const Arr<S> dh = d_hidden.middleCols(at, batch).array() + dh_next.array();
      const Arr<S> dc = dh * o * (S(1) - tc.square()) + dc_next.array();
      auto d = dz.middleCols(at, batch);
      d.topRows(h) = (dc * gg * i * (S(1) - i)).matrix();
      if (t > 0) {
        d.middleRows(h, h) = (dc * st.cell.middleCols(at - batch, batch).array() * f * (S(1) - f)).matrix();
      } else {
        d.middleRows(h, h).setZero();
      }
      d.middleRows(2 * h, h) = (dc * i * (S(1) - gg.square())).matrix();
      d.bottomRows(h) = (dh * tc * o * (S(1) - o)).matrix();
      dc_next = (dc * f).matrix();
      if (t > 0) dh_next.noalias() = u.transpose() * d;
    }
    if (grad_u && steps > 1) {
      grad_u->noalias() += dz.rightCols(cols - batch) * st.hidden.leftCols(cols - batch).transpose();
    }
  } else {
    Mat<S> dr(g, cols);
    for (int t = steps - 1; t >= 0; --t) {
      const Eigen::Index at = t * batch;
      const auto a = st.gates.middleCols(at, batch);
      const auto z = a.topRows(h).array();
      const auto r = a.middleRows(h, h).array();
      const auto n = a.bottomRows(h).array();
      const Arr<S> dh = d_hidden.middleCols(at, batch).array() + dh_next.array();
      Arr<S> hprev = Arr<S>::Zero(h, batch);
      if (t > 0) hprev = st.hidden.middleCols(at - batch, batch).array();
      const Arr<S> dn = dh * (S(1) - z) * (S(1) - n.square());
      auto d = dz.middleCols(at, batch);
      d.topRows(h) = (dh * (hprev - n) * z * (S(1) - z)).matrix();
      d.middleRows(h, h) = (dn * st.rec_n.middleCols(at, batch).array() * r * (S(1) - r)).matrix();
      d.bottomRows(h) = dn.matrix();
      auto drt = dr.middleCols(at, batch);
      drt.topRows(2 * h) = d.topRows(2 * h);
      drt.bottomRows(h) = (dn * r).matrix();
      dh_next = (dh * z).matrix();
      if (t > 0) dh_next.noalias() += u.transpose() * drt;
    }
    if (grad_u && steps > 1) {
      grad_u->noalias() += dr.rightCols(cols - batch) * st.hidden.leftCols(cols - batch).transpose();
    }
  }
  return dz;
}

/// Inference-only pass of one layer (no caches kept beyond the hidden states).
template <class S, class WM, class UM, class BM>
Mat<S> run_layer(CellType cell, const WM& w, const UM& u, const BM& b, const Mat<S>& x, int steps) {
  LayerState<S> st;
  st.gates.noalias() = w * x;
  st.gates.colwise() += b.col(0);
  forward_recurrent<S>(cell, u, steps, st);
  return std::move(st.hidden);
}

template <class S, class WM, class BM>
Mat<S> run_head(const WM& wd, const BM& bd, const Mat<S>& h) {
  Mat<S> pre = wd * h;
  pre.colwise() += bd.col(0);
  return sigmoid(pre.array()).matrix();
}

}  // namespace msurr::surrogate::detail
