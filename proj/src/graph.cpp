#include "graph.hpp"

#include <cmath>
#include <utility>

#include "errors.hpp"

namespace must {

namespace {
constexpr double kNormFloor = 1e-12;
}

NodeId Graph::push(Tensor value, std::function<void(Graph&, NodeId)> back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(Tensor v) { return push(std::move(v), {}); }

NodeId Graph::input_view(const Tensor* v) {
  Node n;
  n.view = v;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::param(Param* p) {
  Node n;
  n.view = &p->value;
  n.bound = p;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::linear(NodeId x, NodeId w, NodeId b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  const size_t bsz = xv.rows(), m = xv.cols(), nn = wv.cols();
  if (wv.rows() != m) fail(Errc::shape, "linear: x cols != W rows");
  if (bv.numel() != nn) fail(Errc::shape, "linear: bias length != W cols");

  Tensor out(bsz, nn);
  for (size_t i = 0; i < bsz; ++i) {
    for (size_t k = 0; k < m; ++k) {
      const double xik = xv.at(i, k);
      if (xik == 0.0) continue;
      for (size_t j = 0; j < nn; ++j) out.at(i, j) += xik * wv.at(k, j);
    }
    for (size_t j = 0; j < nn; ++j) out.at(i, j) += bv[j];
  }

  return push(std::move(out), [x, w, b, bsz, m, nn](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    const Tensor& xv = g.value(x);
    const Tensor& wv = g.value(w);
    Tensor& gx = g.grad_ref(x);
    Tensor& gw = g.grad_ref(w);
    Tensor& gb = g.grad_ref(b);
    for (size_t i = 0; i < bsz; ++i) {
      for (size_t j = 0; j < nn; ++j) {
        const double gij = go.at(i, j);
        if (gij == 0.0) continue;
        gb[j] += gij;
        for (size_t k = 0; k < m; ++k) {
          gx.at(i, k) += gij * wv.at(k, j);
          gw.at(k, j) += gij * xv.at(i, k);
        }
      }
    }
  });
}

NodeId Graph::relu(NodeId x) {
  const Tensor& xv = value(x);
  Tensor out = xv;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), [x](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_ref(x);
    // Subgradient at exactly 0 is 0.
    for (size_t i = 0; i < xv.numel(); ++i) {
      if (xv[i] > 0.0) gx[i] += go[i];
    }
  });
}

NodeId Graph::cosine_rows(NodeId h, NodeId p) {
  const Tensor& hv = value(h);
  const Tensor& pv = value(p);
  if (hv.cols() != pv.cols()) fail(Errc::shape, "cosine_rows: inner dims differ");
  const size_t bsz = hv.rows(), c = pv.rows(), k = hv.cols();

  std::vector<double> hn(bsz), pn(c);
  for (size_t i = 0; i < bsz; ++i) {
    double s = 0;
    for (size_t d = 0; d < k; ++d) s += hv.at(i, d) * hv.at(i, d);
    hn[i] = std::sqrt(s);
    if (hn[i] < kNormFloor) fail(Errc::degenerate_vector, "cosine_rows: left row " + std::to_string(i) + " has near-zero norm");
  }
  for (size_t j = 0; j < c; ++j) {
    double s = 0;
    for (size_t d = 0; d < k; ++d) s += pv.at(j, d) * pv.at(j, d);
    pn[j] = std::sqrt(s);
    if (pn[j] < kNormFloor) fail(Errc::degenerate_vector, "cosine_rows: right row " + std::to_string(j) + " has near-zero norm");
  }

  Tensor out(bsz, c);
  for (size_t i = 0; i < bsz; ++i) {
    for (size_t j = 0; j < c; ++j) {
      double dot = 0;
      for (size_t d = 0; d < k; ++d) dot += hv.at(i, d) * pv.at(j, d);
      out.at(i, j) = dot / (hn[i] * pn[j]);
    }
  }

  return push(std::move(out),
              [h, p, bsz, c, k, hn = std::move(hn), pn = std::move(pn)](Graph& g, NodeId self) {
                const Tensor& go = g.grad_ref(self);
                const Tensor& ov = g.value(self);
                const Tensor& hv = g.value(h);
                const Tensor& pv = g.value(p);
                Tensor& gh = g.grad_ref(h);
                Tensor& gp = g.grad_ref(p);
                for (size_t i = 0; i < bsz; ++i) {
                  for (size_t j = 0; j < c; ++j) {
                    const double gij = go.at(i, j);
                    if (gij == 0.0) continue;
                    const double cosij = ov.at(i, j);
                    const double inv = 1.0 / (hn[i] * pn[j]);
                    for (size_t d = 0; d < k; ++d) {
                      gh.at(i, d) += gij * (pv.at(j, d) * inv - cosij * hv.at(i, d) / (hn[i] * hn[i]));
                      gp.at(j, d) += gij * (hv.at(i, d) * inv - cosij * pv.at(j, d) / (pn[j] * pn[j]));
                    }
                  }
                }
              });
}

NodeId Graph::log_softmax_rows(NodeId s, double temperature) {
  if (!(temperature > 0.0)) fail(Errc::config, "log_softmax temperature must be positive");
  const Tensor& sv = value(s);
  const size_t bsz = sv.rows(), c = sv.cols();
  Tensor out(bsz, c);
  for (size_t i = 0; i < bsz; ++i) {
    double mx = -1e300;
    for (size_t j = 0; j < c; ++j) mx = std::max(mx, sv.at(i, j) / temperature);
    double lse = 0;
    for (size_t j = 0; j < c; ++j) lse += std::exp(sv.at(i, j) / temperature - mx);
    lse = mx + std::log(lse);
    for (size_t j = 0; j < c; ++j) out.at(i, j) = sv.at(i, j) / temperature - lse;
  }
  return push(std::move(out), [s, bsz, c, temperature](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    const Tensor& ov = g.value(self);
    Tensor& gs = g.grad_ref(s);
    for (size_t i = 0; i < bsz; ++i) {
      double gsum = 0;
      for (size_t j = 0; j < c; ++j) gsum += go.at(i, j);
      for (size_t j = 0; j < c; ++j) {
        gs.at(i, j) += (go.at(i, j) - std::exp(ov.at(i, j)) * gsum) / temperature;
      }
    }
  });
}

NodeId Graph::gather_cols(NodeId m, std::vector<int32_t> cols) {
  const Tensor& mv = value(m);
  if (cols.size() != mv.rows()) fail(Errc::shape, "gather_cols: one index per row required");
  Tensor out(cols.size());
  for (size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] < 0 || static_cast<size_t>(cols[i]) >= mv.cols()) {
      fail(Errc::shape, "gather_cols: index out of range");
    }
    out[i] = mv.at(i, cols[i]);
  }
  return push(std::move(out), [m, cols = std::move(cols)](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    Tensor& gm = g.grad_ref(m);
    for (size_t i = 0; i < cols.size(); ++i) gm.at(i, cols[i]) += go[i];
  });
}

NodeId Graph::affine(NodeId x, double scale, double shift) {
  Tensor out = value(x);
  for (double& v : out.data()) v = scale * v + shift;
  return push(std::move(out), [x, scale](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    Tensor& gx = g.grad_ref(x);
    for (size_t i = 0; i < go.numel(); ++i) gx[i] += scale * go[i];
  });
}

NodeId Graph::clamp01(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return push(std::move(out), [x](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_ref(x);
    for (size_t i = 0; i < xv.numel(); ++i) {
      if (xv[i] > 0.0 && xv[i] < 1.0) gx[i] += go[i];
    }
  });
}

NodeId Graph::pow_const(NodeId x, double exponent) {
  const Tensor& xv = value(x);
  Tensor out = xv;
  if (exponent == 0.0) {
    out.fill(1.0);
  } else {
    for (double& v : out.data()) v = std::pow(v, exponent);
  }
  return push(std::move(out), [x, exponent](Graph& g, NodeId self) {
    if (exponent == 0.0) return;
    const Tensor& go = g.grad_ref(self);
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_ref(x);
    for (size_t i = 0; i < xv.numel(); ++i) {
      double d;
      if (xv[i] == 0.0) {
        // x^e has an unbounded derivative at 0 for e < 1; pin it to keep
        // gradients finite (the bases here are clamped weights).
        d = exponent == 1.0 ? 1.0 : 0.0;
      } else {
        d = exponent * std::pow(xv[i], exponent - 1.0);
      }
      gx[i] += d * go[i];
    }
  });
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  return push(std::move(out), [a, b](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    Tensor& ga = g.grad_ref(a);
    Tensor& gb = g.grad_ref(b);
    for (size_t i = 0; i < go.numel(); ++i) {
      ga[i] += go[i] * bv[i];
      gb[i] += go[i] * av[i];
    }
  });
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (size_t i = 0; i < out.numel(); ++i) out[i] += bv[i];
  return push(std::move(out), [a, b](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    Tensor& ga = g.grad_ref(a);
    Tensor& gb = g.grad_ref(b);
    for (size_t i = 0; i < go.numel(); ++i) {
      ga[i] += go[i];
      gb[i] += go[i];
    }
  });
}

NodeId Graph::exp(NodeId x) {
  Tensor out = value(x);
  for (double& v : out.data()) v = std::exp(v);
  return push(std::move(out), [x](Graph& g, NodeId self) {
    const Tensor& go = g.grad_ref(self);
    const Tensor& ov = g.value(self);
    Tensor& gx = g.grad_ref(x);
    for (size_t i = 0; i < go.numel(); ++i) gx[i] += go[i] * ov[i];
  });
}

NodeId Graph::detach(NodeId x) {
  Tensor out = value(x);
  return push(std::move(out), {});
}

NodeId Graph::mean_all(NodeId x) {
  const Tensor& xv = value(x);
  if (xv.numel() == 0) fail(Errc::shape, "mean_all: empty tensor");
  double s = 0;
  for (size_t i = 0; i < xv.numel(); ++i) s += xv[i];
  Tensor out(static_cast<size_t>(1));
  out[0] = s / static_cast<double>(xv.numel());
  return push(std::move(out), [x](Graph& g, NodeId self) {
    const double go = g.grad_ref(self)[0];
    const Tensor& xv = g.value(x);
    Tensor& gx = g.grad_ref(x);
    const double w = go / static_cast<double>(xv.numel());
    for (size_t i = 0; i < gx.numel(); ++i) gx[i] += w;
  });
}

void Graph::backward(NodeId root) {
  if (root < 0 || static_cast<size_t>(root) >= nodes_.size()) fail(Errc::shape, "backward: bad root");
  if (value(root).numel() != 1) fail(Errc::shape, "backward: root must be scalar");
  for (NodeId i = 0; i <= root; ++i) {
    nodes_[i].grad = nodes_[i].val().zeros_like();
  }
  nodes_[root].grad.fill(1.0);
  for (NodeId i = root; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this, i);
  }
  for (NodeId i = 0; i <= root; ++i) {
    if (nodes_[i].bound) {
      Tensor& pg = nodes_[i].bound->grad;
      const Tensor& ng = nodes_[i].grad;
      for (size_t j = 0; j < pg.numel(); ++j) pg[j] += ng[j];
    }
  }
}

}  // namespace must
