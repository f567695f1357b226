#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lac/kernels.hpp"
#include "lac/tensor.hpp"

// Define-by-run reverse-mode autodiff over Tensor<Real>. Ops record a
// backward closure only while grad mode is on and at least one input
// requires grad; otherwise they produce detached constants, which is how
// the stop-gradient teacher branch is built.

namespace lac::ad {

inline bool& grad_mode() {
    thread_local bool on = true;
    return on;
}

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
    ~NoGradGuard() { grad_mode() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
};

template <class Real>
struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void ensure_grad() {
        if (!grad_ready) {
            grad = Tensor<Real>::zeros(value.shape);
            grad_ready = true;
        }
    }
    void reset_grad() {
        grad = Tensor<Real>();
        grad_ready = false;
    }
};

template <class Real>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<Real>> n) : n_(std::move(n)) {}

    static Var leaf(Tensor<Real> v, bool requires_grad) {
        auto n = std::make_shared<Node<Real>>();
        n->value = std::move(v);
        n->requires_grad = requires_grad;
        return Var(std::move(n));
    }
    static Var constant(Tensor<Real> v) { return leaf(std::move(v), false); }

    const Tensor<Real>& val() const { return n_->value; }
    Tensor<Real>& val() { return n_->value; }
    const Tensor<Real>& grad() const { return n_->grad; }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    void reset_grad() { n_->reset_grad(); }
    Node<Real>* node() const { return n_.get(); }
    std::shared_ptr<Node<Real>> shared() const { return n_; }
    explicit operator bool() const { return static_cast<bool>(n_); }

private:
    std::shared_ptr<Node<Real>> n_;
};

template <class Real>
void accumulate(Node<Real>& p, const Tensor<Real>& g) {
    if (!p.requires_grad) return;
    p.ensure_grad();
    kernels::ew_axpy(p.grad, Real(1), g);
}

// Create an op node. `bw` runs with the node's grad fully accumulated.
template <class Real>
Var<Real> make_op(Tensor<Real> value, std::vector<Var<Real>> inputs, std::function<void(Node<Real>&)> bw) {
    auto n = std::make_shared<Node<Real>>();
    n->value = std::move(value);
    if (grad_mode()) {
        bool rg = false;
        for (const auto& in : inputs) rg = rg || in.requires_grad();
        if (rg) {
            n->requires_grad = true;
            for (auto& in : inputs) n->parents.push_back(in.shared());
            n->backward = std::move(bw);
        }
    }
    return Var<Real>(std::move(n));
}

template <class Real>
void backward(const Var<Real>& loss) {
    require_shape(loss.val().numel() == 1, "backward: loss must be scalar");
    require(loss.requires_grad(), "backward: loss does not require grad");

    std::vector<Node<Real>*> order;
    std::unordered_set<Node<Real>*> seen;
    std::vector<std::pair<Node<Real>*, size_t>> stack;
    stack.push_back({loss.node(), 0});
    seen.insert(loss.node());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node<Real>* p = n->parents[i].get();
            ++i;
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad.data[0] = Real(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<Real>* n = *it;
        if (n->backward) n->backward(*n);
    }
}

template <class Real>
Var<Real> detach(const Var<Real>& x) {
    return Var<Real>::constant(x.val());
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <class Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b) {
    check_same_shape(a.val(), b.val(), "add");
    Tensor<Real> y(a.val().shape);
    kernels::ew_zip(a.val(), b.val(), y, [](Real u, Real v) { return u + v; });
    auto an = a.shared(), bn = b.shared();
    return make_op<Real>(std::move(y), {a, b}, [an, bn](Node<Real>& self) {
        accumulate(*an, self.grad);
        accumulate(*bn, self.grad);
    });
}

template <class Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b) {
    check_same_shape(a.val(), b.val(), "sub");
    Tensor<Real> y(a.val().shape);
    kernels::ew_zip(a.val(), b.val(), y, [](Real u, Real v) { return u - v; });
    auto an = a.shared(), bn = b.shared();
    return make_op<Real>(std::move(y), {a, b}, [an, bn](Node<Real>& self) {
        accumulate(*an, self.grad);
        if (bn->requires_grad) {
            Tensor<Real> g(self.grad.shape);
            kernels::ew_map(self.grad, g, [](Real v) { return -v; });
            accumulate(*bn, g);
        }
    });
}

template <class Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b) {
    check_same_shape(a.val(), b.val(), "mul");
    Tensor<Real> y(a.val().shape);
    kernels::ew_zip(a.val(), b.val(), y, [](Real u, Real v) { return u * v; });
    auto an = a.shared(), bn = b.shared();
    return make_op<Real>(std::move(y), {a, b}, [an, bn](Node<Real>& self) {
        if (an->requires_grad) {
            Tensor<Real> g(self.grad.shape);
            kernels::ew_zip(self.grad, bn->value, g, [](Real u, Real v) { return u * v; });
            accumulate(*an, g);
        }
        if (bn->requires_grad) {
            Tensor<Real> g(self.grad.shape);
            kernels::ew_zip(self.grad, an->value, g, [](Real u, Real v) { return u * v; });
            accumulate(*bn, g);
        }
    });
}

template <class Real>
Var<Real> scale(const Var<Real>& a, double c) {
    Tensor<Real> y(a.val().shape);
    const Real cr = static_cast<Real>(c);
    kernels::ew_map(a.val(), y, [cr](Real v) { return v * cr; });
    auto an = a.shared();
    return make_op<Real>(std::move(y), {a}, [an, cr](Node<Real>& self) {
        if (an->requires_grad) {
            Tensor<Real> g(self.grad.shape);
            kernels::ew_map(self.grad, g, [cr](Real v) { return v * cr; });
            accumulate(*an, g);
        }
    });
}

template <class Real>
Var<Real> swish(const Var<Real>& x) {
    Tensor<Real> y(x.val().shape);
    kernels::ew_map(x.val(), y, [](Real v) { return v * kernels::sigmoid(v); });
    auto xn = x.shared();
    return make_op<Real>(std::move(y), {x}, [xn](Node<Real>& self) {
        if (!xn->requires_grad) return;
        Tensor<Real> g(self.grad.shape);
        kernels::ew_zip(self.grad, xn->value, g, [](Real gy, Real v) {
            const Real s = kernels::sigmoid(v);
            return gy * (s + v * s * (Real(1) - s));
        });
        accumulate(*xn, g);
    });
}

template <class Real>
Var<Real> tanh_op(const Var<Real>& x) {
    Tensor<Real> y(x.val().shape);
    kernels::ew_map(x.val(), y, [](Real v) { return std::tanh(v); });
    auto xn = x.shared();
    return make_op<Real>(std::move(y), {x}, [xn](Node<Real>& self) {
        Tensor<Real> g(self.grad.shape);
        kernels::ew_zip(self.grad, self.value, g, [](Real gy, Real yv) { return gy * (Real(1) - yv * yv); });
        accumulate(*xn, g);
    });
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

template <class Real>
Var<Real> reshape(const Var<Real>& x, Shape shape) {
    require_shape(numel_of(shape) == x.val().numel(), "reshape: element count mismatch");
    Tensor<Real> y = x.val();
    y.shape = shape;
    auto xn = x.shared();
    Shape xshape = x.val().shape;
    return make_op<Real>(std::move(y), {x}, [xn, xshape](Node<Real>& self) {
        Tensor<Real> g = self.grad;
        g.shape = xshape;
        accumulate(*xn, g);
    });
}

template <class Real>
Var<Real> permute(const Var<Real>& x, std::vector<int> axes) {
    const int nd = x.val().ndim();
    require_shape(static_cast<int>(axes.size()) == nd, "permute: axes arity mismatch");
    Shape yshape(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) yshape[static_cast<size_t>(i)] = x.val().dim(axes[static_cast<size_t>(i)]);
    Tensor<Real> y(yshape);
    kernels::permute(x.val(), axes, y);
    std::vector<int> inv(static_cast<size_t>(nd));
    for (int i = 0; i < nd; ++i) inv[static_cast<size_t>(axes[static_cast<size_t>(i)])] = i;
    auto xn = x.shared();
    return make_op<Real>(std::move(y), {x}, [xn, inv](Node<Real>& self) {
        if (!xn->requires_grad) return;
        Tensor<Real> g(xn->value.shape);
        kernels::permute(self.grad, inv, g);
        accumulate(*xn, g);
    });
}

// ---------------------------------------------------------------------------
// dense layers
// ---------------------------------------------------------------------------

template <class Real>
Var<Real> conv2d(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b) {
    const auto& xs = x.val().shape;
    const auto& ws = w.val().shape;
    require_shape(xs.size() == 4 && ws.size() == 4 && xs[1] == ws[1], "conv2d: bad shapes");
    Tensor<Real> y({xs[0], ws[0], xs[2], xs[3]});
    kernels::conv2d_fwd(x.val(), w.val(), b ? &b.val() : nullptr, y);
    std::vector<Var<Real>> ins = {x, w};
    if (b) ins.push_back(b);
    auto xn = x.shared(), wn = w.shared();
    auto bn = b ? b.shared() : nullptr;
    return make_op<Real>(std::move(y), std::move(ins), [xn, wn, bn](Node<Real>& self) {
        if (xn->requires_grad) {
            Tensor<Real> gx(xn->value.shape);
            kernels::conv2d_bwd_x(self.grad, wn->value, gx);
            accumulate(*xn, gx);
        }
        if (wn->requires_grad || (bn && bn->requires_grad)) {
            Tensor<Real> gw(wn->value.shape);
            Tensor<Real> gb;
            if (bn) gb = Tensor<Real>(bn->value.shape);
            kernels::conv2d_bwd_w(self.grad, xn->value, gw, bn ? &gb : nullptr);
            accumulate(*wn, gw);
            if (bn) accumulate(*bn, gb);
        }
    });
}

template <class Real>
Var<Real> conv1d(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b) {
    const auto& xs = x.val().shape;
    const auto& ws = w.val().shape;
    require_shape(xs.size() == 3 && ws.size() == 3 && xs[1] == ws[1], "conv1d: bad shapes");
    Tensor<Real> y({xs[0], ws[0], xs[2]});
    kernels::conv1d_fwd(x.val(), w.val(), b ? &b.val() : nullptr, y);
    std::vector<Var<Real>> ins = {x, w};
    if (b) ins.push_back(b);
    auto xn = x.shared(), wn = w.shared();
    auto bn = b ? b.shared() : nullptr;
    return make_op<Real>(std::move(y), std::move(ins), [xn, wn, bn](Node<Real>& self) {
        if (xn->requires_grad) {
            Tensor<Real> gx(xn->value.shape);
            kernels::conv1d_bwd_x(self.grad, wn->value, gx);
            accumulate(*xn, gx);
        }
        if (wn->requires_grad || (bn && bn->requires_grad)) {
            Tensor<Real> gw(wn->value.shape);
            Tensor<Real> gb;
            if (bn) gb = Tensor<Real>(bn->value.shape);
            kernels::conv1d_bwd_w(self.grad, xn->value, gw, bn ? &gb : nullptr);
            accumulate(*wn, gw);
            if (bn) accumulate(*bn, gb);
        }
    });
}

template <class Real>
Var<Real> linear(const Var<Real>& x, const Var<Real>& w, const Var<Real>& b) {
    const auto& xs = x.val().shape;
    const auto& ws = w.val().shape;
    require_shape(xs.size() == 2 && ws.size() == 2 && xs[1] == ws[1], "linear: bad shapes");
    Tensor<Real> y({xs[0], ws[0]});
    kernels::linear_fwd(x.val(), w.val(), b ? &b.val() : nullptr, y);
    std::vector<Var<Real>> ins = {x, w};
    if (b) ins.push_back(b);
    auto xn = x.shared(), wn = w.shared();
    auto bn = b ? b.shared() : nullptr;
    return make_op<Real>(std::move(y), std::move(ins), [xn, wn, bn](Node<Real>& self) {
        Tensor<Real> gx, gw, gb;
        if (xn->requires_grad) gx = Tensor<Real>(xn->value.shape);
        if (wn->requires_grad) gw = Tensor<Real>(wn->value.shape);
        if (bn && bn->requires_grad) gb = Tensor<Real>(bn->value.shape);
        kernels::linear_bwd(self.grad, xn->value, wn->value, xn->requires_grad ? &gx : nullptr,
                            wn->requires_grad ? &gw : nullptr, (bn && bn->requires_grad) ? &gb : nullptr);
        if (xn->requires_grad) accumulate(*xn, gx);
        if (wn->requires_grad) accumulate(*wn, gw);
        if (bn && bn->requires_grad) accumulate(*bn, gb);
    });
}

template <class Real>
Var<Real> groupnorm(const Var<Real>& x, const Var<Real>& gamma, const Var<Real>& beta, int64_t groups, double eps) {
    const auto& xs = x.val().shape;
    require_shape(xs.size() >= 2 && xs[1] % groups == 0, "groupnorm: channels not divisible by groups");
    Tensor<Real> y(xs);
    auto mean = std::make_shared<Tensor<Real>>(Shape{xs[0] * groups});
    auto rstd = std::make_shared<Tensor<Real>>(Shape{xs[0] * groups});
    kernels::groupnorm_fwd(x.val(), gamma.val(), beta.val(), groups, eps, y, *mean, *rstd);
    auto xn = x.shared(), gn = gamma.shared(), bn = beta.shared();
    return make_op<Real>(std::move(y), {x, gamma, beta}, [xn, gn, bn, mean, rstd, groups](Node<Real>& self) {
        if (xn->requires_grad) {
            Tensor<Real> gx(xn->value.shape);
            kernels::groupnorm_bwd_x(self.grad, xn->value, gn->value, *mean, *rstd, groups, gx);
            accumulate(*xn, gx);
        }
        if (gn->requires_grad || bn->requires_grad) {
            Tensor<Real> gg(gn->value.shape), gb(bn->value.shape);
            kernels::groupnorm_bwd_affine(self.grad, xn->value, *mean, *rstd, groups, gg, gb);
            accumulate(*gn, gg);
            accumulate(*bn, gb);
        }
    });
}

// ---------------------------------------------------------------------------
// resampling
// ---------------------------------------------------------------------------

template <class Real>
Var<Real> avgpool2d(const Var<Real>& x, int64_t pf, int64_t pt) {
    const auto& xs = x.val().shape;
    require_shape(xs.size() == 4 && xs[2] % pf == 0 && xs[3] % pt == 0, "avgpool2d: extent not divisible");
    Tensor<Real> y({xs[0], xs[1], xs[2] / pf, xs[3] / pt});
    kernels::avgpool2d_fwd(x.val(), pf, pt, y);
    auto xn = x.shared();
    return make_op<Real>(std::move(y), {x}, [xn, pf, pt](Node<Real>& self) {
        if (!xn->requires_grad) return;
        Tensor<Real> gx(xn->value.shape);
        kernels::avgpool2d_bwd(self.grad, pf, pt, gx);
        accumulate(*xn, gx);
    });
}

template <class Real>
Var<Real> upsample2d(const Var<Real>& x, int64_t rf, int64_t rt) {
    const auto& xs = x.val().shape;
    Tensor<Real> y({xs[0], xs[1], xs[2] * rf, xs[3] * rt});
    kernels::upsample2d_fwd(x.val(), rf, rt, y);
    auto xn = x.shared();
    return make_op<Real>(std::move(y), {x}, [xn, rf, rt](Node<Real>& self) {
        if (!xn->requires_grad) return;
        Tensor<Real> gx(xn->value.shape);
        kernels::upsample2d_bwd(self.grad, rf, rt, gx);
        accumulate(*xn, gx);
    });
}

// ---------------------------------------------------------------------------
// batched matmul and softmax (attention building blocks)
// ---------------------------------------------------------------------------

template <class Real>
Var<Real> bmm(const Var<Real>& a, const Var<Real>& b, bool trans_b) {
    const auto& as = a.val().shape;
    const auto& bs = b.val().shape;
    require_shape(as.size() == 3 && bs.size() == 3, "bmm: rank must be 3");
    const int64_t K = as[2];
    require_shape(trans_b ? bs[2] == K : bs[1] == K, "bmm: inner extent mismatch");
    Tensor<Real> y({as[0], as[1], trans_b ? bs[1] : bs[2]});
    kernels::bmm(a.val(), b.val(), trans_b, y);
    auto an = a.shared(), bn = b.shared();
    return make_op<Real>(std::move(y), {a, b}, [an, bn, trans_b](Node<Real>& self) {
        if (an->requires_grad) {
            Tensor<Real> ga(an->value.shape);
            kernels::bmm(self.grad, bn->value, !trans_b, ga);
            accumulate(*an, ga);
        }
        if (bn->requires_grad) {
            Tensor<Real> gb(bn->value.shape);
            if (trans_b)
                kernels::bmm_tn(self.grad, an->value, gb);  // [B,N,K]
            else
                kernels::bmm_tn(an->value, self.grad, gb);  // [B,K,N]
            accumulate(*bn, gb);
        }
    });
}

template <class Real>
Var<Real> softmax_last(const Var<Real>& x) {
    Tensor<Real> y(x.val().shape);
    kernels::softmax_last(x.val(), y);
    auto xn = x.shared();
    return make_op<Real>(std::move(y), {x}, [xn](Node<Real>& self) {
        Tensor<Real> g(xn->value.shape);
        kernels::softmax_last_bwd(self.grad, self.value, g);
        accumulate(*xn, g);
    });
}

// ---------------------------------------------------------------------------
// broadcast ops
// ---------------------------------------------------------------------------

// x scaled by a per-sample constant (no grad to the scales)
template <class Real>
Var<Real> mul_per_sample(const Var<Real>& x, std::vector<Real> s) {
    require_shape(static_cast<int64_t>(s.size()) == x.val().dim(0), "mul_per_sample: scale count mismatch");
    Tensor<Real> y(x.val().shape);
    kernels::mul_per_sample(x.val(), s, y);
    auto xn = x.shared();
    return make_op<Real>(std::move(y), {x}, [xn, s](Node<Real>& self) {
        if (!xn->requires_grad) return;
        Tensor<Real> g(self.grad.shape);
        kernels::mul_per_sample(self.grad, s, g);
        accumulate(*xn, g);
    });
}

// x [N,C,F,T] scaled per-frequency by s [N,F] (grads to both)
template <class Real>
Var<Real> mul_freq_scale(const Var<Real>& x, const Var<Real>& s) {
    const auto& xs = x.val().shape;
    require_shape(xs.size() == 4 && s.val().ndim() == 2 && s.val().dim(0) == xs[0] && s.val().dim(1) == xs[2],
                  "mul_freq_scale: bad shapes");
    Tensor<Real> y(xs);
    kernels::mul_freq_scale_fwd(x.val(), s.val(), y);
    auto xn = x.shared(), sn = s.shared();
    return make_op<Real>(std::move(y), {x, s}, [xn, sn](Node<Real>& self) {
        if (xn->requires_grad) {
            Tensor<Real> gx(xn->value.shape);
            kernels::mul_freq_scale_fwd(self.grad, sn->value, gx);
            accumulate(*xn, gx);
        }
        if (sn->requires_grad) {
            Tensor<Real> gs(sn->value.shape);
            kernels::mul_freq_scale_bwd_s(self.grad, xn->value, gs);
            accumulate(*sn, gs);
        }
    });
}

// x [N,C,spatial...] plus per-(n,c) bias e [N,C]
template <class Real>
Var<Real> add_nc_bias(const Var<Real>& x, const Var<Real>& e) {
    const auto& xs = x.val().shape;
    require_shape(e.val().ndim() == 2 && e.val().dim(0) == xs[0] && e.val().dim(1) == xs[1], "add_nc_bias: bad shapes");
    Tensor<Real> y(xs);
    kernels::add_nc_bias_fwd(x.val(), e.val(), y);
    auto xn = x.shared(), en = e.shared();
    return make_op<Real>(std::move(y), {x, e}, [xn, en](Node<Real>& self) {
        accumulate(*xn, self.grad);
        if (en->requires_grad) {
            Tensor<Real> ge(en->value.shape);
            kernels::add_nc_bias_bwd_e(self.grad, ge);
            accumulate(*en, ge);
        }
    });
}

// scalar head: sum_i w_i * x_i for a fixed weight tensor
template <class Real>
Var<Real> weighted_sum(const Var<Real>& x, Tensor<Real> w) {
    check_same_shape(x.val(), w, "weighted_sum");
    double acc = 0;
    for (size_t i = 0; i < w.data.size(); ++i)
        acc += static_cast<double>(x.val().data[i]) * static_cast<double>(w.data[i]);
    Tensor<Real> out(Shape{1});
    out.data[0] = static_cast<Real>(acc);
    auto xn = x.shared();
    auto wp = std::make_shared<Tensor<Real>>(std::move(w));
    return make_op<Real>(std::move(out), {x}, [xn, wp](Node<Real>& self) {
        if (!xn->requires_grad) return;
        Tensor<Real> g(wp->shape);
        const Real g0 = self.grad.data[0];
        kernels::ew_map(*wp, g, [g0](Real v) { return v * g0; });
        accumulate(*xn, g);
    });
}

// ---------------------------------------------------------------------------
// consistency-training loss head:
//   loss = mean_n  lambda[n] * ( sqrt(||x_n - y_n||^2 + c^2) - c )
// The norm runs over everything but the batch axis. The difference form
// r^2 / (sqrt(r^2+c^2)+c) avoids cancellation for small residuals.
// ---------------------------------------------------------------------------

template <class Real>
Var<Real> weighted_pseudo_huber(const Var<Real>& x, const Var<Real>& y, double c, const std::vector<double>& lambda) {
    check_same_shape(x.val(), y.val(), "weighted_pseudo_huber");
    const int64_t N = x.val().dim(0);
    require_shape(static_cast<int64_t>(lambda.size()) == N, "weighted_pseudo_huber: weight count mismatch");
    auto diff = std::make_shared<Tensor<Real>>(x.val().shape);
    kernels::ew_zip(x.val(), y.val(), *diff, [](Real u, Real v) { return u - v; });
    std::vector<double> ss;
    kernels::sumsq_per_sample(*diff, ss);
    double loss = 0;
    auto coeff = std::make_shared<std::vector<Real>>(static_cast<size_t>(N));
    for (int64_t n = 0; n < N; ++n) {
        const double root = std::sqrt(ss[static_cast<size_t>(n)] + c * c);
        const double d = ss[static_cast<size_t>(n)] / (root + c);
        loss += lambda[static_cast<size_t>(n)] * d;
        (*coeff)[static_cast<size_t>(n)] = static_cast<Real>(lambda[static_cast<size_t>(n)] / (static_cast<double>(N) * root));
    }
    loss /= static_cast<double>(N);
    Tensor<Real> out(Shape{1});
    out.data[0] = static_cast<Real>(loss);
    auto xn = x.shared(), yn = y.shared();
    return make_op<Real>(std::move(out), {x, y}, [xn, yn, diff, coeff](Node<Real>& self) {
        const Real g0 = self.grad.data[0];
        Tensor<Real> g(diff->shape);
        kernels::mul_per_sample(*diff, *coeff, g);
        if (g0 != Real(1)) kernels::ew_map(g, g, [g0](Real v) { return v * g0; });
        if (xn->requires_grad) accumulate(*xn, g);
        if (yn->requires_grad) {
            kernels::ew_map(g, g, [](Real v) { return -v; });
            accumulate(*yn, g);
        }
    });
}

}  // namespace lac::ad
