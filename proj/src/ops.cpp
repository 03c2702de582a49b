#include "srlbench/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace srlbench::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                                " and " + shape_str(b));
}

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string("non-finite value produced by ") + op);
        }
    }
}

bool track(Tape* tape, const Tensor& a) { return tape && a.requires_grad(); }
bool track(Tape* tape, const Tensor& a, const Tensor& b) {
    return tape && (a.requires_grad() || b.requires_grad());
}

// rows x cols view of the last axis
std::pair<int64_t, int64_t> rows_cols(const Tensor& t) {
    int64_t cols = t.dim(t.ndim() - 1);
    return {t.size() / cols, cols};
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) shape_error("matmul", a.shape(), b.shape());
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out = Tensor::zeros({m, n});
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (int i = 0; i < m; ++i) {
        for (int kk = 0; kk < k; ++kk) {
            const double aik = pa[i * k + kk];
            if (aik == 0.0) continue;
            const double* brow = pb + kk * n;
            double* orow = po + i * n;
            for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    check_finite(out, "matmul");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to]() mutable {
            const int m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
            const std::vector<double>& go = to.grad();
            if (ta.requires_grad()) {
                std::vector<double>& ga = ta.grad();
                const double* pb = tb.data().data();
                for (int i = 0; i < m; ++i) {
                    for (int kk = 0; kk < k; ++kk) {
                        double acc = 0.0;
                        const double* grow = go.data() + i * n;
                        const double* brow = pb + kk * n;
                        for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        ga[i * k + kk] += acc;
                    }
                }
            }
            if (tb.requires_grad()) {
                std::vector<double>& gb = tb.grad();
                const double* pa = ta.data().data();
                for (int i = 0; i < m; ++i) {
                    for (int kk = 0; kk < k; ++kk) {
                        const double aik = pa[i * k + kk];
                        if (aik == 0.0) continue;
                        const double* grow = go.data() + i * n;
                        double* gbrow = gb.data() + kk * n;
                        for (int j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
                    }
                }
            }
        });
    }
    return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    const bool same = a.shape() == b.shape();
    bool suffix = false;
    if (!same) {
        // b broadcast over leading dims of a
        if (b.ndim() <= a.ndim()) {
            suffix = true;
            for (int i = 0; i < b.ndim(); ++i) {
                if (b.dim(b.ndim() - 1 - i) != a.dim(a.ndim() - 1 - i)) suffix = false;
            }
        }
        if (!suffix) shape_error("add", a.shape(), b.shape());
    }
    Tensor out = Tensor::zeros(a.shape());
    const int64_t bn = b.size();
    for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i % bn];
    check_finite(out, "add");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to]() mutable {
            const std::vector<double>& go = to.grad();
            if (ta.requires_grad()) {
                std::vector<double>& ga = ta.grad();
                for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
            }
            if (tb.requires_grad()) {
                std::vector<double>& gb = tb.grad();
                const int64_t bn = tb.size();
                for (size_t i = 0; i < go.size(); ++i) gb[i % bn] += go[i];
            }
        });
    }
    return out;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
    Tensor out = Tensor::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    check_finite(out, "sub");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to]() mutable {
            const std::vector<double>& go = to.grad();
            if (ta.requires_grad()) {
                std::vector<double>& ga = ta.grad();
                for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
            }
            if (tb.requires_grad()) {
                std::vector<double>& gb = tb.grad();
                for (size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
            }
        });
    }
    return out;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
    Tensor out = Tensor::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    check_finite(out, "mul");
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to]() mutable {
            const std::vector<double>& go = to.grad();
            if (ta.requires_grad()) {
                std::vector<double>& ga = ta.grad();
                for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * tb.data()[i];
            }
            if (tb.requires_grad()) {
                std::vector<double>& gb = tb.grad();
                for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * ta.data()[i];
            }
        });
    }
    return out;
}

Tensor scale(Tape* tape, const Tensor& a, double factor) {
    Tensor out = Tensor::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * factor;
    check_finite(out, "scale");
    if (track(tape, a)) {
        out.set_requires_grad(true);
        Tensor ta = a, to = out;
        tape->record([ta, to, factor]() mutable {
            const std::vector<double>& go = to.grad();
            std::vector<double>& ga = ta.grad();
            for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
        });
    }
    return out;
}

Tensor relu(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to]() mutable {
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (size_t i = 0; i < go.size(); ++i) {
                if (tx.data()[i] > 0.0) gx[i] += go[i];
            }
        });
    }
    return out;
}

Tensor tanh(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out.data()[i] = std::tanh(x.data()[i]);
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to]() mutable {
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (size_t i = 0; i < go.size(); ++i) {
                const double y = to.data()[i];
                gx[i] += go[i] * (1.0 - y * y);
            }
        });
    }
    return out;
}

Tensor exp(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out.data()[i] = std::exp(x.data()[i]);
    check_finite(out, "exp");
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to]() mutable {
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * to.data()[i];
        });
    }
    return out;
}

namespace {

// stable per-row softmax into out
void softmax_rows(const Tensor& x, Tensor& out, bool log_form) {
    auto [rows, cols] = rows_cols(x);
    for (int64_t r = 0; r < rows; ++r) {
        const double* px = x.data().data() + r * cols;
        double* po = out.data().data() + r * cols;
        double mx = px[0];
        for (int64_t c = 1; c < cols; ++c) mx = std::max(mx, px[c]);
        double denom = 0.0;
        for (int64_t c = 0; c < cols; ++c) denom += std::exp(px[c] - mx);
        if (log_form) {
            const double lse = mx + std::log(denom);
            for (int64_t c = 0; c < cols; ++c) po[c] = px[c] - lse;
        } else {
            for (int64_t c = 0; c < cols; ++c) po[c] = std::exp(px[c] - mx) / denom;
        }
    }
}

}  // namespace

Tensor softmax(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    softmax_rows(x, out, false);
    check_finite(out, "softmax");
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to]() mutable {
            auto [rows, cols] = rows_cols(to);
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (int64_t r = 0; r < rows; ++r) {
                const double* y = to.data().data() + r * cols;
                const double* g = go.data() + r * cols;
                double dot = 0.0;
                for (int64_t c = 0; c < cols; ++c) dot += g[c] * y[c];
                for (int64_t c = 0; c < cols; ++c) gx[r * cols + c] += (g[c] - dot) * y[c];
            }
        });
    }
    return out;
}

Tensor log_softmax(Tape* tape, const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    softmax_rows(x, out, true);
    check_finite(out, "log_softmax");
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to]() mutable {
            auto [rows, cols] = rows_cols(to);
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (int64_t r = 0; r < rows; ++r) {
                const double* lp = to.data().data() + r * cols;
                const double* g = go.data() + r * cols;
                double gsum = 0.0;
                for (int64_t c = 0; c < cols; ++c) gsum += g[c];
                for (int64_t c = 0; c < cols; ++c) {
                    gx[r * cols + c] += g[c] - gsum * std::exp(lp[c]);
                }
            }
        });
    }
    return out;
}

Tensor slice(Tape* tape, const Tensor& x, int begin, int end) {
    const int last = x.dim(x.ndim() - 1);
    if (begin < 0 || end > last || begin >= end) {
        throw std::invalid_argument("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                                    ") out of range for last axis of " + shape_str(x.shape()));
    }
    Shape os = x.shape();
    os.back() = end - begin;
    Tensor out = Tensor::zeros(os);
    auto [rows, cols] = rows_cols(x);
    const int w = end - begin;
    for (int64_t r = 0; r < rows; ++r) {
        const double* src = x.data().data() + r * cols + begin;
        double* dst = out.data().data() + r * w;
        std::copy(src, src + w, dst);
    }
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to, begin, w]() mutable {
            auto [rows, cols] = rows_cols(tx);
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (int64_t r = 0; r < rows; ++r) {
                for (int c = 0; c < w; ++c) gx[r * cols + begin + c] += go[r * w + c];
            }
        });
    }
    return out;
}

Tensor concat(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.ndim() != b.ndim()) shape_error("concat", a.shape(), b.shape());
    for (int i = 0; i + 1 < a.ndim(); ++i) {
        if (a.dim(i) != b.dim(i)) shape_error("concat", a.shape(), b.shape());
    }
    const int wa = a.dim(a.ndim() - 1), wb = b.dim(b.ndim() - 1);
    Shape os = a.shape();
    os.back() = wa + wb;
    Tensor out = Tensor::zeros(os);
    const int64_t rows = a.size() / wa;
    for (int64_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().data() + r * wa, wa, out.data().data() + r * (wa + wb));
        std::copy_n(b.data().data() + r * wb, wb, out.data().data() + r * (wa + wb) + wa);
    }
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to, wa, wb]() mutable {
            const int64_t rows = ta.size() / wa;
            const std::vector<double>& go = to.grad();
            for (int64_t r = 0; r < rows; ++r) {
                if (ta.requires_grad()) {
                    std::vector<double>& ga = ta.grad();
                    for (int c = 0; c < wa; ++c) ga[r * wa + c] += go[r * (wa + wb) + c];
                }
                if (tb.requires_grad()) {
                    std::vector<double>& gb = tb.grad();
                    for (int c = 0; c < wb; ++c) gb[r * wb + c] += go[r * (wa + wb) + wa + c];
                }
            }
        });
    }
    return out;
}

Tensor reshape(Tape* tape, const Tensor& x, const Shape& shape) {
    if (shape_numel(shape) != x.size()) {
        shape_error("reshape", x.shape(), shape);
    }
    Tensor out = Tensor::from_vector(shape, x.data());
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to]() mutable {
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        });
    }
    return out;
}

Tensor flatten(Tape* tape, const Tensor& x) {
    const int d0 = x.dim(0);
    return reshape(tape, x, {d0, static_cast<int>(x.size() / d0)});
}

Tensor sum(Tape* tape, const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    check_finite(out, "sum");
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to]() mutable {
            const double g = to.grad()[0];
            std::vector<double>& gx = tx.grad();
            for (size_t i = 0; i < gx.size(); ++i) gx[i] += g;
        });
    }
    return out;
}

Tensor mean(Tape* tape, const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    const double n = static_cast<double>(x.size());
    Tensor out = Tensor::scalar(acc / n);
    check_finite(out, "mean");
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to, n]() mutable {
            const double g = to.grad()[0] / n;
            std::vector<double>& gx = tx.grad();
            for (size_t i = 0; i < gx.size(); ++i) gx[i] += g;
        });
    }
    return out;
}

Tensor mse(Tape* tape, const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) shape_error("mse", pred.shape(), target.shape());
    double acc = 0.0;
    for (int64_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        acc += d * d;
    }
    const double n = static_cast<double>(pred.size());
    Tensor out = Tensor::scalar(acc / n);
    check_finite(out, "mse");
    if (track(tape, pred, target)) {
        out.set_requires_grad(true);
        Tensor tp = pred, tt = target, to = out;
        tape->record([tp, tt, to, n]() mutable {
            const double g = to.grad()[0] * 2.0 / n;
            for (int64_t i = 0; i < tp.size(); ++i) {
                const double d = tp.data()[i] - tt.data()[i];
                if (tp.requires_grad()) tp.grad()[i] += g * d;
                if (tt.requires_grad()) tt.grad()[i] -= g * d;
            }
        });
    }
    return out;
}

Tensor cross_entropy(Tape* tape, const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<double>* class_weights) {
    auto [rows, cols] = rows_cols(logits);
    if (static_cast<int64_t>(targets.size()) != rows) {
        throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(rows) + " rows");
    }
    for (int t : targets) {
        if (t < 0 || t >= cols) {
            throw std::invalid_argument("cross_entropy: class index " + std::to_string(t) +
                                        " outside [0, " + std::to_string(cols) + ")");
        }
    }
    if (class_weights && static_cast<int64_t>(class_weights->size()) != cols) {
        throw std::invalid_argument("cross_entropy: class weight count mismatch");
    }
    Tensor lp = Tensor::zeros(logits.shape());
    softmax_rows(logits, lp, true);
    double acc = 0.0, wsum = 0.0;
    for (int64_t r = 0; r < rows; ++r) {
        const double w = class_weights ? (*class_weights)[static_cast<size_t>(targets[r])] : 1.0;
        acc -= w * lp.data()[r * cols + targets[r]];
        wsum += w;
    }
    Tensor out = Tensor::scalar(acc / wsum);
    check_finite(out, "cross_entropy");
    if (track(tape, logits)) {
        out.set_requires_grad(true);
        Tensor tl = logits, to = out;
        std::vector<int> tg = targets;
        std::vector<double> cw = class_weights ? *class_weights : std::vector<double>();
        tape->record([tl, to, tg, cw, lp, wsum]() mutable {
            auto [rows, cols] = rows_cols(tl);
            const double g = to.grad()[0] / wsum;
            std::vector<double>& gl = tl.grad();
            for (int64_t r = 0; r < rows; ++r) {
                const double w = cw.empty() ? 1.0 : cw[static_cast<size_t>(tg[r])];
                for (int64_t c = 0; c < cols; ++c) {
                    const double p = std::exp(lp.data()[r * cols + c]);
                    const double ind = (c == tg[r]) ? 1.0 : 0.0;
                    gl[r * cols + c] += g * w * (p - ind);
                }
            }
        });
    }
    return out;
}

Tensor gather_log_prob(Tape* tape, const Tensor& logits, const std::vector<int>& actions) {
    auto [rows, cols] = rows_cols(logits);
    if (static_cast<int64_t>(actions.size()) != rows) {
        throw std::invalid_argument("gather_log_prob: action count mismatch");
    }
    for (int a : actions) {
        if (a < 0 || a >= cols) {
            throw std::invalid_argument("gather_log_prob: action index " + std::to_string(a) +
                                        " outside [0, " + std::to_string(cols) + ")");
        }
    }
    Tensor lp = Tensor::zeros(logits.shape());
    softmax_rows(logits, lp, true);
    Tensor out = Tensor::zeros({static_cast<int>(rows)});
    for (int64_t r = 0; r < rows; ++r) out.data()[r] = lp.data()[r * cols + actions[r]];
    check_finite(out, "gather_log_prob");
    if (track(tape, logits)) {
        out.set_requires_grad(true);
        Tensor tl = logits, to = out;
        std::vector<int> ac = actions;
        tape->record([tl, to, ac, lp]() mutable {
            auto [rows, cols] = rows_cols(tl);
            const std::vector<double>& go = to.grad();
            std::vector<double>& gl = tl.grad();
            for (int64_t r = 0; r < rows; ++r) {
                const double g = go[r];
                if (g == 0.0) continue;
                for (int64_t c = 0; c < cols; ++c) {
                    const double p = std::exp(lp.data()[r * cols + c]);
                    const double ind = (c == ac[r]) ? 1.0 : 0.0;
                    gl[r * cols + c] += g * (ind - p);
                }
            }
        });
    }
    return out;
}

Tensor minimum(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("minimum", a.shape(), b.shape());
    Tensor out = Tensor::zeros(a.shape());
    for (int64_t i = 0; i < a.size(); ++i) out.data()[i] = std::min(a.data()[i], b.data()[i]);
    if (track(tape, a, b)) {
        out.set_requires_grad(true);
        Tensor ta = a, tb = b, to = out;
        tape->record([ta, tb, to]() mutable {
            const std::vector<double>& go = to.grad();
            for (size_t i = 0; i < go.size(); ++i) {
                // ties route to the first argument
                if (ta.data()[i] <= tb.data()[i]) {
                    if (ta.requires_grad()) ta.grad()[i] += go[i];
                } else if (tb.requires_grad()) {
                    tb.grad()[i] += go[i];
                }
            }
        });
    }
    return out;
}

Tensor clamp(Tape* tape, const Tensor& x, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) out.data()[i] = std::clamp(x.data()[i], lo, hi);
    if (track(tape, x)) {
        out.set_requires_grad(true);
        Tensor tx = x, to = out;
        tape->record([tx, to, lo, hi]() mutable {
            const std::vector<double>& go = to.grad();
            std::vector<double>& gx = tx.grad();
            for (size_t i = 0; i < go.size(); ++i) {
                const double v = tx.data()[i];
                if (v >= lo && v <= hi) gx[i] += go[i];
            }
        });
    }
    return out;
}

Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int padding) {
    if (x.ndim() != 4 || w.ndim() != 4 || x.dim(1) != w.dim(1)) shape_error("conv2d", x.shape(), w.shape());
    if (bias.ndim() != 1 || bias.dim(0) != w.dim(0)) shape_error("conv2d bias", w.shape(), bias.shape());
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be positive");
    const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int O = w.dim(0), K = w.dim(2);
    if (w.dim(3) != K) shape_error("conv2d kernel", w.shape(), w.shape());
    const int Ho = (H + 2 * padding - K) / stride + 1;
    const int Wo = (W + 2 * padding - K) / stride + 1;
    if (Ho <= 0 || Wo <= 0) shape_error("conv2d output", x.shape(), w.shape());
    Tensor out = Tensor::zeros({B, O, Ho, Wo});
    const double* px = x.data().data();
    const double* pw = w.data().data();
    double* po = out.data().data();
    for (int b = 0; b < B; ++b) {
        for (int o = 0; o < O; ++o) {
            const double bv = bias.data()[o];
            for (int oh = 0; oh < Ho; ++oh) {
                for (int ow = 0; ow < Wo; ++ow) {
                    double acc = bv;
                    const int ih0 = oh * stride - padding;
                    const int iw0 = ow * stride - padding;
                    for (int c = 0; c < C; ++c) {
                        for (int kh = 0; kh < K; ++kh) {
                            const int ih = ih0 + kh;
                            if (ih < 0 || ih >= H) continue;
                            for (int kw = 0; kw < K; ++kw) {
                                const int iw = iw0 + kw;
                                if (iw < 0 || iw >= W) continue;
                                acc += px[((b * C + c) * H + ih) * W + iw] *
                                       pw[((o * C + c) * K + kh) * K + kw];
                            }
                        }
                    }
                    po[((b * O + o) * Ho + oh) * Wo + ow] = acc;
                }
            }
        }
    }
    check_finite(out, "conv2d");
    if (tape && (x.requires_grad() || w.requires_grad() || bias.requires_grad())) {
        out.set_requires_grad(true);
        Tensor tx = x, tw = w, tb = bias, to = out;
        tape->record([tx, tw, tb, to, stride, padding]() mutable {
            const int B = tx.dim(0), C = tx.dim(1), H = tx.dim(2), W = tx.dim(3);
            const int O = tw.dim(0), K = tw.dim(2);
            const int Ho = to.dim(2), Wo = to.dim(3);
            const std::vector<double>& go = to.grad();
            for (int b = 0; b < B; ++b) {
                for (int o = 0; o < O; ++o) {
                    for (int oh = 0; oh < Ho; ++oh) {
                        for (int ow = 0; ow < Wo; ++ow) {
                            const double g = go[((b * O + o) * Ho + oh) * Wo + ow];
                            if (g == 0.0) continue;
                            if (tb.requires_grad()) tb.grad()[o] += g;
                            const int ih0 = oh * stride - padding;
                            const int iw0 = ow * stride - padding;
                            for (int c = 0; c < C; ++c) {
                                for (int kh = 0; kh < K; ++kh) {
                                    const int ih = ih0 + kh;
                                    if (ih < 0 || ih >= H) continue;
                                    for (int kw = 0; kw < K; ++kw) {
                                        const int iw = iw0 + kw;
                                        if (iw < 0 || iw >= W) continue;
                                        const int64_t xi = ((static_cast<int64_t>(b) * C + c) * H + ih) * W + iw;
                                        const int64_t wi = ((static_cast<int64_t>(o) * C + c) * K + kh) * K + kw;
                                        if (tw.requires_grad()) tw.grad()[wi] += g * tx.data()[xi];
                                        if (tx.requires_grad()) tx.grad()[xi] += g * tw.data()[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor one_hot(const std::vector<int>& indices, int num_classes) {
    Tensor out = Tensor::zeros({static_cast<int>(indices.size()), num_classes});
    for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= num_classes) {
            throw std::invalid_argument("one_hot: index " + std::to_string(indices[i]) +
                                        " outside [0, " + std::to_string(num_classes) + ")");
        }
        out.data()[i * num_classes + indices[i]] = 1.0;
    }
    return out;
}

void record_custom(Tape* tape, std::function<void()> backward) {
    if (tape) tape->record(std::move(backward));
}

GradCheckReport grad_check(const std::function<Tensor(Tape*, std::vector<Tensor>&)>& fn,
                           std::vector<Tensor> inputs, double h) {
    Tape tape;
    Tensor loss = fn(&tape, inputs);
    if (loss.size() != 1) throw std::invalid_argument("grad_check: function must return a scalar");
    for (auto& t : inputs) {
        if (t.requires_grad()) t.zero_grad();
    }
    tape.backward(loss);

    GradCheckReport report;
    for (auto& t : inputs) {
        if (!t.requires_grad()) continue;
        for (int64_t i = 0; i < t.size(); ++i) {
            const double saved = t.data()[i];
            t.data()[i] = saved + h;
            const double fp = fn(nullptr, inputs).item();
            t.data()[i] = saved - h;
            const double fm = fn(nullptr, inputs).item();
            t.data()[i] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double adg = t.grad()[i];
            const double denom = std::max({std::abs(fd), std::abs(adg), 1e-6});
            report.max_rel_error = std::max(report.max_rel_error, std::abs(fd - adg) / denom);
            ++report.components_checked;
        }
    }
    return report;
}

}  // namespace srlbench::ad
