#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "craft/matrix.hpp"
#include "craft/params.hpp"

namespace craft {

// Reverse-mode tape over column-vector/matrix ops. Records one forward
// pass; backward() visits nodes in reverse creation order (creation order
// is topological because ops only reference earlier ids) and accumulates
// parameter gradients into the bound ParamStore.
template <typename Real>
class Tape {
public:
    using Id = std::size_t;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Id leaf(Mat<Real> v) {
        nodes_.push_back(Node{std::move(v), {}, nullptr});
        return nodes_.size() - 1;
    }

    // Leaf bound to a named parameter; its gradient flows into the store.
    Id param(ParamStore<Real>& store, const std::string& name) {
        Mat<Real>* target = &store.grad(name);
        auto it = param_ids_.find(target);
        if (it != param_ids_.end()) return it->second;
        Id id = leaf(store.value(name));
        bindings_.push_back({target, id});
        param_ids_.emplace(target, id);
        return id;
    }

    const Mat<Real>& val(Id id) const { return nodes_[id].value; }

    Mat<Real>& grad(Id id) {
        Node& n = nodes_[id];
        if (n.grad.size() == 0) n.grad = Mat<Real>::zeros(n.value.rows, n.value.cols);
        return n.grad;
    }

    std::size_t size() const { return nodes_.size(); }

    // ---- ops -----------------------------------------------------------

    Id matvec(Id w, Id x) {
        const Mat<Real>& wv = val(w);
        const Mat<Real>& xv = val(x);
        check_shape(wv.cols == xv.rows && xv.cols == 1, "matvec");
        Mat<Real> out(wv.rows, 1);
        matvec_accum(wv, xv, out);
        return record(std::move(out), [w, x](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            const Mat<Real>& wv = t.val(w);
            const Mat<Real>& xv = t.val(x);
            Mat<Real>& gw = t.grad(w);
            Mat<Real>& gx = t.grad(x);
            for (std::size_t i = 0; i < wv.rows; ++i) {
                Real gi = g.data[i];
                for (std::size_t j = 0; j < wv.cols; ++j) {
                    gw.data[i * wv.cols + j] += gi * xv.data[j];
                    gx.data[j] += gi * wv.data[i * wv.cols + j];
                }
            }
        });
    }

    Id add(Id a, Id b) {
        const Mat<Real>& av = val(a);
        const Mat<Real>& bv = val(b);
        check_shape(av.same_shape(bv), "add");
        Mat<Real> out = av;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
        return record(std::move(out), [a, b](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            Mat<Real>& ga = t.grad(a);
            Mat<Real>& gb = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data[i] += g.data[i];
                gb.data[i] += g.data[i];
            }
        });
    }

    Id mul(Id a, Id b) {
        const Mat<Real>& av = val(a);
        const Mat<Real>& bv = val(b);
        check_shape(av.same_shape(bv), "mul");
        Mat<Real> out = av;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
        return record(std::move(out), [a, b](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            const Mat<Real>& av = t.val(a);
            const Mat<Real>& bv = t.val(b);
            Mat<Real>& ga = t.grad(a);
            Mat<Real>& gb = t.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data[i] += g.data[i] * bv.data[i];
                gb.data[i] += g.data[i] * av.data[i];
            }
        });
    }

    Id one_minus(Id a) {
        Mat<Real> out = val(a);
        for (auto& v : out.data) v = Real(1) - v;
        return record(std::move(out), [a](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            Mat<Real>& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] -= g.data[i];
        });
    }

    Id scale(Id a, Real c) {
        Mat<Real> out = val(a);
        for (auto& v : out.data) v *= c;
        return record(std::move(out), [a, c](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            Mat<Real>& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += c * g.data[i];
        });
    }

    Id sigmoid(Id a) {
        Mat<Real> out = val(a);
        for (auto& v : out.data) v = Real(1) / (Real(1) + std::exp(-v));
        return record(std::move(out), [a](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            const Mat<Real>& y = t.val(self);
            Mat<Real>& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga.data[i] += g.data[i] * y.data[i] * (Real(1) - y.data[i]);
        });
    }

    Id tanh_(Id a) {
        Mat<Real> out = val(a);
        for (auto& v : out.data) v = std::tanh(v);
        return record(std::move(out), [a](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            const Mat<Real>& y = t.val(self);
            Mat<Real>& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga.data[i] += g.data[i] * (Real(1) - y.data[i] * y.data[i]);
        });
    }

    Id leaky_relu(Id a, Real alpha) {
        Mat<Real> out = val(a);
        for (auto& v : out.data) v = v > Real(0) ? v : alpha * v;
        return record(std::move(out), [a, alpha](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            const Mat<Real>& x = t.val(a);
            Mat<Real>& ga = t.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga.data[i] += g.data[i] * (x.data[i] > Real(0) ? Real(1) : alpha);
        });
    }

    // W x + b
    Id affine(Id w, Id x, Id b) { return add(matvec(w, x), b); }

    Id concat(Id a, Id b) {
        const Mat<Real>& av = val(a);
        const Mat<Real>& bv = val(b);
        check_shape(av.cols == 1 && bv.cols == 1, "concat");
        Mat<Real> out(av.rows + bv.rows, 1);
        std::copy(av.data.begin(), av.data.end(), out.data.begin());
        std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.rows);
        return record(std::move(out), [a, b](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            Mat<Real>& ga = t.grad(a);
            Mat<Real>& gb = t.grad(b);
            std::size_t na = ga.size();
            for (std::size_t i = 0; i < na; ++i) ga.data[i] += g.data[i];
            for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += g.data[na + i];
        });
    }

    // Row lookup into an embedding table (V x d), returned as a d x 1 vector.
    Id embed_row(Id table, std::size_t row) {
        const Mat<Real>& tv = val(table);
        if (row >= tv.rows) fail(ErrorKind::data_validation, "token id out of vocabulary range");
        Mat<Real> out(tv.cols, 1);
        for (std::size_t j = 0; j < tv.cols; ++j) out.data[j] = tv(row, j);
        return record(std::move(out), [table, row](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            Mat<Real>& gt = t.grad(table);
            for (std::size_t j = 0; j < g.size(); ++j) gt.data[row * gt.cols + j] += g.data[j];
        });
    }

    Id sum(Id a) {
        Real s = 0;
        for (Real v : val(a).data) s += v;
        Mat<Real> out(1, 1);
        out.data[0] = s;
        return record(std::move(out), [a](Tape& t, Id self) {
            Real g = t.grad(self).data[0];
            Mat<Real>& ga = t.grad(a);
            for (auto& v : ga.data) v += g;
        });
    }

    Id mean_scalars(const std::vector<Id>& ids) {
        Mat<Real> out(1, 1);
        for (Id id : ids) out.data[0] += val(id).data[0];
        out.data[0] /= Real(ids.size());
        return record(std::move(out), [ids](Tape& t, Id self) {
            Real g = t.grad(self).data[0] / Real(ids.size());
            for (Id id : ids) t.grad(id).data[0] += g;
        });
    }

    // -log softmax(logits)[target], max-subtraction stabilized.
    Id softmax_xent(Id logits, std::size_t target) {
        const Mat<Real>& lv = val(logits);
        if (target >= lv.size()) fail(ErrorKind::data_validation, "xent target out of range");
        Real mx = lv.data[0];
        for (Real v : lv.data) mx = std::max(mx, v);
        Real z = 0;
        for (Real v : lv.data) z += std::exp(v - mx);
        Real logz = std::log(z) + mx;
        Mat<Real> out(1, 1);
        out.data[0] = logz - lv.data[target];
        return record(std::move(out), [logits, target, logz](Tape& t, Id self) {
            Real g = t.grad(self).data[0];
            const Mat<Real>& lv = t.val(logits);
            Mat<Real>& gl = t.grad(logits);
            for (std::size_t i = 0; i < lv.size(); ++i) {
                Real p = std::exp(lv.data[i] - logz);
                gl.data[i] += g * (p - (i == target ? Real(1) : Real(0)));
            }
        });
    }

    // Binary cross-entropy on a pre-sigmoid scalar logit; stable form.
    Id bce_logit(Id z, Real target) {
        Real zv = val(z).data[0];
        Mat<Real> out(1, 1);
        out.data[0] = std::max(zv, Real(0)) - zv * target +
                      std::log1p(std::exp(-std::abs(zv)));
        return record(std::move(out), [z, target](Tape& t, Id self) {
            Real g = t.grad(self).data[0];
            Real zv = t.val(z).data[0];
            Real p = Real(1) / (Real(1) + std::exp(-zv));
            t.grad(z).data[0] += g * (p - target);
        });
    }

    // Dot-product attention: weights softmax(q . v_i), context sum_i a_i v_i.
    struct Attention {
        Id context;
        std::vector<Real> weights;
    };

    Attention dot_attention(Id query, const std::vector<Id>& ctx) {
        const Mat<Real>& q = val(query);
        std::size_t n = ctx.size();
        std::vector<Real> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Mat<Real>& v = val(ctx[i]);
            check_shape(v.same_shape(q), "attention");
            Real s = 0;
            for (std::size_t j = 0; j < q.size(); ++j) s += q.data[j] * v.data[j];
            scores[i] = s;
        }
        Real mx = scores[0];
        for (Real s : scores) mx = std::max(mx, s);
        Real z = 0;
        std::vector<Real> w(n);
        for (std::size_t i = 0; i < n; ++i) z += (w[i] = std::exp(scores[i] - mx));
        for (auto& v : w) v /= z;

        Mat<Real> out(q.rows, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const Mat<Real>& v = val(ctx[i]);
            for (std::size_t j = 0; j < out.size(); ++j) out.data[j] += w[i] * v.data[j];
        }
        Id id = record(std::move(out), [query, ctx, w](Tape& t, Id self) {
            const Mat<Real>& g = t.grad(self);
            const Mat<Real>& q = t.val(query);
            std::size_t n = ctx.size();
            std::vector<Real> dw(n);
            for (std::size_t i = 0; i < n; ++i) {
                const Mat<Real>& v = t.val(ctx[i]);
                Real s = 0;
                for (std::size_t j = 0; j < g.size(); ++j) s += g.data[j] * v.data[j];
                dw[i] = s;
                Mat<Real>& gv = t.grad(ctx[i]);
                for (std::size_t j = 0; j < g.size(); ++j) gv.data[j] += w[i] * g.data[j];
            }
            Real dot = 0;
            for (std::size_t i = 0; i < n; ++i) dot += w[i] * dw[i];
            Mat<Real>& gq = t.grad(query);
            for (std::size_t i = 0; i < n; ++i) {
                Real ds = w[i] * (dw[i] - dot);
                const Mat<Real>& v = t.val(ctx[i]);
                Mat<Real>& gv = t.grad(ctx[i]);
                for (std::size_t j = 0; j < q.size(); ++j) {
                    gq.data[j] += ds * v.data[j];
                    gv.data[j] += ds * q.data[j];
                }
            }
        });
        return Attention{id, std::move(w)};
    }

    // ---- backward ------------------------------------------------------

    void backward(Id loss, Real seed = Real(1)) {
        if (backward_done_) fail(ErrorKind::generic, "backward called twice on one tape");
        backward_done_ = true;
        check_shape(val(loss).size() == 1, "backward on non-scalar loss");
        grad(loss).data[0] = seed;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            Node& n = nodes_[i];
            if (n.backward && n.grad.size() != 0) n.backward(*this, i);
        }
        for (const auto& [target, id] : bindings_) {
            const Mat<Real>& g = grad(id);
            for (std::size_t i = 0; i < g.size(); ++i) target->data[i] += g.data[i];
        }
    }

private:
    struct Node {
        Mat<Real> value;
        Mat<Real> grad;
        std::function<void(Tape&, Id)> backward;
    };

    Id record(Mat<Real> value, std::function<void(Tape&, Id)> bw) {
        nodes_.push_back(Node{std::move(value), {}, std::move(bw)});
        return nodes_.size() - 1;
    }

    std::vector<Node> nodes_;
    std::vector<std::pair<Mat<Real>*, Id>> bindings_;
    std::unordered_map<Mat<Real>*, Id> param_ids_;
    bool backward_done_ = false;
};

}  // namespace craft
