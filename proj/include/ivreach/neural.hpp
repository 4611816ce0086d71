#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ivreach/embedding.hpp"

namespace ivreach {

enum class Activation { relu, identity };

struct Layer {
    Tensor W;  // (out x in), row-major
    Tensor b;  // (out)
    Activation act = Activation::identity;
};

// Feedforward network: affine layers, each optionally followed by relu.
class NeuralNetwork {
public:
    explicit NeuralNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw SchemaError("network has no layers");
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            const Layer& l = layers_[k];
            if (l.W.rank() != 2) throw SchemaError("layer weights must be a matrix");
            if (l.b.rank() != 1 || l.b.size() != l.W.dim(0))
                throw DimensionMismatch("bias length " + std::to_string(l.b.size()) +
                                        " != weight rows " + std::to_string(l.W.dim(0)));
            for (double v : l.W.data())
                if (!std::isfinite(v)) throw SchemaError("non-finite weight");
            for (double v : l.b.data())
                if (!std::isfinite(v)) throw SchemaError("non-finite bias");
            if (k > 0 && l.W.dim(1) != layers_[k - 1].W.dim(0))
                throw DimensionMismatch("layer " + std::to_string(k) + " expects input " +
                                        std::to_string(l.W.dim(1)) + ", previous layer outputs " +
                                        std::to_string(layers_[k - 1].W.dim(0)));
        }
    }

    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t input_dim() const { return layers_.front().W.dim(1); }
    std::size_t output_dim() const { return layers_.back().W.dim(0); }

    Tensor forward(const Tensor& x) const {
        if (x.rank() != 1 || x.size() != input_dim())
            throw DimensionMismatch("network input must be a vector of length " +
                                    std::to_string(input_dim()));
        Tensor h = x;
        for (const Layer& l : layers_) {
            Tensor z = tensor_matmul(l.W, h) + l.b;
            if (l.act == Activation::relu)
                z = tensor_map(z, [](double v) { return v > 0.0 ? v : 0.0; });
            h = std::move(z);
        }
        return h;
    }

private:
    std::vector<Layer> layers_;
};

inline NeuralNetwork network_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array() ||
        doc["layers"].empty())
        throw SchemaError("weights document must be an object with a non-empty 'layers' array");
    std::vector<Layer> layers;
    for (const auto& jl : doc["layers"]) {
        if (!jl.is_object() || !jl.contains("weights") || !jl.contains("bias"))
            throw SchemaError("each layer needs 'weights' and 'bias'");
        const auto& jw = jl["weights"];
        if (!jw.is_array() || jw.empty() || !jw[0].is_array())
            throw SchemaError("'weights' must be a 2-D array");
        const std::size_t rows = jw.size();
        const std::size_t cols = jw[0].size();
        std::vector<double> w;
        w.reserve(rows * cols);
        for (const auto& row : jw) {
            if (!row.is_array() || row.size() != cols)
                throw SchemaError("ragged 'weights' rows");
            for (const auto& v : row) {
                if (!v.is_number()) throw SchemaError("non-numeric weight entry");
                w.push_back(v.get<double>());
            }
        }
        const auto& jb = jl["bias"];
        if (!jb.is_array()) throw SchemaError("'bias' must be a 1-D array");
        std::vector<double> b;
        for (const auto& v : jb) {
            if (!v.is_number()) throw SchemaError("non-numeric bias entry");
            b.push_back(v.get<double>());
        }
        Activation act = Activation::identity;
        if (jl.contains("activation")) {
            const std::string a = jl["activation"].get<std::string>();
            if (a == "relu")
                act = Activation::relu;
            else if (a == "identity")
                act = Activation::identity;
            else
                throw UnsupportedActivation(a);
        }
        layers.push_back(Layer{Tensor::mat(rows, cols, std::move(w)), Tensor::vec(std::move(b)), act});
    }
    return NeuralNetwork(std::move(layers));
}

inline NeuralNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open weights document " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("invalid JSON in " + path + ": " + e.what());
    }
    return network_from_json(doc);
}

inline nlohmann::json network_to_json(const NeuralNetwork& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& l : net.layers()) {
        nlohmann::json jw = nlohmann::json::array();
        for (std::size_t i = 0; i < l.W.dim(0); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t j = 0; j < l.W.dim(1); ++j) row.push_back(l.W(i, j));
            jw.push_back(std::move(row));
        }
        nlohmann::json jb = nlohmann::json::array();
        for (std::size_t i = 0; i < l.b.size(); ++i) jb.push_back(l.b[i]);
        layers.push_back({{"weights", std::move(jw)},
                          {"bias", std::move(jb)},
                          {"activation", l.act == Activation::relu ? "relu" : "identity"}});
    }
    return nlohmann::json{{"layers", std::move(layers)}};
}

// Interval bound propagation: the natural inclusion through the layers.
inline Interval nn_ibp(const NeuralNetwork& net, const Interval& box) {
    if (box.rank() != 1 || box.size() != net.input_dim())
        throw DimensionMismatch("ibp input box dimension");
    Interval h = box;
    for (const Layer& l : net.layers()) {
        Interval z = iv_matmul(Interval::thin(l.W), h) + Interval::thin(l.b);
        if (l.act == Activation::relu)
            z = iv_map(z, [](double lo, double hi) {
                return std::pair<double, double>{std::max(lo, 0.0), std::max(hi, 0.0)};
            });
        h = std::move(z);
    }
    return h;
}

namespace detail {

inline Tensor pos_part(const Tensor& a) {
    return tensor_map(a, [](double v) { return v > 0.0 ? v : 0.0; });
}
inline Tensor neg_part(const Tensor& a) {
    return tensor_map(a, [](double v) { return v < 0.0 ? v : 0.0; });
}

// Pre-activation interval bounds per layer (natural inclusion prefixes).
inline std::vector<Interval> preactivation_boxes(const NeuralNetwork& net, const Interval& box) {
    std::vector<Interval> pre;
    Interval h = box;
    for (const Layer& l : net.layers()) {
        Interval z = iv_matmul(Interval::thin(l.W), h) + Interval::thin(l.b);
        pre.push_back(z);
        if (l.act == Activation::relu)
            z = iv_map(z, [](double lo, double hi) {
                return std::pair<double, double>{std::max(lo, 0.0), std::max(hi, 0.0)};
            });
        h = std::move(z);
    }
    return pre;
}

// scale columns: out(i,j) = a(i,j) * s(j)
inline Tensor col_scale(const Tensor& a, const Tensor& s) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) out(i, j) = a(i, j) * s[j];
    return out;
}

}  // namespace detail

struct CrownOptions {
    // Lower-line slope for an unstable relu. `zero` keeps the concretized
    // output at least as tight as plain interval propagation; `adaptive`
    // picks slope 1 when |l| < |u| (area-minimizing, ties to 0).
    enum class LowerSlope { zero, adaptive };
    LowerSlope lower_slope = LowerSlope::zero;
};

struct CrownBounds {
    Tensor C_lower, C_upper;  // (m x n)
    Tensor d_lower, d_upper;  // (m)

    Interval concretize(const Interval& box) const {
        const Tensor lo = tensor_matmul(detail::pos_part(C_lower), box.lower()) +
                          tensor_matmul(detail::neg_part(C_lower), box.upper()) + d_lower;
        const Tensor hi = tensor_matmul(detail::pos_part(C_upper), box.upper()) +
                          tensor_matmul(detail::neg_part(C_upper), box.lower()) + d_upper;
        return Interval::make(lo, hi);
    }
};

struct FastlinBounds {
    Tensor C;                 // (m x n), shared slope
    Tensor d_lower, d_upper;  // (m)

    Interval concretize(const Interval& box) const {
        const Tensor lo = tensor_matmul(detail::pos_part(C), box.lower()) +
                          tensor_matmul(detail::neg_part(C), box.upper()) + d_lower;
        const Tensor hi = tensor_matmul(detail::pos_part(C), box.upper()) +
                          tensor_matmul(detail::neg_part(C), box.lower()) + d_upper;
        return Interval::make(lo, hi);
    }
};

// Backward affine bound propagation with per-neuron relu relaxations.
// Unstable neurons use the chord u/(u-l) above and a 0- or 1-slope line
// below; stable neurons are exact.
inline CrownBounds crown(const NeuralNetwork& net, const Interval& box, CrownOptions opts = {}) {
    if (box.rank() != 1 || box.size() != net.input_dim())
        throw DimensionMismatch("crown input box dimension");
    const auto pre = detail::preactivation_boxes(net, box);
    const auto& layers = net.layers();
    const std::size_t m = net.output_dim();

    Tensor Au(Shape{m, m}), Al(Shape{m, m});
    for (std::size_t i = 0; i < m; ++i) {
        Au(i, i) = 1.0;
        Al(i, i) = 1.0;
    }
    Tensor cu = Tensor::zeros(Shape{m}), cl = Tensor::zeros(Shape{m});

    for (std::size_t k = layers.size(); k-- > 0;) {
        const Layer& l = layers[k];
        if (l.act == Activation::relu) {
            const std::size_t w = pre[k].size();
            Tensor slope_lo(Shape{w}), slope_hi(Shape{w}), icpt_lo(Shape{w}), icpt_hi(Shape{w});
            for (std::size_t j = 0; j < w; ++j) {
                const double lj = pre[k].lower()[j], uj = pre[k].upper()[j];
                if (lj >= 0.0) {
                    slope_lo[j] = slope_hi[j] = 1.0;
                    icpt_lo[j] = icpt_hi[j] = 0.0;
                } else if (uj <= 0.0) {
                    slope_lo[j] = slope_hi[j] = 0.0;
                    icpt_lo[j] = icpt_hi[j] = 0.0;
                } else {
                    const double s = uj / (uj - lj);
                    slope_hi[j] = s;
                    icpt_hi[j] = -uj * lj / (uj - lj);
                    const bool one = opts.lower_slope == CrownOptions::LowerSlope::adaptive &&
                                     std::abs(lj) < std::abs(uj);
                    slope_lo[j] = one ? 1.0 : 0.0;
                    icpt_lo[j] = 0.0;
                }
            }
            const Tensor Aup = detail::pos_part(Au), Aun = detail::neg_part(Au);
            const Tensor Alp = detail::pos_part(Al), Aln = detail::neg_part(Al);
            cu = cu + tensor_matmul(Aup, icpt_hi) + tensor_matmul(Aun, icpt_lo);
            cl = cl + tensor_matmul(Alp, icpt_lo) + tensor_matmul(Aln, icpt_hi);
            Au = detail::col_scale(Aup, slope_hi) + detail::col_scale(Aun, slope_lo);
            Al = detail::col_scale(Alp, slope_lo) + detail::col_scale(Aln, slope_hi);
        }
        cu = cu + tensor_matmul(Au, l.b);
        cl = cl + tensor_matmul(Al, l.b);
        Au = tensor_matmul(Au, l.W);
        Al = tensor_matmul(Al, l.W);
    }
    return CrownBounds{std::move(Al), std::move(Au), std::move(cl), std::move(cu)};
}

// Fast-Lin: both relaxation lines share the chord slope, so a single C
// propagates with two offsets.
inline FastlinBounds fastlin(const NeuralNetwork& net, const Interval& box) {
    if (box.rank() != 1 || box.size() != net.input_dim())
        throw DimensionMismatch("fastlin input box dimension");
    const auto pre = detail::preactivation_boxes(net, box);
    const auto& layers = net.layers();
    const std::size_t m = net.output_dim();

    Tensor A(Shape{m, m});
    for (std::size_t i = 0; i < m; ++i) A(i, i) = 1.0;
    Tensor cu = Tensor::zeros(Shape{m}), cl = Tensor::zeros(Shape{m});

    for (std::size_t k = layers.size(); k-- > 0;) {
        const Layer& l = layers[k];
        if (l.act == Activation::relu) {
            const std::size_t w = pre[k].size();
            Tensor slope(Shape{w}), icpt_hi(Shape{w});
            for (std::size_t j = 0; j < w; ++j) {
                const double lj = pre[k].lower()[j], uj = pre[k].upper()[j];
                if (lj >= 0.0) {
                    slope[j] = 1.0;
                    icpt_hi[j] = 0.0;
                } else if (uj <= 0.0) {
                    slope[j] = 0.0;
                    icpt_hi[j] = 0.0;
                } else {
                    slope[j] = uj / (uj - lj);
                    icpt_hi[j] = -uj * lj / (uj - lj);
                }
            }
            cu = cu + tensor_matmul(detail::pos_part(A), icpt_hi);
            cl = cl + tensor_matmul(detail::neg_part(A), icpt_hi);
            A = detail::col_scale(A, slope);
        }
        cu = cu + tensor_matmul(A, l.b);
        cl = cl + tensor_matmul(A, l.b);
        A = tensor_matmul(A, l.W);
    }
    return FastlinBounds{std::move(A), std::move(cl), std::move(cu)};
}

// Corner of the state box for the mixed-cornered closed-loop form; control
// and disturbance corners inherit a uniform state pattern and default to
// the lower corner otherwise.
struct CornerSigns {
    std::vector<bool> x_upper;

    static CornerSigns lower(std::size_t n) { return CornerSigns{std::vector<bool>(n, false)}; }
    static CornerSigns upper(std::size_t n) { return CornerSigns{std::vector<bool>(n, true)}; }

    bool uniform_upper() const {
        for (bool b : x_upper)
            if (!b) return false;
        return !x_upper.empty();
    }
};

namespace detail {

inline Tensor select_corner(const Interval& box, bool upper) {
    Tensor c(box.shape());
    for (std::size_t i = 0; i < c.size(); ++i)
        c[i] = upper ? box.upper()[i] : box.lower()[i];
    return c;
}

// column selection: col i from lo-matrix when pick_lo[i], else hi-matrix
inline Tensor select_columns(const Interval& M, const std::vector<bool>& pick_hi) {
    Tensor out(M.shape());
    for (std::size_t i = 0; i < M.shape()[0]; ++i)
        for (std::size_t j = 0; j < M.shape()[1]; ++j)
            out(i, j) = pick_hi[j] ? M.upper()(i, j) : M.lower()(i, j);
    return out;
}

inline Interval sanitize_pair(Tensor lo, Tensor hi) {
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (lo[i] > hi[i]) {
            const double gap = lo[i] - hi[i];
            if (gap > 1e-9 * std::max(1.0, std::max(std::abs(lo[i]), std::abs(hi[i]))))
                throw EmptyIntersection("closed-loop bound inversion");
            lo[i] = hi[i] = 0.5 * (lo[i] + hi[i]);
        }
    }
    return Interval::unchecked(std::move(lo), std::move(hi));
}

}  // namespace detail

// Mixed-cornered closed-loop inclusion function for x' = f(x, pi(x), w):
// corner-centered mixed Jacobian matrices combined with the affine CROWN
// bounds of the controller, keeping the result affine in (xl, xu).
class ClosedLoopInclusion {
public:
    ClosedLoopInclusion(System sys, NeuralNetwork net, CornerSigns corner, Ordering ordering,
                        CrownOptions crown_opts = {})
        : sys_(std::move(sys)),
          net_(std::move(net)),
          corner_(std::move(corner)),
          ord_(std::move(ordering)),
          crown_opts_(crown_opts) {
        if (sys_.slot_u < 0) throw SignatureMismatch("closed loop needs a control slot");
        if (net_.input_dim() != sys_.xlen)
            throw DimensionMismatch("network input width != state dimension");
        if (net_.output_dim() != sys_.ulen())
            throw DimensionMismatch("network output width != control dimension");
        if (corner_.x_upper.size() != sys_.xlen)
            throw DimensionMismatch("corner sign vector length != state dimension");
        ord_.validate(sys_.f.total_input_dim());
    }

    Interval operator()(const Interval& x, const Interval& w) const {
        const std::size_t n = sys_.xlen, p = sys_.ulen(), q = sys_.wlen();
        if (x.size() != n) throw DimensionMismatch("state box dimension");
        if (w.size() != q) throw DimensionMismatch("disturbance box dimension");

        const CrownBounds cb = crown(net_, x, crown_opts_);
        const Interval u = cb.concretize(x);

        const bool up_all = corner_.uniform_upper();
        const std::vector<bool>& sx = corner_.x_upper;
        const std::vector<bool> su(p, up_all), sw(q, up_all);

        // centers at the selected corner
        Tensor xc(Shape{n}), uc(Shape{p}), wc(Shape{q});
        for (std::size_t i = 0; i < n; ++i) xc[i] = sx[i] ? x.upper()[i] : x.lower()[i];
        for (std::size_t j = 0; j < p; ++j) uc[j] = su[j] ? u.upper()[j] : u.lower()[j];
        for (std::size_t k = 0; k < q; ++k) wc[k] = sw[k] ? w.upper()[k] : w.lower()[k];

        std::vector<Interval> box(sys_.f.inputs().size());
        std::vector<Tensor> center(sys_.f.inputs().size());
        box[sys_.slot_x] = x;
        center[sys_.slot_x] = xc;
        box[sys_.slot_u] = u;
        center[sys_.slot_u] = uc;
        if (sys_.slot_w >= 0) {
            box[sys_.slot_w] = w;
            center[sys_.slot_w] = wc;
        }
        if (sys_.slot_t >= 0) {
            box[sys_.slot_t] = Interval::thin(Tensor::vec({0.0}));
            center[sys_.slot_t] = Tensor::vec({0.0});
        }
        const auto M = detail::mjac_columns(sys_.f, box, center, ord_);
        const Interval& Mx = M[sys_.slot_x];
        const Interval& Mu = M[sys_.slot_u];

        // effective per-column matrices: a lower-corner coordinate deviates
        // upward, so the lower bound takes the lower matrix column there
        std::vector<bool> hi_for_lo_x(n), hi_for_up_x(n);
        for (std::size_t i = 0; i < n; ++i) {
            hi_for_lo_x[i] = sx[i];
            hi_for_up_x[i] = !sx[i];
        }
        const Tensor Gx_lo = detail::select_columns(Mx, hi_for_lo_x);
        const Tensor Gx_up = detail::select_columns(Mx, hi_for_up_x);
        std::vector<bool> hi_for_lo_u(p), hi_for_up_u(p);
        for (std::size_t j = 0; j < p; ++j) {
            hi_for_lo_u[j] = su[j];
            hi_for_up_u[j] = !su[j];
        }
        const Tensor Gu_lo = detail::select_columns(Mu, hi_for_lo_u);
        const Tensor Gu_up = detail::select_columns(Mu, hi_for_up_u);

        const Tensor Gu_lo_p = detail::pos_part(Gu_lo), Gu_lo_n = detail::neg_part(Gu_lo);
        const Tensor Gu_up_p = detail::pos_part(Gu_up), Gu_up_n = detail::neg_part(Gu_up);

        const Tensor H_lo = Gx_lo + tensor_matmul(Gu_lo_p, cb.C_lower) +
                            tensor_matmul(Gu_lo_n, cb.C_upper);
        const Tensor H_up = Gx_up + tensor_matmul(Gu_up_p, cb.C_upper) +
                            tensor_matmul(Gu_up_n, cb.C_lower);

        const Tensor fc = detail::eval_flat_at(sys_.f, center);

        Tensor lo = tensor_matmul(detail::pos_part(H_lo), x.lower()) +
                    tensor_matmul(detail::neg_part(H_lo), x.upper()) -
                    tensor_matmul(Gx_lo, xc) - tensor_matmul(Gu_lo, uc) +
                    tensor_matmul(Gu_lo_p, cb.d_lower) + tensor_matmul(Gu_lo_n, cb.d_upper) + fc;
        Tensor hi = tensor_matmul(detail::pos_part(H_up), x.upper()) +
                    tensor_matmul(detail::neg_part(H_up), x.lower()) -
                    tensor_matmul(Gx_up, xc) - tensor_matmul(Gu_up, uc) +
                    tensor_matmul(Gu_up_p, cb.d_upper) + tensor_matmul(Gu_up_n, cb.d_lower) + fc;

        if (q > 0 && sys_.slot_w >= 0) {
            const Interval& Mw = M[sys_.slot_w];
            std::vector<bool> hi_for_lo_w(q), hi_for_up_w(q);
            for (std::size_t k = 0; k < q; ++k) {
                hi_for_lo_w[k] = sw[k];
                hi_for_up_w[k] = !sw[k];
            }
            const Tensor Gw_lo = detail::select_columns(Mw, hi_for_lo_w);
            const Tensor Gw_up = detail::select_columns(Mw, hi_for_up_w);
            const Tensor dev_lo = w.lower() - wc, dev_hi = w.upper() - wc;
            lo = lo + tensor_matmul(detail::pos_part(Gw_lo), dev_lo) +
                 tensor_matmul(detail::neg_part(Gw_lo), dev_hi);
            hi = hi + tensor_matmul(detail::pos_part(Gw_up), dev_hi) +
                 tensor_matmul(detail::neg_part(Gw_up), dev_lo);
        }
        return detail::sanitize_pair(std::move(lo), std::move(hi));
    }

    IntervalField field() const {
        auto self = *this;
        return [self](double, const Interval& x, const Interval& w) { return self(x, w); };
    }

    // Slot contract (xl,xu,wl,wu) -> state derivative enclosure.
    InclusionFn fn() const {
        auto self = *this;
        return InclusionFn(
            [self](const std::vector<Interval>& slots) {
                if (slots.size() != 2) throw SignatureMismatch("expected slots (x, w)");
                return std::vector<Interval>{self(slots[0], slots[1])};
            },
            /*monotone=*/false, /*thin=*/true);
    }

    const NeuralNetwork& network() const { return net_; }
    const System& system() const { return sys_; }

private:
    System sys_;
    NeuralNetwork net_;
    CornerSigns corner_;
    Ordering ord_;
    CrownOptions crown_opts_;
};

inline ClosedLoopInclusion closed_loop_nn_inclusion(System sys, NeuralNetwork net,
                                                    CornerSigns corner, Ordering ordering,
                                                    CrownOptions opts = {}) {
    return ClosedLoopInclusion(std::move(sys), std::move(net), std::move(corner),
                               std::move(ordering), opts);
}

}  // namespace ivreach
