#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ivreach/expr_eval.hpp"

namespace ivreach {

// Permutation of the concatenated input coordinates (0-based).
struct Ordering {
    std::vector<std::size_t> perm;

    static Ordering identity(std::size_t n) {
        Ordering o;
        o.perm.resize(n);
        for (std::size_t i = 0; i < n; ++i) o.perm[i] = i;
        return o;
    }

    void validate(std::size_t n) const {
        if (perm.size() != n)
            throw InvalidOrdering("ordering length " + std::to_string(perm.size()) +
                                  " != total input dimension " + std::to_string(n));
        std::vector<bool> seen(n, false);
        for (std::size_t p : perm) {
            if (p >= n || seen[p]) throw InvalidOrdering("not a permutation");
            seen[p] = true;
        }
    }
};

// A center for the first-order forms: an explicit per-slot point, the box
// midpoint (resolved per call), or a box corner selected by sign vectors.
class Center {
public:
    enum class Kind { midpoint, point, corner };

    static Center midpoint() { return Center(Kind::midpoint); }
    static Center point(std::vector<Tensor> per_slot) {
        Center c(Kind::point);
        c.point_ = std::move(per_slot);
        return c;
    }
    static Center corner(std::vector<std::vector<bool>> upper_per_slot) {
        Center c(Kind::corner);
        c.upper_ = std::move(upper_per_slot);
        return c;
    }

    Kind kind() const { return kind_; }

    template <class T>
    std::vector<TensorT<T>> resolve(const std::vector<IntervalT<T>>& box) const {
        std::vector<TensorT<T>> out;
        out.reserve(box.size());
        switch (kind_) {
            case Kind::midpoint:
                for (const auto& b : box) out.push_back(b.midpoint());
                break;
            case Kind::point: {
                if (point_.size() != box.size())
                    throw ShapeMismatch("center has " + std::to_string(point_.size()) +
                                        " slots, box has " + std::to_string(box.size()));
                for (const auto& p : point_) out.push_back(tensor_cast<T>(p));
                break;
            }
            case Kind::corner: {
                if (upper_.size() != box.size())
                    throw ShapeMismatch("corner has " + std::to_string(upper_.size()) +
                                        " slots, box has " + std::to_string(box.size()));
                for (std::size_t s = 0; s < box.size(); ++s) {
                    if (upper_[s].size() != box[s].size())
                        throw ShapeMismatch("corner sign vector length mismatch");
                    TensorT<T> c(box[s].shape());
                    for (std::size_t i = 0; i < c.size(); ++i)
                        c[i] = upper_[s][i] ? box[s].upper()[i] : box[s].lower()[i];
                    out.push_back(std::move(c));
                }
                break;
            }
        }
        return out;
    }

    // Strict membership check used by the public first-order constructors.
    template <class T>
    void require_inside(const std::vector<IntervalT<T>>& box) const {
        if (kind_ != Kind::point) return;  // midpoint/corner lie in the box by construction
        auto pts = resolve(box);
        for (std::size_t s = 0; s < box.size(); ++s)
            if (!contains(box[s], pts[s]))
                throw CenterOutsideBox("explicit center leaves the evaluation box in slot " +
                                       std::to_string(s));
    }

private:
    explicit Center(Kind k) : kind_(k) {}
    Kind kind_;
    std::vector<Tensor> point_;
    std::vector<std::vector<bool>> upper_;
};

using CenterSpec = std::vector<Center>;

// Callable enclosure contract: interval per input slot -> interval per
// graph output.
class InclusionFn {
public:
    using Fn = std::function<std::vector<Interval>(const std::vector<Interval>&)>;

    InclusionFn() = default;
    InclusionFn(Fn fn, bool monotone, bool thin)
        : fn_(std::move(fn)), monotone_(monotone), thin_(thin) {}

    std::vector<Interval> operator()(const std::vector<Interval>& slots) const {
        return fn_(slots);
    }
    bool monotone() const { return monotone_; }
    bool thin() const { return thin_; }

private:
    Fn fn_;
    bool monotone_ = false;
    bool thin_ = false;
};

namespace detail {

// f(center), flattened across outputs.
template <class T>
TensorT<T> eval_flat_at(const ExprGraph& g, const std::vector<TensorT<T>>& point) {
    auto outs = eval_real(g, point);
    std::vector<T> flat;
    flat.reserve(g.output_dim());
    for (const auto& o : outs)
        for (const T& v : o.data()) flat.push_back(v);
    return TensorT<T>::vec(std::move(flat));
}

// sum_slots M_s ([box_s] - c_s) + f(c), on the flattened output.
template <class T>
IntervalT<T> first_order_enclosure(const std::vector<IntervalT<T>>& M,
                                   const std::vector<IntervalT<T>>& box,
                                   const std::vector<TensorT<T>>& center,
                                   const TensorT<T>& f_center) {
    IntervalT<T> acc = IntervalT<T>::thin(f_center);
    for (std::size_t s = 0; s < box.size(); ++s) {
        if (box[s].size() == 0) continue;
        const IntervalT<T> dev = box[s] - IntervalT<T>::thin(center[s]);
        acc = acc + iv_matmul(M[s], dev);
    }
    return acc;
}

// Slice a flat m-vector enclosure back into per-output tensors.
inline std::vector<Interval> split_outputs(const ExprGraph& g, const Interval& flat) {
    std::vector<Interval> out;
    std::size_t at = 0;
    for (int id : g.outputs()) {
        const Shape& s = g.nodes()[static_cast<std::size_t>(id)].shape;
        const std::size_t k = shape_size(s);
        Tensor lo(s), hi(s);
        for (std::size_t i = 0; i < k; ++i) {
            lo[i] = flat.lower()[at + i];
            hi[i] = flat.upper()[at + i];
        }
        at += k;
        out.push_back(Interval::unchecked(std::move(lo), std::move(hi)));
    }
    return out;
}

// Column-by-column interval Jacobian matrices: column perm[i] is taken from
// the Jacobian enclosure over the box whose coordinates perm[0..i] span
// their full range while the rest stay pinned at the center. The center may
// lie outside the box; the enclosure of part (i) remains valid because the
// evaluation boxes are anchored at the center itself.
template <class T>
std::vector<IntervalT<T>> mjac_columns(const ExprGraph& g, const std::vector<IntervalT<T>>& box,
                                       const std::vector<TensorT<T>>& center,
                                       const Ordering& ord) {
    const std::size_t nslots = g.inputs().size();
    const std::size_t ntot = g.total_input_dim();
    ord.validate(ntot);
    // global coordinate -> (slot, local index)
    std::vector<std::pair<std::size_t, std::size_t>> where(ntot);
    {
        std::size_t at = 0;
        for (std::size_t s = 0; s < nslots; ++s)
            for (std::size_t i = 0; i < g.inputs()[s].dim; ++i) where[at++] = {s, i};
    }
    const std::size_t m = g.output_dim();
    std::vector<TensorT<T>> mlo, mhi;
    for (std::size_t s = 0; s < nslots; ++s) {
        mlo.push_back(TensorT<T>::zeros(Shape{m, g.inputs()[s].dim}));
        mhi.push_back(TensorT<T>::zeros(Shape{m, g.inputs()[s].dim}));
    }
    // start from the all-pinned box at the center, release one coordinate
    // per ordering step
    std::vector<TensorT<T>> curlo, curhi;
    for (std::size_t s = 0; s < nslots; ++s) {
        curlo.push_back(center[s]);
        curhi.push_back(center[s]);
    }
    for (std::size_t i = 0; i < ntot; ++i) {
        const std::size_t col = ord.perm[i];
        const auto [s, li] = where[col];
        curlo[s][li] = box[s].lower()[li];
        curhi[s][li] = box[s].upper()[li];
        std::vector<IntervalT<T>> cur;
        for (std::size_t k = 0; k < nslots; ++k)
            cur.push_back(IntervalT<T>::unchecked(curlo[k], curhi[k]));
        auto jac = eval_jacobian_interval(g, cur, {static_cast<int>(s)});
        for (std::size_t r = 0; r < m; ++r) {
            mlo[s](r, li) = jac.per_slot[0].lower()(r, li);
            mhi[s](r, li) = jac.per_slot[0].upper()(r, li);
        }
    }
    std::vector<IntervalT<T>> out;
    out.reserve(nslots);
    for (std::size_t s = 0; s < nslots; ++s)
        out.push_back(IntervalT<T>::unchecked(std::move(mlo[s]), std::move(mhi[s])));
    return out;
}

// Mixed first-order enclosure for one (center, ordering) pair, flattened.
template <class T>
IntervalT<T> mixed_enclosure(const ExprGraph& g, const std::vector<IntervalT<T>>& box,
                             const std::vector<TensorT<T>>& center, const Ordering& ord) {
    auto M = mjac_columns(g, box, center, ord);
    return first_order_enclosure(M, box, center, eval_flat_at(g, center));
}

}  // namespace detail

// Natural inclusion function: minimal inclusion functions composed along
// the graph. Monotone and thin.
inline InclusionFn natural_inclusion(const ExprGraph& g) {
    return InclusionFn([g](const std::vector<Interval>& slots) { return eval_interval(g, slots); },
                       /*monotone=*/true, /*thin=*/true);
}

// Jacobian-based inclusion function [J]([x]-c) + f(c). With several centers
// the per-center enclosures are intersected. Explicit centers must lie in
// the box at every call.
inline InclusionFn jacobian_inclusion(const ExprGraph& g, CenterSpec centers = {Center::midpoint()}) {
    if (centers.empty()) centers = {Center::midpoint()};
    return InclusionFn(
        [g, centers](const std::vector<Interval>& box) {
            std::vector<Interval> acc;
            bool first = true;
            auto jac = eval_jacobian_interval(g, box);
            for (const Center& c : centers) {
                c.require_inside(box);
                auto pts = c.resolve(box);
                Interval enc = detail::first_order_enclosure(jac.per_slot, box, pts,
                                                             detail::eval_flat_at(g, pts));
                if (first) {
                    acc = detail::split_outputs(g, enc);
                    first = false;
                } else {
                    auto cur = detail::split_outputs(g, enc);
                    for (std::size_t i = 0; i < acc.size(); ++i)
                        acc[i] = iv_intersect(acc[i], cur[i]);
                }
            }
            return acc;
        },
        /*monotone=*/false, /*thin=*/true);
}

// The interval matrices of the mixed Jacobian-based form, one entry per
// (center, ordering) pair, each a per-slot list of (m x dim_slot) matrices.
inline std::vector<std::vector<Interval>> mixed_jacobian_matrices(
    const ExprGraph& g, const std::vector<Ordering>& orderings, const CenterSpec& centers,
    const std::vector<Interval>& box) {
    detail::check_bindings(g, box);
    std::vector<std::vector<Interval>> out;
    for (const Center& c : centers) {
        c.require_inside(box);
        auto pts = c.resolve(box);
        for (const Ordering& o : orderings) out.push_back(detail::mjac_columns(g, box, pts, o));
    }
    return out;
}

inline std::vector<std::vector<Interval>> mixed_jacobian_matrices(const ExprGraph& g,
                                                                  const std::vector<Interval>& box) {
    return mixed_jacobian_matrices(g, {Ordering::identity(g.total_input_dim())},
                                   {Center::midpoint()}, box);
}

// Mixed Jacobian-based inclusion function; (center, ordering) pairs are
// combined by intersection.
inline InclusionFn mixed_jacobian_inclusion(const ExprGraph& g, std::vector<Ordering> orderings = {},
                                            CenterSpec centers = {Center::midpoint()}) {
    if (orderings.empty()) orderings = {Ordering::identity(g.total_input_dim())};
    if (centers.empty()) centers = {Center::midpoint()};
    return InclusionFn(
        [g, orderings, centers](const std::vector<Interval>& box) {
            std::vector<Interval> acc;
            bool first = true;
            for (const Center& c : centers) {
                c.require_inside(box);
                auto pts = c.resolve(box);
                for (const Ordering& o : orderings) {
                    Interval enc = detail::mixed_enclosure(g, box, pts, o);
                    if (first) {
                        acc = detail::split_outputs(g, enc);
                        first = false;
                    } else {
                        auto cur = detail::split_outputs(g, enc);
                        for (std::size_t i = 0; i < acc.size(); ++i)
                            acc[i] = iv_intersect(acc[i], cur[i]);
                    }
                }
            }
            return acc;
        },
        /*monotone=*/false, /*thin=*/true);
}

}  // namespace ivreach
