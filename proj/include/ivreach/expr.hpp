#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ivreach/dual.hpp"
#include "ivreach/errors.hpp"
#include "ivreach/tensor.hpp"

namespace ivreach {

// Primitive operation ids. Every id has a real evaluation, a minimal
// interval evaluation, and (except abs through zero) an interval
// forward-mode derivative rule.
enum class Op {
    input,
    constant,
    index,
    add,
    sub,
    mul,
    div,
    neg,
    sin,
    cos,
    tan,
    atan,
    sqrt,
    exp,
    tanh,
    abs,
    pow_int,
    matmul,
    concat,
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::input: return "input";
        case Op::constant: return "constant";
        case Op::index: return "index";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::neg: return "neg";
        case Op::sin: return "sin";
        case Op::cos: return "cos";
        case Op::tan: return "tan";
        case Op::atan: return "atan";
        case Op::sqrt: return "sqrt";
        case Op::exp: return "exp";
        case Op::tanh: return "tanh";
        case Op::abs: return "abs";
        case Op::pow_int: return "pow_int";
        case Op::matmul: return "matmul";
        case Op::concat: return "concat";
    }
    return "?";
}

struct InputSlot {
    std::string name;
    std::size_t dim = 0;  // rank-1 length; 0 is a legal (absent) slot
};

struct ExprNode {
    Op op;
    std::vector<int> args;  // operand node ids, always < own id
    int slot = -1;          // Op::input
    std::size_t index = 0;  // Op::index
    int exponent = 0;       // Op::pow_int
    Tensor payload;         // Op::constant
    Shape shape;            // statically inferred
};

// Immutable DAG representation of a pure vector function over the primitive
// set. Nodes are stored in topological order by construction.
class ExprGraph {
public:
    const std::vector<InputSlot>& inputs() const { return inputs_; }
    const std::vector<ExprNode>& nodes() const { return nodes_; }
    const std::vector<int>& outputs() const { return outputs_; }

    int slot_id(std::string_view name) const {
        for (std::size_t i = 0; i < inputs_.size(); ++i)
            if (inputs_[i].name == name) return static_cast<int>(i);
        return -1;
    }
    std::size_t slot_dim(std::string_view name) const {
        const int id = slot_id(name);
        return id < 0 ? 0 : inputs_[id].dim;
    }
    std::size_t total_input_dim() const {
        std::size_t n = 0;
        for (const auto& s : inputs_) n += s.dim;
        return n;
    }
    std::size_t output_dim() const {
        std::size_t m = 0;
        for (int id : outputs_) m += shape_size(nodes_[id].shape);
        return m;
    }

private:
    friend class GraphBuilder;
    std::vector<InputSlot> inputs_;
    std::vector<ExprNode> nodes_;
    std::vector<int> outputs_;
};

namespace detail {
template <class T>
std::vector<TensorT<T>> eval_real_impl(const ExprGraph&, const std::vector<TensorT<T>>&);
}

// Incremental builder with shape inference at node creation and eager
// folding of all-constant nodes.
class GraphBuilder {
public:
    using Ref = int;

    Ref input(std::string name, std::size_t dim) {
        if (g_.slot_id(name) >= 0) throw ShapeInferenceFailure("duplicate input slot " + name);
        const int slot = static_cast<int>(g_.inputs_.size());
        g_.inputs_.push_back(InputSlot{std::move(name), dim});
        ExprNode n;
        n.op = Op::input;
        n.slot = slot;
        n.shape = Shape{dim};
        return push(std::move(n));
    }

    Ref constant(double v) { return constant(Tensor::scalar(v)); }
    Ref constant(Tensor v) {
        ExprNode n;
        n.op = Op::constant;
        n.shape = v.shape();
        n.payload = std::move(v);
        return push(std::move(n));
    }

    Ref index(Ref a, std::size_t i) {
        check(a);
        const auto& s = node(a).shape;
        if (s.size() != 1)
            throw ShapeInferenceFailure("index expects a rank-1 operand, got " + shape_str(s));
        if (i >= s[0]) throw ShapeInferenceFailure("index " + std::to_string(i) + " out of range");
        ExprNode n;
        n.op = Op::index;
        n.args = {a};
        n.index = i;
        n.shape = Shape{};
        return push(std::move(n));
    }

    Ref add(Ref a, Ref b) { return binary(Op::add, a, b); }
    Ref sub(Ref a, Ref b) { return binary(Op::sub, a, b); }
    Ref mul(Ref a, Ref b) { return binary(Op::mul, a, b); }
    Ref div(Ref a, Ref b) { return binary(Op::div, a, b); }

    Ref neg(Ref a) { return unary(Op::neg, a); }
    Ref sin(Ref a) { return unary(Op::sin, a); }
    Ref cos(Ref a) { return unary(Op::cos, a); }
    Ref tan(Ref a) { return unary(Op::tan, a); }
    Ref atan(Ref a) { return unary(Op::atan, a); }
    Ref sqrt(Ref a) { return unary(Op::sqrt, a); }
    Ref exp(Ref a) { return unary(Op::exp, a); }
    Ref tanh(Ref a) { return unary(Op::tanh, a); }
    Ref abs(Ref a) { return unary(Op::abs, a); }

    Ref pow_int(Ref a, int k) {
        check(a);
        ExprNode n;
        n.op = Op::pow_int;
        n.args = {a};
        n.exponent = k;
        n.shape = node(a).shape;
        return push(std::move(n));
    }

    Ref matmul(Ref a, Ref b) {
        check(a);
        check(b);
        const auto& sa = node(a).shape;
        const auto& sb = node(b).shape;
        if (sa.size() == 0 || sb.size() == 0 || sa.size() > 2 || sb.size() > 2)
            throw ShapeInferenceFailure("matmul of " + shape_str(sa) + " @ " + shape_str(sb));
        const std::size_t p = sa.back();
        if (p != sb.front())
            throw ShapeInferenceFailure("matmul inner dims " + shape_str(sa) + " @ " +
                                        shape_str(sb));
        ExprNode n;
        n.op = Op::matmul;
        n.args = {a, b};
        if (sa.size() == 1 && sb.size() == 1)
            n.shape = Shape{};
        else if (sa.size() == 1)
            n.shape = Shape{sb[1]};
        else if (sb.size() == 1)
            n.shape = Shape{sa[0]};
        else
            n.shape = Shape{sa[0], sb[1]};
        return push(std::move(n));
    }

    Ref concat(const std::vector<Ref>& parts) {
        std::size_t total = 0;
        for (Ref r : parts) {
            check(r);
            if (node(r).shape.size() > 1)
                throw ShapeInferenceFailure("concat accepts scalars and vectors only");
            total += shape_size(node(r).shape);
        }
        ExprNode n;
        n.op = Op::concat;
        n.args = parts;
        n.shape = Shape{total};
        return push(std::move(n));
    }

    // Generic entry point by primitive name; used by the textual front end.
    Ref apply(std::string_view prim, const std::vector<Ref>& args, int exponent = 0) {
        auto need = [&](std::size_t k) {
            if (args.size() != k)
                throw ShapeInferenceFailure(std::string(prim) + " expects " + std::to_string(k) +
                                            " operands");
        };
        if (prim == "add") { need(2); return add(args[0], args[1]); }
        if (prim == "sub") { need(2); return sub(args[0], args[1]); }
        if (prim == "mul") { need(2); return mul(args[0], args[1]); }
        if (prim == "div") { need(2); return div(args[0], args[1]); }
        if (prim == "neg") { need(1); return neg(args[0]); }
        if (prim == "sin") { need(1); return sin(args[0]); }
        if (prim == "cos") { need(1); return cos(args[0]); }
        if (prim == "tan") { need(1); return tan(args[0]); }
        if (prim == "atan") { need(1); return atan(args[0]); }
        if (prim == "sqrt") { need(1); return sqrt(args[0]); }
        if (prim == "exp") { need(1); return exp(args[0]); }
        if (prim == "tanh") { need(1); return tanh(args[0]); }
        if (prim == "abs") { need(1); return abs(args[0]); }
        if (prim == "pow_int") { need(1); return pow_int(args[0], exponent); }
        if (prim == "matmul") { need(2); return matmul(args[0], args[1]); }
        throw UnsupportedPrimitive(std::string(prim));
    }

    void output(Ref a) {
        check(a);
        outputs_.push_back(a);
    }

    ExprGraph build() {
        if (outputs_.empty()) throw ShapeInferenceFailure("graph has no outputs");
        g_.outputs_ = outputs_;
        return std::move(g_);
    }

    const Shape& shape_of(Ref a) const { return node(a).shape; }

private:
    Ref binary(Op op, Ref a, Ref b) {
        check(a);
        check(b);
        ExprNode n;
        n.op = op;
        n.args = {a, b};
        n.shape = broadcast_shapes(node(a).shape, node(b).shape);
        return push(std::move(n));
    }
    Ref unary(Op op, Ref a) {
        check(a);
        ExprNode n;
        n.op = op;
        n.args = {a};
        n.shape = node(a).shape;
        return push(std::move(n));
    }

    Ref push(ExprNode n) {
        if (n.op != Op::input && n.op != Op::constant && all_constant(n)) return fold(n);
        g_.nodes_.push_back(std::move(n));
        return static_cast<int>(g_.nodes_.size()) - 1;
    }

    bool all_constant(const ExprNode& n) const {
        for (int a : n.args)
            if (node(a).op != Op::constant) return false;
        return !n.args.empty();
    }

    Ref fold(const ExprNode& n);

    const ExprNode& node(Ref r) const { return g_.nodes_[static_cast<std::size_t>(r)]; }
    void check(Ref r) const {
        if (r < 0 || r >= static_cast<int>(g_.nodes_.size()))
            throw ShapeInferenceFailure("dangling node reference " + std::to_string(r));
    }

    ExprGraph g_;
    std::vector<int> outputs_;
};

inline GraphBuilder::Ref GraphBuilder::fold(const ExprNode& n) {
    auto cv = [&](std::size_t i) -> const Tensor& { return node(n.args[i]).payload; };
    auto zip = [&](auto&& f) { return tensor_zip(cv(0), cv(1), f); };
    auto map = [&](auto&& f) { return tensor_map(cv(0), f); };
    Tensor v;
    switch (n.op) {
        case Op::index: v = Tensor::scalar(cv(0)[n.index]); break;
        case Op::add: v = zip([](double a, double b) { return a + b; }); break;
        case Op::sub: v = zip([](double a, double b) { return a - b; }); break;
        case Op::mul: v = zip([](double a, double b) { return a * b; }); break;
        case Op::div: v = zip([](double a, double b) { return a / b; }); break;
        case Op::neg: v = map([](double a) { return -a; }); break;
        case Op::sin: v = map([](double a) { return std::sin(a); }); break;
        case Op::cos: v = map([](double a) { return std::cos(a); }); break;
        case Op::tan: v = map([](double a) { return std::tan(a); }); break;
        case Op::atan: v = map([](double a) { return std::atan(a); }); break;
        case Op::sqrt:
            v = map([](double a) {
                if (a < 0.0) throw DomainError("sqrt of negative constant");
                return std::sqrt(a);
            });
            break;
        case Op::exp: v = map([](double a) { return std::exp(a); }); break;
        case Op::tanh: v = map([](double a) { return std::tanh(a); }); break;
        case Op::abs: v = map([](double a) { return std::abs(a); }); break;
        case Op::pow_int:
            v = map([&](double a) { return num::pow_i(a, n.exponent); });
            break;
        case Op::matmul: v = tensor_matmul(cv(0), cv(1)); break;
        case Op::concat: {
            std::vector<double> out;
            for (int a : n.args)
                for (double x : node(a).payload.data()) out.push_back(x);
            v = Tensor::vec(std::move(out));
            break;
        }
        default: throw ShapeInferenceFailure("cannot fold " + std::string(op_name(n.op)));
    }
    return constant(std::move(v));
}

}  // namespace ivreach
