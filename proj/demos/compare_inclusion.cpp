// Compares the natural, Jacobian-based and mixed Jacobian-based inclusion
// functions of f(x) = ((x1+x2)^2, x1+x2+2*x1*x2) on [-0.1,0.1]^2, centered
// at the origin.

#include <cstdio>

#include "ivreach/inclusion.hpp"

using namespace ivreach;

int main() {
    GraphBuilder b;
    auto x = b.input("x", 2);
    auto x1 = b.index(x, 0), x2 = b.index(x, 1);
    auto s = b.add(x1, x2);
    b.output(b.concat({b.pow_int(s, 2), b.add(s, b.mul(b.constant(2.0), b.mul(x1, x2)))}));
    const ExprGraph g = b.build();

    const std::vector<Interval> box = {center_pert({0.0, 0.0}, 0.1)};
    const CenterSpec origin = {Center::point({Tensor::vec({0.0, 0.0})})};

    auto show = [](const char* name, const std::vector<Interval>& out) {
        std::printf("%-6s", name);
        for (std::size_t i = 0; i < out[0].size(); ++i)
            std::printf("  [%+.6f, %+.6f]", out[0].lower()[i], out[0].upper()[i]);
        std::printf("\n");
    };
    show("nat", natural_inclusion(g)(box));
    show("jac", jacobian_inclusion(g, origin)(box));
    show("mixed", mixed_jacobian_inclusion(g, {Ordering::identity(2)}, origin)(box));
    return 0;
}
