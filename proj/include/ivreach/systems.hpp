#pragma once

#include "ivreach/embedding.hpp"

namespace ivreach {

// Kinematic bicycle with state (px, py, phi, v), controls (u1, u2) =
// (acceleration, steering angle) and slip angle beta = atan(tan(u2)/2):
//   px' = v cos(phi + beta),  py' = v sin(phi + beta),
//   phi' = v sin(beta) / lr,  v'  = u1.
// The disturbance slot is kept (width 0) so closed-loop interfaces stay
// uniform.
inline System vehicle_system(double lr = 1.0) {
    GraphBuilder b;
    auto x = b.input("x", 4);
    auto u = b.input("u", 2);
    b.input("w", 0);
    auto phi = b.index(x, 2), v = b.index(x, 3);
    auto u1 = b.index(u, 0), u2 = b.index(u, 1);
    auto beta = b.atan(b.div(b.tan(u2), b.constant(2.0)));
    auto heading = b.add(phi, beta);
    auto dpx = b.mul(v, b.cos(heading));
    auto dpy = b.mul(v, b.sin(heading));
    auto dphi = b.div(b.mul(v, b.sin(beta)), b.constant(lr));
    b.output(b.concat({dpx, dpy, dphi, u1}));
    return System::from_graph(b.build(), 4);
}

// Forced damped pendulum, x = (theta, theta'), torque (1 + w) u:
//   theta''  = ((1 + w) u - b theta') / (m l^2) - (g / l) sin(theta).
inline System pendulum_system(double m = 0.15, double l = 0.5, double b_damp = 0.1,
                              double g = 9.81) {
    GraphBuilder b;
    auto x = b.input("x", 2);
    auto u = b.input("u", 1);
    auto w = b.input("w", 1);
    auto th = b.index(x, 0), om = b.index(x, 1);
    auto torque = b.mul(b.add(b.constant(1.0), b.index(w, 0)), b.index(u, 0));
    auto acc = b.sub(b.div(b.sub(torque, b.mul(b.constant(b_damp), om)),
                           b.constant(m * l * l)),
                     b.mul(b.constant(g / l), b.sin(th)));
    b.output(b.concat({om, acc}));
    return System::from_graph(b.build(), 2);
}

}  // namespace ivreach
