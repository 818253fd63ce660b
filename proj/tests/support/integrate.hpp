#pragma once

// Independent numeric oracle for the closed-form solution: classic RK4 on
// dr/dt = drift(r) with a fixed fine step. Deliberately knows nothing about
// the closed form it checks.

#include <algorithm>
#include <cmath>

#include "ssb/dynamics.hpp"

namespace ssb_test {

inline double rk4_integrate(const ssb::SsbParams& p, double r0, double t_span,
                            double dt = 1e-3) {
    double r = r0;
    double remaining = t_span;
    while (remaining > 0.0) {
        double h = std::min(dt, remaining);
        double k1 = ssb::drift(p, r);
        double k2 = ssb::drift(p, r + 0.5 * h * k1);
        double k3 = ssb::drift(p, r + 0.5 * h * k2);
        double k4 = ssb::drift(p, r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        remaining -= h;
    }
    return r;
}

} // namespace ssb_test
