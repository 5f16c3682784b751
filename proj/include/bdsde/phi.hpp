#pragma once

#include "bdsde/errors.hpp"

namespace bdsde {

struct PhiValue {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// C^2 penalization of the squared negative part: y^2 below zero, blended to
/// a slope-2*eps linear tail above 2*eps via a cubic. As eps -> 0 the value
/// recovers (y^-)^2, the derivative -2 y^-, and the second derivative
/// 2*1_{y<0} (pointwise away from 0).
inline PhiValue phi_epsilon(double y, double eps) {
    if (!(eps > 0.0)) throw NonPositiveEpsilon("phi_epsilon: eps must be positive");
    PhiValue out;
    if (y <= 0.0) {
        out.value = y * y;
        out.d1 = 2.0 * y;
        out.d2 = 2.0;
    } else if (y <= 2.0 * eps) {
        out.value = y * y - y * y * y / (6.0 * eps);
        out.d1 = 2.0 * y - y * y / (2.0 * eps);
        out.d2 = 2.0 - y / eps;
    } else {
        out.value = 2.0 * eps * y - (4.0 / 3.0) * eps * eps;
        out.d1 = 2.0 * eps;
        out.d2 = 0.0;
    }
    return out;
}

}  // namespace bdsde
