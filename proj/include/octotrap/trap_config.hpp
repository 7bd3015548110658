#pragma once

#include "octotrap/common.hpp"

namespace octotrap {

// Physical constants of the trap and of the stored ion, plus the pixel size
// used when sampling potential maps. Lengths are in metres throughout.
struct TrapConfig {
    double r0 = 4.0e-3;                      // inner radius (m)
    double rd = 1.5e-3;                      // electrode radius (m)
    double v_rf = 200.0;                     // RF amplitude (V)
    double omega_rf = 2.0 * kPi * 3.0e6;     // RF angular frequency (rad/s)
    double charge = kElementaryCharge;       // ion charge (C)
    double mass = 40.0 * kAtomicMassUnit;    // ion mass (kg)
    double pixel = 4.0e-6;                   // sampling pixel (m)

    double ratio() const { return rd / r0; }

    void validate() const {
        if (!(r0 > 0.0)) throw GeometryError("trap config: r0 must be positive");
        if (!(rd > 0.0 && rd < r0)) throw GeometryError("trap config: need 0 < rd < r0");
        if (!(pixel > 0.0)) throw GeometryError("trap config: pixel must be positive");
        if (!(pixel <= r0 / 100.0)) throw GeometryError("trap config: pixel must be <= r0/100");
        if (!(v_rf > 0.0 && omega_rf > 0.0 && mass > 0.0)) {
            throw GeometryError("trap config: v_rf, omega_rf, mass must be positive");
        }
    }

    // q^2 / (4 m Omega^2): multiplies |E0|^2 to give the pseudo-potential in J.
    double pseudo_factor() const {
        return charge * charge / (4.0 * mass * omega_rf * omega_rf);
    }
};

}  // namespace octotrap
