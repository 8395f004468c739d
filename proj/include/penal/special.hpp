#pragma once

namespace penal {

/// Tricomi confluent hypergeometric function for a > 0, z > 0, from
/// U(a,b,z) = (1/Gamma(a)) int_0^inf exp(-z u) u^(a-1) (1+u)^(b-a-1) du.
/// On [0,1] the substitution u = s^(1/a) removes the endpoint singularity;
/// both pieces use composite Gauss-Legendre on graded panels.
double hypergeometric_u(double a, double b, double z);

/// h(x, y) for x > 0 with z = (2/9)|y|^3 / x:
///   y > 0: y^(1/2) z^(1/6) U(1/6, 4/3, z)
///   y < 0: (1/6) |y|^(1/2) z^(1/6) U(7/6, 4/3, z) exp(-z)
///   y = 0: (9x/2)^(1/6) Gamma(1/3) / Gamma(1/6), the common limit.
double langevin_h(double x, double y);

/// Partial derivative of h in its first argument, in closed form through
/// d/dz (z^a U(a,b,z)) = -a (b-a-1) z^(a-1) U(a+1,b,z).
double langevin_dh_dx(double x, double y);

}  // namespace penal
