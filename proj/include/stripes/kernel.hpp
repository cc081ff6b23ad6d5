#pragma once

// Power-law kernel primitives.
//
// The d-dimensional kernel is K_tau(z) = (||z||_1 + tau^(1/beta))^(-p) with
// beta = p - d - 1.  Integrating out the d-1 coordinates orthogonal to a
// fixed axis gives the reduced kernel
//
//     Khat_tau(z) = c1 * (|z| + eps)^(-q),   q = p - d + 1,  eps = tau^(1/beta),
//
// where c1 = int_{R^{d-1}} (||xi||_1 + 1)^(-p) dxi = 2^(d-1) Gamma(q)/Gamma(p)
// (reduce over l1 spheres; the radial integral is a Beta function).  Phi is
// the double antiderivative of Khat vanishing at infinity, so interactions
// between intervals are finite differences of Phi.

#include <stdexcept>

namespace stripes {

class PoleError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

struct KernelParams {
    int d = 2;         // ambient dimension
    double p = 4.0;    // kernel exponent, p >= d + 2
    double tau = 0.0;  // regularization, >= 0
    double beta = 1.0; // p - d - 1
    double q = 3.0;    // p - d + 1
    double c1 = 1.0;   // perpendicular kernel mass
    double eps = 0.0;  // tau^(1/beta); 0 iff tau == 0
};

// Derives beta, q, eps and the closed-form c1.  With verify = true the c1
// closed form is cross-checked against adaptive quadrature of the defining
// integral (1e-8 relative) and a mismatch throws.
KernelParams make_params(int d, double p, double tau, bool verify = false);

// Khat_tau(z); pole at z = 0 when tau = 0.
double hat_kernel(const KernelParams& kp, double z);

// Phi(t) = c1 (t + eps)^-(q-2) / ((q-1)(q-2)), t >= 0.
// Phi'' = hat_kernel, Phi decreasing and convex, 2 Phi(0) = int |z| Khat(z) dz.
double phi_antiderivative(const KernelParams& kp, double t);

struct IntervalPair {
    double a, b, c, d;  // requires a < b <= c < d
};

// int_a^b int_c^d Khat(y - x) dy dx = Phi(d-a) - Phi(d-b) - Phi(c-a) + Phi(c-b).
double interval_interaction(const KernelParams& kp, const IntervalPair& iv);

// Quadrature of int_{R^d} |z_1| (||z||_1 + 1)^(-p) dz (the critical coupling
// of the unscaled model).  Diagnostic only; d <= 3.
double jc_diagnostic(const KernelParams& kp, double rel_tol = 1e-8);

}  // namespace stripes
