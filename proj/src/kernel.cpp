#include "stripes/kernel.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace stripes {
namespace {

// adaptive Simpson on [lo, hi]
double simpson(const std::function<double(double)>& f, double lo, double hi,
               double flo, double fmid, double fhi, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, lo, mid, flo, flm, fmid, 0.5 * tol, depth - 1) +
           simpson(f, mid, hi, fmid, frm, fhi, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double tol) {
    const double mid = 0.5 * (lo + hi);
    return simpson(f, lo, hi, f(lo), f(mid), f(hi), tol, 48);
}

// int_0^inf g(r) dr through the map r = t/(1-t)
double integrate_halfline(const std::function<double(double)>& g, double tol) {
    return integrate(
        [&](double t) {
            if (t >= 1.0) return 0.0;
            const double r = t / (1.0 - t);
            return g(r) / ((1.0 - t) * (1.0 - t));
        },
        0.0, 1.0 - 1e-12, tol);
}

double c1_quadrature(int d, double p, double tol) {
    const int n = d - 1;
    if (n == 0) return 1.0;
    // shell measure of the l1 sphere of radius r in n dims: 2^n r^(n-1)/(n-1)!
    const double shell0 = std::pow(2.0, n) / std::tgamma(n);
    return integrate_halfline(
        [&](double r) {
            return shell0 * std::pow(r, n - 1) * std::pow(r + 1.0, -p);
        },
        tol);
}

}  // namespace

KernelParams make_params(int d, double p, double tau, bool verify) {
    if (d < 1) throw std::invalid_argument("make_params: d >= 1 required");
    if (p < d + 2)
        throw std::invalid_argument("make_params: p >= d + 2 required");
    if (tau < 0) throw std::invalid_argument("make_params: tau >= 0 required");
    KernelParams kp;
    kp.d = d;
    kp.p = p;
    kp.tau = tau;
    kp.beta = p - d - 1;
    kp.q = p - d + 1;
    kp.c1 = std::pow(2.0, d - 1) * std::tgamma(kp.q) / std::tgamma(p);
    kp.eps = tau > 0 ? std::pow(tau, 1.0 / kp.beta) : 0.0;
    if (verify && d > 1) {
        const double ref = c1_quadrature(d, p, 1e-12);
        if (std::abs(ref - kp.c1) > 1e-8 * kp.c1)
            throw NumericsError("make_params: c1 quadrature cross-check failed");
    }
    return kp;
}

double hat_kernel(const KernelParams& kp, double z) {
    const double t = std::abs(z) + kp.eps;
    if (t == 0.0) throw PoleError("hat_kernel: pole at z = 0 with tau = 0");
    return kp.c1 * std::pow(t, -kp.q);
}

double phi_antiderivative(const KernelParams& kp, double t) {
    if (t < 0) throw std::invalid_argument("phi: t >= 0 required");
    const double u = t + kp.eps;
    if (u == 0.0) throw PoleError("phi: pole at t = 0 with tau = 0");
    return kp.c1 * std::pow(u, -(kp.q - 2.0)) / ((kp.q - 1.0) * (kp.q - 2.0));
}

double interval_interaction(const KernelParams& kp, const IntervalPair& iv) {
    if (!(iv.a < iv.b && iv.b <= iv.c && iv.c < iv.d))
        throw std::invalid_argument("interval_interaction: need a < b <= c < d");
    if (kp.tau == 0.0 && iv.b == iv.c)
        throw PoleError("interval_interaction: touching intervals with tau = 0");
    const auto P = [&](double t) { return phi_antiderivative(kp, t); };
    return P(iv.d - iv.a) - P(iv.d - iv.b) - P(iv.c - iv.a) + P(iv.c - iv.b);
}

double jc_diagnostic(const KernelParams& kp, double rel_tol) {
    const int d = kp.d;
    const double p = kp.p;
    if (d > 3) throw std::invalid_argument("jc_diagnostic: d <= 3 only");
    // 2^d * integral over the positive orthant of z1 (sum z_i + 1)^(-p)
    const double tol = rel_tol * 0.1;
    std::function<double(double)> inner;
    if (d == 1) {
        return 2.0 * integrate_halfline(
                         [&](double z) { return z * std::pow(z + 1.0, -p); }, tol);
    }
    if (d == 2) {
        return 4.0 * integrate_halfline(
                         [&](double z1) {
                             return z1 * integrate_halfline(
                                             [&](double z2) {
                                                 return std::pow(z1 + z2 + 1.0, -p);
                                             },
                                             tol);
                         },
                         tol);
    }
    return 8.0 * integrate_halfline(
                     [&](double z1) {
                         return z1 *
                                integrate_halfline(
                                    [&](double z2) {
                                        return integrate_halfline(
                                            [&](double z3) {
                                                return std::pow(z1 + z2 + z3 + 1.0, -p);
                                            },
                                            tol * 10);
                                    },
                                    tol);
                     },
                     tol);
}

}  // namespace stripes
