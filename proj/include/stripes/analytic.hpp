#pragma once

// Closed-form stripe energies and the constrained optimum.
//
// For the stripe set of half-period h and density alpha the energy per unit
// volume is
//
//     F_tau(h, alpha) = -1/h + C(q, alpha, eps/h) / h^(q-1),
//
// with the lattice series
//
//     C(q, a, s) = 2 c1/((q-1)(q-2)) * sum_{k>=0} [ (2k+2a+s)^-(q-2)
//                  + (2k+2-2a+s)^-(q-2) - 2 (2k+2+s)^-(q-2) ].
//
// At tau = 0 the optimal half-period is h* = ((q-1) C(q,a,0))^(1/(q-2)); for
// tau > 0 it is the unique zero of dF/dh located by bracketing plus Newton.
// Lambda(tau, alpha) = F_tau(h*, alpha) is the minimal energy density; its
// alpha-derivatives follow from the envelope theorem and
//     d2Lambda = [Faa - Fah^2 / Fhh] at h = h*.

#include <span>
#include <string>
#include <vector>

#include "stripes/kernel.hpp"
#include "stripes/series.hpp"

namespace stripes {

struct StripeConfig {
    double h;      // half-period, > 0
    double alpha;  // density in (0,1); occupied width 2 alpha h
};

// All alpha-1 partial derivatives of C needed downstream, each with its own
// certified tail.
struct CSeriesBundle {
    SeriesResult C, dC_da, d2C_da2, dC_ds, d2C_ds2, d2C_dads;
};

SeriesResult series_C(const KernelParams& kp, double alpha, double s,
                      double tol = 1e-12);
CSeriesBundle series_C_partials(const KernelParams& kp, double alpha, double s,
                                double tol = 1e-12);

double stripe_energy(const KernelParams& kp, const StripeConfig& cfg,
                     double tol = 1e-12);

// dF/dh and d2F/dh2 at fixed alpha (with the eps/h chain rule).
double stripe_energy_dh(const KernelParams& kp, const StripeConfig& cfg,
                        double tol = 1e-12);
double stripe_energy_dh2(const KernelParams& kp, const StripeConfig& cfg,
                         double tol = 1e-12);

struct PeriodResult {
    double h_star = 0.0;
    double certificate = 0.0;  // |dF/dh| at the returned h
    int sign_changes = 1;      // observed sign changes of dF/dh on the bracket
    bool anomaly = false;      // true if != 1 (contradicts uniqueness)
};

PeriodResult optimal_period(const KernelParams& kp, double alpha,
                            double tol = 1e-12);

struct LambdaSample {
    double tau, alpha, h_star, lambda, d_alpha, d2_alpha;
};

LambdaSample lambda_value(const KernelParams& kp, double alpha,
                          double tol = 1e-12);

struct ConvexityRow {
    double alpha, d2_alpha, floor_ratio;
};

struct ConvexityScan {
    std::vector<ConvexityRow> rows;
    double c_tilde = 0.0;  // fitted floor constant: min floor_ratio
    double c2_fit = 0.0;   // max |dLambda/dalpha| over the grid
    std::vector<std::string> falsifications;
};

// floor_ratio = d2Lambda / min(alpha, 1-alpha)^(q-1); any non-positive
// d2Lambda is recorded as a falsification event, never masked.
ConvexityScan convexity_scan(const KernelParams& kp,
                             std::span<const double> alphas,
                             double tol = 1e-12);

struct AbcResult {
    double A1, A2, A3;
    double margin;      // A1 A2 - A3^2
    double sum_abs_a3;  // sum_{k>=1} |a_{3,k}|
    double tail_bound;
};

// The three series behind the tau = 0 convexity determinant; requires
// 0 < alpha <= 1/2.  A1 A2 >= A3^2 is the strict-convexity witness.
AbcResult abc_inequality_check(const KernelParams& kp, double alpha,
                               double tol = 1e-12);

struct RateScanResult {
    // log-log slope of sup_h |F_tau - F_0| vs tau (expected 1/beta) and of the
    // first/second h-derivative deviations (same tau exponent).
    double slope_tau_f, slope_tau_df, slope_tau_d2f;
    // slope vs alpha at fixed tau (expected 1, 2, 3)
    double slope_alpha_f, slope_alpha_df, slope_alpha_d2f;
    // band of h*_0(alpha) * alpha and of d2F0(h*, alpha)/alpha^3
    double h_band_min, h_band_max;
    double d2f_band_min, d2f_band_max;
};

RateScanResult perturbation_rates(int d, double p,
                                  std::span<const double> taus,
                                  std::span<const double> alphas,
                                  double tol = 1e-12);

// Validated alpha handling: throws outside (0,1); values within 1e-4 of an
// endpoint are clamped; outside [0.01, 0.99] is flagged as extrapolation.
double clamp_alpha(double alpha, bool* extrapolating = nullptr);

constexpr double kTauValidatedMax = 0.1;

}  // namespace stripes
