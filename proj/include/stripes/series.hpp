#pragma once

// Certified evaluation of power-law lattice series.
//
// Everything here reduces to sums of the form
//
//     S_m(a, b, e) = sum_{k>=0} k^m (a + b k)^(-e),   a > 0, b > 0,
//
// evaluated as a finite head plus an Euler-Maclaurin tail.  The summand is
// completely monotone in k, so the Euler-Maclaurin remainder after the
// B_{2M} term is bounded in magnitude by the first omitted term; that bound
// is what `tail_bound` certifies.  Weights k^m (m <= 3) are reduced to
// shifted exponents through k = ((a+bk) - a)/b.
//
// Linear combinations with coefficients summing to zero are evaluated
// jointly: the individually divergent e <= 1 integrals cancel and the
// combined value stays finite (this is the q = 3 case of the stripe series).

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace stripes {

struct SeriesResult {
    double value = 0.0;
    double tail_bound = 0.0;  // certified bound on the truncation error
    int terms_used = 0;

    bool within(double tol) const { return tail_bound <= tol; }
};

class NumericsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// sum_{k>=0} k^m (a + b k)^(-e).  Requires e > m + 1 for convergence.
SeriesResult power_sum(double a, double b, double e, int weight_m = 0,
                       double tol = 1e-14);

// sum_i coeff[i] * sum_{k>=0} (base[i] + step k)^(-e).
// If sum_i coeff[i] == 0 the combination is evaluated jointly and e may be
// any value > 0 (individually divergent pieces cancel); otherwise e > 1.
SeriesResult combined_power_sum(std::span<const double> bases,
                                std::span<const double> coeffs, double step,
                                double e, double tol = 1e-14);

}  // namespace stripes
