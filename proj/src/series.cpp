#include "stripes/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stripes {
namespace {

// B_2, B_4, ..., B_18
constexpr double kBernoulli[] = {
    1.0 / 6.0,      -1.0 / 30.0,     1.0 / 42.0,
    -1.0 / 30.0,    5.0 / 66.0,      -691.0 / 2730.0,
    7.0 / 6.0,      -3617.0 / 510.0, 43867.0 / 798.0,
};
constexpr int kMaxBernoulli = 6;  // use B_2..B_12; B_14 bounds the remainder

double rising(double e, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= e + i;
    return r;
}

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// Euler-Maclaurin tail sum_{k>=K} f(k) for f(k) = (a + b k)^(-e), split so a
// caller with a zero-sum combination can merge the integral parts.
struct EmTail {
    double integral;   // int_K^inf f  (only valid alone when e > 1)
    double rest;       // f(K)/2 - sum_j B_2j/(2j)! f^(2j-1)(K)
    double remainder;  // certified bound on the neglected remainder
};

EmTail em_tail(double a, double b, double e, double K) {
    const double X = a + b * K;
    EmTail t;
    t.integral = (e > 1.0) ? std::pow(X, 1.0 - e) / (b * (e - 1.0))
                           : std::numeric_limits<double>::quiet_NaN();
    const double fK = std::pow(X, -e);
    double rest = 0.5 * fK;
    for (int j = 1; j <= kMaxBernoulli; ++j) {
        // f^(2j-1)(K) = -(b^(2j-1)) (e)_{2j-1} X^{-(e+2j-1)}
        const double deriv =
            -std::pow(b, 2 * j - 1) * rising(e, 2 * j - 1) * std::pow(X, -(e + 2 * j - 1));
        rest -= kBernoulli[j - 1] / factorial(2 * j) * deriv;
    }
    t.rest = rest;
    const int j = kMaxBernoulli + 1;
    const double omitted =
        std::pow(b, 2 * j - 1) * rising(e, 2 * j - 1) * std::pow(X, -(e + 2 * j - 1));
    t.remainder = std::abs(kBernoulli[j - 1] / factorial(2 * j) * omitted);
    return t;
}

}  // namespace

SeriesResult combined_power_sum(std::span<const double> bases,
                                std::span<const double> coeffs, double step,
                                double e, double tol) {
    if (bases.size() != coeffs.size() || bases.empty())
        throw std::invalid_argument("combined_power_sum: size mismatch");
    if (step <= 0) throw std::invalid_argument("combined_power_sum: step <= 0");
    double csum = 0.0;
    for (double c : coeffs) csum += c;
    const bool zero_sum = std::abs(csum) < 1e-12;
    if (!zero_sum && e <= 1.0)
        throw std::invalid_argument("combined_power_sum: divergent (e <= 1, nonzero coeff sum)");
    for (double a : bases)
        if (a <= 0) throw std::invalid_argument("combined_power_sum: base <= 0");

    int K = 16;
    const int kCap = 1 << 20;
    SeriesResult out;
    while (true) {
        double head = 0.0;
        for (int k = K - 1; k >= 0; --k) {  // ascending magnitude
            double term = 0.0;
            for (size_t i = 0; i < bases.size(); ++i)
                term += coeffs[i] * std::pow(bases[i] + step * k, -e);
            head += term;
        }
        double tail = 0.0, remainder = 0.0, integral = 0.0;
        for (size_t i = 0; i < bases.size(); ++i) {
            const EmTail t = em_tail(bases[i], step, e, K);
            tail += coeffs[i] * t.rest;
            remainder += std::abs(coeffs[i]) * t.remainder;
            if (!zero_sum) {
                integral += coeffs[i] * t.integral;
            } else {
                // joint integral: sum_i c_i [X_i^(1-e) - 1]/(e-1) / step,
                // the -1/(e-1) pieces cancel because sum c_i = 0.
                const double X = bases[i] + step * K;
                const double u = (1.0 - e) * std::log(X);
                const double bracket =
                    (std::abs(u) < 1e-6) ? std::log(X) * (1.0 + 0.5 * u) * -1.0
                                         : std::expm1(u) / (e - 1.0);
                integral += coeffs[i] * bracket / step;
            }
        }
        out.value = head + integral + tail;
        out.tail_bound = remainder;
        out.terms_used = K;
        if (remainder <= std::max(tol * std::abs(out.value), tol) || K >= kCap) break;
        K *= 2;
    }
    if (out.tail_bound > std::max(tol * std::abs(out.value), tol))
        throw NumericsError("combined_power_sum: tolerance unreachable");
    return out;
}

SeriesResult power_sum(double a, double b, double e, int weight_m, double tol) {
    if (a <= 0 || b <= 0) throw std::invalid_argument("power_sum: need a, b > 0");
    if (weight_m < 0 || weight_m > 3)
        throw std::invalid_argument("power_sum: weight_m in {0,1,2,3}");
    if (e <= weight_m + 1)
        throw std::invalid_argument("power_sum: divergent (e <= m + 1)");
    if (weight_m == 0) {
        const double base[] = {a}, coef[] = {1.0};
        return combined_power_sum(base, coef, b, e, tol);
    }
    // k^m = ((a+bk) - a)^m / b^m  ->  binomial mix of exponents e-m .. e
    SeriesResult out;
    const double bm = std::pow(b, weight_m);
    static const double binom[4][4] = {
        {1, 0, 0, 0}, {1, -1, 0, 0}, {1, -2, 1, 0}, {1, -3, 3, -1}};
    for (int i = 0; i <= weight_m; ++i) {
        const double base[] = {a}, coef[] = {1.0};
        const SeriesResult s =
            combined_power_sum(base, coef, b, e - (weight_m - i), tol);
        const double w = binom[weight_m][i] * std::pow(a, i) / bm;
        out.value += w * s.value;
        out.tail_bound += std::abs(w) * s.tail_bound;
        out.terms_used = std::max(out.terms_used, s.terms_used);
    }
    return out;
}

}  // namespace stripes
