#include "stripes/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <format>

namespace stripes {
namespace {

double series_norm(const KernelParams& kp) {
    return 2.0 * kp.c1 / ((kp.q - 1.0) * (kp.q - 2.0));
}

void check_alpha_open(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0,1)");
}

// generic C-family series: N-normalized combination with exponent shift
SeriesResult c_combo(const KernelParams& kp, double alpha, double s,
                     double shift, std::span<const double> coeffs, double scale,
                     double tol) {
    check_alpha_open(alpha);
    if (s < 0) throw std::invalid_argument("series_C: s >= 0 required");
    const double bases[3] = {2.0 * alpha + s, 2.0 - 2.0 * alpha + s, 2.0 + s};
    SeriesResult r = combined_power_sum(std::span(bases, coeffs.size()), coeffs,
                                        2.0, kp.q - 2.0 + shift, tol);
    r.value *= scale;
    r.tail_bound *= std::abs(scale);
    return r;
}

struct FDerivs {
    double F, Fh, Fhh, Fa, Faa, Fah;
};

// all partials of F(h, alpha) with s = eps/h folded through the chain rule
FDerivs f_derivs(const KernelParams& kp, double h, double alpha, double tol) {
    const double q = kp.q, eps = kp.eps;
    const double s = eps / h;
    const CSeriesBundle B = series_C_partials(kp, alpha, s, tol);
    const double C = B.C.value, Ca = B.dC_da.value, Caa = B.d2C_da2.value;
    const double Cs = B.dC_ds.value, Css = B.d2C_ds2.value, Cas = B.d2C_dads.value;
    FDerivs f;
    f.F = -1.0 / h + C * std::pow(h, 1.0 - q);
    f.Fh = 1.0 / (h * h) - (q - 1.0) * C * std::pow(h, -q) -
           eps * Cs * std::pow(h, -q - 1.0);
    f.Fhh = -2.0 * std::pow(h, -3.0) + q * (q - 1.0) * C * std::pow(h, -q - 1.0) +
            2.0 * q * eps * Cs * std::pow(h, -q - 2.0) +
            eps * eps * Css * std::pow(h, -q - 3.0);
    f.Fa = Ca * std::pow(h, 1.0 - q);
    f.Faa = Caa * std::pow(h, 1.0 - q);
    f.Fah = -(q - 1.0) * Ca * std::pow(h, -q) - eps * Cas * std::pow(h, -q - 1.0);
    return f;
}

}  // namespace

double clamp_alpha(double alpha, bool* extrapolating) {
    check_alpha_open(alpha);
    const double clamped = std::clamp(alpha, 1e-4, 1.0 - 1e-4);
    if (extrapolating) *extrapolating = (alpha < 0.01 || alpha > 0.99);
    return clamped;
}

SeriesResult series_C(const KernelParams& kp, double alpha, double s,
                      double tol) {
    static constexpr double coeffs[3] = {1.0, 1.0, -2.0};
    return c_combo(kp, alpha, s, 0.0, coeffs, series_norm(kp), tol);
}

CSeriesBundle series_C_partials(const KernelParams& kp, double alpha, double s,
                                double tol) {
    const double N = series_norm(kp);
    const double q = kp.q;
    CSeriesBundle b;
    static constexpr double c3[3] = {1.0, 1.0, -2.0};
    static constexpr double cpm[2] = {1.0, -1.0};
    static constexpr double cmp[2] = {-1.0, 1.0};
    static constexpr double cpp[2] = {1.0, 1.0};
    b.C = c_combo(kp, alpha, s, 0.0, c3, N, tol);
    // dC/da: +2 on the 2a+s family, -2 on the 2-2a+s family, exponent q-1
    b.dC_da = c_combo(kp, alpha, s, 1.0, cmp, 2.0 * N * (q - 2.0), tol);
    b.d2C_da2 =
        c_combo(kp, alpha, s, 2.0, cpp, 4.0 * N * (q - 2.0) * (q - 1.0), tol);
    b.dC_ds = c_combo(kp, alpha, s, 1.0, c3, -N * (q - 2.0), tol);
    b.d2C_ds2 =
        c_combo(kp, alpha, s, 2.0, c3, N * (q - 2.0) * (q - 1.0), tol);
    b.d2C_dads =
        c_combo(kp, alpha, s, 2.0, cpm, 2.0 * N * (q - 2.0) * (q - 1.0), tol);
    return b;
}

double stripe_energy(const KernelParams& kp, const StripeConfig& cfg,
                     double tol) {
    if (!(cfg.h > 0)) throw std::invalid_argument("stripe_energy: h > 0");
    check_alpha_open(cfg.alpha);
    // alpha <-> 1-alpha symmetry is exact term-wise; canonicalize so both
    // orientations evaluate identically in floating point.
    const double a = std::min(cfg.alpha, 1.0 - cfg.alpha);
    const double s = kp.eps / cfg.h;
    const double C = series_C(kp, a, s, tol).value;
    return -1.0 / cfg.h + C * std::pow(cfg.h, 1.0 - kp.q);
}

double stripe_energy_dh(const KernelParams& kp, const StripeConfig& cfg,
                        double tol) {
    const double a = std::min(cfg.alpha, 1.0 - cfg.alpha);
    return f_derivs(kp, cfg.h, a, tol).Fh;
}

double stripe_energy_dh2(const KernelParams& kp, const StripeConfig& cfg,
                         double tol) {
    const double a = std::min(cfg.alpha, 1.0 - cfg.alpha);
    return f_derivs(kp, cfg.h, a, tol).Fhh;
}

PeriodResult optimal_period(const KernelParams& kp, double alpha, double tol) {
    const double a = std::min(clamp_alpha(alpha), 1.0 - clamp_alpha(alpha));
    PeriodResult out;
    if (kp.tau == 0.0) {
        const double C = series_C(kp, a, 0.0, tol).value;
        out.h_star = std::pow((kp.q - 1.0) * C, 1.0 / (kp.q - 2.0));
        out.certificate =
            std::abs(stripe_energy_dh(kp, {out.h_star, a}, tol));
        return out;
    }
    // bracket dF/dh on [0.01/alpha, 100/alpha] with a 64-point sign scan
    const double lo = 0.01 / a, hi = 100.0 / a;
    constexpr int kScan = 64;
    double prev_h = lo, prev_f = stripe_energy_dh(kp, {lo, a}, tol);
    double blo = 0.0, bhi = 0.0;
    int changes = 0;
    for (int i = 1; i < kScan; ++i) {
        const double h = lo * std::pow(hi / lo, double(i) / (kScan - 1));
        const double f = stripe_energy_dh(kp, {h, a}, tol);
        if (prev_f < 0.0 && f >= 0.0) {
            if (changes == 0) { blo = prev_h; bhi = h; }
            ++changes;
        } else if (prev_f >= 0.0 && f < 0.0) {
            ++changes;
        }
        prev_h = h;
        prev_f = f;
    }
    out.sign_changes = changes;
    out.anomaly = (changes != 1);
    if (changes == 0) throw NumericsError("optimal_period: no bracket found");
    // bisect to 1e-3 relative, then damped Newton
    while ((bhi - blo) > 1e-3 * blo) {
        const double mid = 0.5 * (blo + bhi);
        (stripe_energy_dh(kp, {mid, a}, tol) < 0.0 ? blo : bhi) = mid;
    }
    double h = 0.5 * (blo + bhi);
    for (int it = 0; it < 60; ++it) {
        const FDerivs f = f_derivs(kp, h, a, tol);
        double step = -f.Fh / f.Fhh;
        if (!std::isfinite(step)) break;
        step = std::clamp(step, blo - h, bhi - h);  // stay inside the bracket
        h += step;
        if (std::abs(step) < 1e-15 * h) break;
    }
    out.h_star = h;
    out.certificate = std::abs(stripe_energy_dh(kp, {h, a}, tol));
    return out;
}

LambdaSample lambda_value(const KernelParams& kp, double alpha, double tol) {
    check_alpha_open(alpha);
    const double a = std::min(alpha, 1.0 - alpha);
    const PeriodResult pr = optimal_period(kp, a, tol);
    const double h = pr.h_star;
    const FDerivs f = f_derivs(kp, h, a, tol);
    LambdaSample s;
    s.tau = kp.tau;
    s.alpha = alpha;
    s.h_star = h;
    s.lambda = f.F;
    // envelope: dLambda/da = Fa at the critical h; d2 per the reduced Hessian
    s.d_alpha = f.Fa;
    s.d2_alpha = f.Faa - f.Fah * f.Fah / f.Fhh;
    if (alpha > 0.5) s.d_alpha = -s.d_alpha;  // chain rule of a = 1 - alpha
    return s;
}

ConvexityScan convexity_scan(const KernelParams& kp,
                             std::span<const double> alphas, double tol) {
    ConvexityScan scan;
    scan.c_tilde = std::numeric_limits<double>::infinity();
    for (const double alpha : alphas) {
        const LambdaSample s = lambda_value(kp, alpha, tol);
        const double m = std::min(alpha, 1.0 - alpha);
        ConvexityRow row{alpha, s.d2_alpha,
                         s.d2_alpha / std::pow(m, kp.q - 1.0)};
        scan.rows.push_back(row);
        scan.c_tilde = std::min(scan.c_tilde, row.floor_ratio);
        scan.c2_fit = std::max(scan.c2_fit, std::abs(s.d_alpha));
        if (!(s.d2_alpha > 0.0))
            scan.falsifications.push_back(std::format(
                "non-positive d2Lambda at alpha={} tau={}: {}", alpha, kp.tau,
                s.d2_alpha));
    }
    return scan;
}

AbcResult abc_inequality_check(const KernelParams& kp, double alpha,
                               double tol) {
    if (!(alpha > 0.0 && alpha <= 0.5))
        throw std::invalid_argument("abc_inequality_check: alpha in (0, 1/2]");
    const double q = kp.q;
    const auto S = [&](double a0, double e) {
        return power_sum(a0, 2.0, e, 0, tol);
    };
    AbcResult r{};
    const SeriesResult a1a = S(2.0 * alpha, q), a1b = S(2.0 - 2.0 * alpha, q);
    r.A1 = a1a.value + a1b.value;
    static constexpr double c3[3] = {1.0, 1.0, -2.0};
    const SeriesResult a2 = c_combo(kp, alpha, 0.0, 0.0, c3, 1.0, tol);
    r.A2 = a2.value;
    const SeriesResult a3a = S(2.0 * alpha, q - 1.0),
                       a3b = S(2.0 - 2.0 * alpha, q - 1.0);
    r.A3 = a3a.value - a3b.value;
    r.margin = r.A1 * r.A2 - r.A3 * r.A3;
    // sum_{k>=1} |a_{3,k}| = sum_{k>=1} (2k-2a)^-(q-1) - (2k+2a)^-(q-1)
    r.sum_abs_a3 =
        S(2.0 - 2.0 * alpha, q - 1.0).value - S(2.0 + 2.0 * alpha, q - 1.0).value;
    r.tail_bound = a1a.tail_bound + a1b.tail_bound + a2.tail_bound +
                   a3a.tail_bound + a3b.tail_bound;
    return r;
}

RateScanResult perturbation_rates(int d, double p,
                                  std::span<const double> taus,
                                  std::span<const double> alphas, double tol) {
    const KernelParams kp0 = make_params(d, p, 0.0);
    RateScanResult out{};
    out.h_band_min = out.d2f_band_min = std::numeric_limits<double>::infinity();
    out.h_band_max = out.d2f_band_max = 0.0;

    // deviation of F_tau from F_0 maximized over an h-grid around h*_0
    struct Dev { double f, df, d2f; };
    const auto deviation = [&](const KernelParams& kp, double a) -> Dev {
        const double h0 = optimal_period(kp0, a, tol).h_star;
        Dev dev{0, 0, 0};
        for (int i = 0; i < 25; ++i) {
            const double h = h0 * std::pow(5.0, -0.5 + i / 24.0);
            const StripeConfig c{h, a};
            dev.f = std::max(dev.f, std::abs(stripe_energy(kp, c, tol) -
                                             stripe_energy(kp0, c, tol)));
            dev.df = std::max(dev.df, std::abs(stripe_energy_dh(kp, c, tol) -
                                               stripe_energy_dh(kp0, c, tol)));
            dev.d2f = std::max(dev.d2f, std::abs(stripe_energy_dh2(kp, c, tol) -
                                                 stripe_energy_dh2(kp0, c, tol)));
        }
        return dev;
    };

    const auto fit_slope = [](std::span<const double> x,
                              std::span<const double> y) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const size_t n = x.size();
        for (size_t i = 0; i < n; ++i) {
            sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };

    // slopes vs tau, averaged over alphas
    double st_f = 0, st_df = 0, st_d2f = 0;
    for (const double a : alphas) {
        std::vector<double> lx, lf, ldf, ld2f;
        for (const double tau : taus) {
            const KernelParams kp = make_params(d, p, tau);
            const Dev dev = deviation(kp, a);
            lx.push_back(std::log(tau));
            lf.push_back(std::log(dev.f));
            ldf.push_back(std::log(dev.df));
            ld2f.push_back(std::log(dev.d2f));
        }
        st_f += fit_slope(lx, lf);
        st_df += fit_slope(lx, ldf);
        st_d2f += fit_slope(lx, ld2f);
    }
    out.slope_tau_f = st_f / alphas.size();
    out.slope_tau_df = st_df / alphas.size();
    out.slope_tau_d2f = st_d2f / alphas.size();

    // slopes vs alpha at the smallest tau
    {
        const KernelParams kp = make_params(d, p, taus.front());
        std::vector<double> lx, lf, ldf, ld2f;
        for (const double a : alphas) {
            const Dev dev = deviation(kp, a);
            lx.push_back(std::log(a));
            lf.push_back(std::log(dev.f));
            ldf.push_back(std::log(dev.df));
            ld2f.push_back(std::log(dev.d2f));
        }
        out.slope_alpha_f = fit_slope(lx, lf);
        out.slope_alpha_df = fit_slope(lx, ldf);
        out.slope_alpha_d2f = fit_slope(lx, ld2f);
    }

    // scaling bands at tau = 0
    for (const double a : alphas) {
        const double h0 = optimal_period(kp0, a, tol).h_star;
        out.h_band_min = std::min(out.h_band_min, h0 * a);
        out.h_band_max = std::max(out.h_band_max, h0 * a);
        const double d2 = stripe_energy_dh2(kp0, {h0, a}, tol) / (a * a * a);
        out.d2f_band_min = std::min(out.d2f_band_min, d2);
        out.d2f_band_max = std::max(out.d2f_band_max, d2);
    }
    return out;
}

}  // namespace stripes
