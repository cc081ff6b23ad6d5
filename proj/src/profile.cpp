#include "stripes/profile.hpp"

#include <algorithm>
#include <cmath>
#include <format>
#include <random>

#include "json.hpp"

namespace stripes {
namespace {

constexpr double kMinGapFactor = 1e-12;  // validation floor, relative to L

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

double PeriodicProfile::density() const {
    double occ = 0.0;
    for (size_t j = 0; j + 1 < boundaries.size(); j += 2)
        occ += boundaries[j + 1] - boundaries[j];
    return occ / period;
}

double PeriodicProfile::min_gap() const {
    const size_t m = boundaries.size();
    double g = period - boundaries[m - 1] + boundaries[0];
    for (size_t j = 0; j + 1 < m; ++j)
        g = std::min(g, boundaries[j + 1] - boundaries[j]);
    return g;
}

void PeriodicProfile::validate() const {
    if (!(period > 0)) throw std::invalid_argument("profile: period L > 0");
    const size_t m = boundaries.size();
    if (m < 2 || m % 2 != 0)
        throw std::invalid_argument("profile: even boundary count >= 2");
    for (size_t j = 0; j < m; ++j) {
        if (!(boundaries[j] >= 0.0 && boundaries[j] < period))
            throw std::invalid_argument("profile: boundaries in [0, L)");
        if (j > 0 && !(boundaries[j] > boundaries[j - 1]))
            throw std::invalid_argument("profile: boundaries strictly increasing");
    }
    if (min_gap() <= kMinGapFactor * period)
        throw std::invalid_argument("profile: vanishing gap");
}

PeriodicProfile PeriodicProfile::normalized() const {
    PeriodicProfile out{period, boundaries};
    const double shift = boundaries[0];
    for (double& b : out.boundaries) b -= shift;
    return out;
}

bool PeriodicProfile::occupied(double x) const {
    double t = std::fmod(x, period);
    if (t < 0) t += period;
    const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
    const size_t idx = it - boundaries.begin();
    return idx % 2 == 1;  // inside [b_{2j}, b_{2j+1})
}

double PeriodicProfile::measure_in(double lo, double hi) const {
    double total = 0.0;
    double x = lo;
    while (x < hi - 1e-15 * period) {
        double t = std::fmod(x, period);
        if (t < 0) t += period;
        const auto it = std::upper_bound(boundaries.begin(), boundaries.end(),
                                         t + 1e-15 * period);
        const size_t idx = it - boundaries.begin();
        const double next_b =
            (idx < boundaries.size()) ? boundaries[idx] : boundaries[0] + period;
        const double step = std::min(next_b - t, hi - x);
        if (idx % 2 == 1) total += step;
        x += step;
    }
    return total;
}

PeriodicProfile stripe_profile(double h, double alpha) {
    if (!(h > 0) || !(alpha > 0 && alpha < 1))
        throw std::invalid_argument("stripe_profile: h > 0, alpha in (0,1)");
    return PeriodicProfile{2.0 * h, {0.0, 2.0 * alpha * h}};
}

namespace {

// sum_{n>=n0} of the interaction of (a,b) with the +nL images of (c,d),
// evaluated in closed form with a certified Euler-Maclaurin tail.
SeriesResult image_tail(const KernelParams& kp, double a, double b, double c,
                        double d, double L, int n0, double tol) {
    const double off = n0 * L + kp.eps;
    const double bases[4] = {d - a + off, d - b + off, c - a + off, c - b + off};
    static constexpr double coeffs[4] = {1.0, -1.0, -1.0, 1.0};
    SeriesResult r = combined_power_sum(bases, coeffs, L, kp.q - 2.0, tol);
    const double scale = kp.c1 / ((kp.q - 1.0) * (kp.q - 2.0));
    r.value *= scale;
    r.tail_bound *= std::abs(scale);
    return r;
}

struct RValue {
    double r;
    double tail;
};

RValue r_at(const KernelParams& kp, const PeriodicProfile& prof, int i,
            double tol, int explicit_images) {
    const int m = static_cast<int>(prof.boundaries.size());
    const double L = prof.period;
    const auto ub = [&](int t) {
        int tm = t % m;
        if (tm < 0) tm += m;
        const int wraps = (t - tm) / m;
        return prof.boundaries[tm] + L * wraps;
    };
    const double s = ub(i), sm = ub(i - 1), sp = ub(i + 1);
    const double gm = s - sm, gp = sp - s;
    const auto P = [&](double t) { return phi_antiderivative(kp, t); };
    // regrouped touching term; the divergent 2 Phi(0) moment cancels here
    double r = -1.0 + 2.0 * P(gm) + 2.0 * P(gp) - 2.0 * P(gm + gp);
    double tail = 0.0;
    const int half = m / 2;
    const int n0 = std::max(1, explicit_images);
    // right side: opposite-phase intervals (ub(i+2k), ub(i+2k+1)) against
    // (s^-, s); k = 0 is the regrouped term above
    for (int k = 1; k < half * n0; ++k)
        r -= interval_interaction(kp, {sm, s, ub(i + 2 * k), ub(i + 2 * k + 1)});
    for (int j = 0; j < half; ++j) {
        const SeriesResult t =
            image_tail(kp, sm, s, ub(i + 2 * j), ub(i + 2 * j + 1), L, n0, tol);
        r -= t.value;
        tail += t.tail_bound;
    }
    // left side: intervals (ub(i-2k-1), ub(i-2k)) against (s, s^+); their -nL
    // images interact like +nL images by translation invariance
    for (int k = 1; k < half * n0; ++k)
        r -= interval_interaction(kp, {ub(i - 2 * k - 1), ub(i - 2 * k), s, sp});
    for (int j = 0; j < half; ++j) {
        const SeriesResult t =
            image_tail(kp, ub(i - 2 * j - 1), ub(i - 2 * j), s, sp, L, n0, tol);
        r -= t.value;
        tail += t.tail_bound;
    }
    return {r, tail};
}

EnergyBreakdown profile_energy_impl(const KernelParams& kp,
                                    const PeriodicProfile& profile, double tol,
                                    int explicit_images) {
    profile.validate();
    if (kp.tau == 0.0 && profile.min_gap() <= 0.0)
        throw PoleError("profile_energy: zero gap with tau = 0");
    const int m = static_cast<int>(profile.boundaries.size());
    EnergyBreakdown out;
    out.image_cutoff = explicit_images;
    out.per_boundary_r.reserve(m);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        const RValue rv = r_at(kp, profile, i, tol, explicit_images);
        out.per_boundary_r.push_back(rv.r);
        total += rv.r;
        out.tail_bound += rv.tail;
    }
    out.total_density = total / profile.period;
    out.tail_bound /= profile.period;
    return out;
}

}  // namespace

EnergyBreakdown profile_energy(const KernelParams& kp,
                               const PeriodicProfile& profile, double tol) {
    return profile_energy_impl(kp, profile, tol, 1);
}

double r_tau_at(const KernelParams& kp, const PeriodicProfile& profile,
                int boundary_index, double tol) {
    profile.validate();
    const int m = static_cast<int>(profile.boundaries.size());
    if (boundary_index < 0 || boundary_index >= m)
        throw std::invalid_argument("r_tau_at: index out of range");
    return r_at(kp, profile, boundary_index, tol, 1).r;
}

PeriodicProfile project_density(const PeriodicProfile& profile, double alpha) {
    profile.validate();
    if (!(alpha > 0 && alpha < 1))
        throw std::invalid_argument("project_density: alpha in (0,1)");
    const double L = profile.period;
    // translate so the wrap gap midpoint sits at 0; intervals then stay
    // interior while widths rescale about fixed centers
    const double wrap_mid =
        std::fmod(0.5 * (profile.boundaries.back() + profile.boundaries.front() + L), L);
    const size_t m = profile.boundaries.size();
    std::vector<double> c(m / 2), w(m / 2);
    for (size_t j = 0; j < m / 2; ++j) {
        double lo = profile.boundaries[2 * j] - wrap_mid;
        double hi = profile.boundaries[2 * j + 1] - wrap_mid;
        if (lo < 0) { lo += L; hi += L; }
        c[j] = 0.5 * (lo + hi);
        w[j] = hi - lo;
    }
    std::vector<size_t> order(m / 2);
    for (size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return c[a] < c[b]; });
    for (int pass = 0; pass < 64; ++pass) {
        double cur = 0.0;
        for (double x : w) cur += x;
        const double target = alpha * L;
        if (std::abs(cur - target) < 1e-15 * L) break;
        const double f = target / cur;
        for (size_t oi = 0; oi < order.size(); ++oi) {
            const size_t j = order[oi];
            const double c_prev =
                c[order[(oi + order.size() - 1) % order.size()]] -
                (oi == 0 ? L : 0.0);
            const double c_next =
                c[order[(oi + 1) % order.size()]] + (oi + 1 == order.size() ? L : 0.0);
            const double cap =
                0.95 * std::min(c[j] - c_prev, c_next - c[j]);
            w[j] = std::min(w[j] * f, order.size() == 1 ? 0.999 * L : cap);
        }
    }
    PeriodicProfile out;
    out.period = L;
    for (size_t oi = 0; oi < order.size(); ++oi) {
        const size_t j = order[oi];
        out.boundaries.push_back(c[j] - 0.5 * w[j]);
        out.boundaries.push_back(c[j] + 0.5 * w[j]);
    }
    for (double& b : out.boundaries) {
        b = std::fmod(b + wrap_mid, L);
        if (b < 0) b += L;
    }
    // the wrap-gap translation guarantees the sorted order is parity-correct
    std::vector<double> sorted = out.boundaries;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != out.boundaries) {
        // rare: re-anchor on the first interval start
        std::sort(out.boundaries.begin(), out.boundaries.end());
        PeriodicProfile cand{L, out.boundaries};
        if (std::abs(cand.density() - alpha) > std::abs(1.0 - cand.density() - alpha)) {
            std::rotate(out.boundaries.begin(), out.boundaries.begin() + 1,
                        out.boundaries.end());
            std::sort(out.boundaries.begin(), out.boundaries.end());
        }
    }
    out.validate();
    return out;
}

namespace {

// annihilate any gap or interval narrower than threshold (measure drift is
// below threshold and is restored by the caller's projection)
PeriodicProfile merge_small_gaps(const PeriodicProfile& p, double threshold) {
    PeriodicProfile out = p;
    bool changed = true;
    while (changed && out.boundaries.size() > 2) {
        changed = false;
        const size_t m = out.boundaries.size();
        for (size_t j = 0; j < m; ++j) {
            const double lo = out.boundaries[j];
            const double hi =
                (j + 1 < m) ? out.boundaries[j + 1] : out.boundaries[0] + out.period;
            if (hi - lo < threshold) {
                std::vector<double> next;
                for (size_t t = 0; t < m; ++t)
                    if (t != j && t != (j + 1) % m) next.push_back(out.boundaries[t]);
                out.boundaries = next;
                changed = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace

SearchResult constrained_local_search(const KernelParams& kp,
                                      const PeriodicProfile& init,
                                      const SearchOptions& opts) {
    PeriodicProfile cur = init;
    cur.validate();
    const double L = cur.period;
    const double alpha = cur.density();
    const double eval_tol = std::min(1e-11, opts.tol * 1e-2);
    double energy = profile_energy(kp, cur, eval_tol).total_density;
    double step =
        opts.initial_step > 0 ? opts.initial_step : 0.25 * cur.min_gap();
    const double min_step = std::max(opts.tol * L * 1e-2, 1e-13 * L);
    int iters = 0;
    bool converged = false;

    const auto try_accept = [&](PeriodicProfile cand) -> bool {
        for (size_t j = 1; j < cand.boundaries.size(); ++j)
            if (cand.boundaries[j] <= cand.boundaries[j - 1]) return false;
        if (cand.boundaries.front() < 0 || cand.boundaries.back() >= L)
            return false;
        if (cand.min_gap() <= opts.merge_gap * L) {
            cand = merge_small_gaps(cand, opts.merge_gap * L);
            if (cand.boundaries.size() < 2) return false;
            cand = project_density(cand, alpha);
        }
        const double e = profile_energy(kp, cand, eval_tol).total_density;
        if (e < energy - 1e-16) {
            cur = cand;
            energy = e;
            return true;
        }
        return false;
    };

    while (iters < opts.max_iterations) {
        ++iters;
        bool improved = false;
        const int m = static_cast<int>(cur.boundaries.size());
        if (m == 2) { converged = true; break; }  // only translations remain
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < m; ++k) {
                if (k == j) continue;
                for (const double sgn : {+1.0, -1.0}) {
                    PeriodicProfile cand = cur;
                    const double dj = sgn * step;
                    const double dk = ((j % 2) == (k % 2)) ? -dj : dj;
                    cand.boundaries[j] += dj;
                    cand.boundaries[k] += dk;
                    if (try_accept(std::move(cand))) improved = true;
                }
            }
        }
        if (!improved) {
            if (step <= min_step) { converged = true; break; }
            step = std::max(step * 0.5, min_step);
        }
    }
    return {cur.normalized(), energy, iters, converged};
}

SearchResult brute_force_min(const KernelParams& kp, int m_pairs, double alpha,
                             double L, int grid_n) {
    if (m_pairs < 1 || m_pairs > 3)
        throw std::invalid_argument("brute_force_min: m_pairs in {1,2,3}");
    if (!(alpha > 0 && alpha < 1) || !(L > 0) || grid_n < 2)
        throw std::invalid_argument("brute_force_min: bad arguments");
    const double wtot = alpha * L, gtot = (1.0 - alpha) * L;
    const double eval_tol = 1e-11;
    SearchResult best;
    best.energy = std::numeric_limits<double>::infinity();
    const auto consider = [&](std::vector<double> bnd) {
        PeriodicProfile p{L, std::move(bnd)};
        const double e = profile_energy(kp, p, eval_tol).total_density;
        if (e < best.energy) {
            best.energy = e;
            best.profile = std::move(p);
        }
    };
    if (m_pairs == 1) {
        consider({0.0, wtot});
    } else if (m_pairs == 2) {
        if (double(grid_n) * grid_n > 3e6)
            throw std::invalid_argument("brute_force_min: grid too large");
        for (int i = 1; i < grid_n; ++i) {
            const double w1 = wtot * i / grid_n;
            for (int j = 1; j < grid_n; ++j) {
                const double g1 = gtot * j / grid_n;
                consider({0.0, w1, w1 + g1, w1 + g1 + (wtot - w1)});
            }
        }
    } else {
        if (std::pow(double(grid_n), 4) / 4.0 > 3e6)
            throw std::invalid_argument("brute_force_min: grid too large");
        for (int i1 = 1; i1 < grid_n; ++i1)
            for (int i2 = 1; i1 + i2 < grid_n; ++i2)
                for (int j1 = 1; j1 < grid_n; ++j1)
                    for (int j2 = 1; j1 + j2 < grid_n; ++j2) {
                        const double w1 = wtot * i1 / grid_n;
                        const double w2 = wtot * i2 / grid_n;
                        const double w3 = wtot - w1 - w2;
                        const double g1 = gtot * j1 / grid_n;
                        const double g2 = gtot * j2 / grid_n;
                        const double g3 = gtot - g1 - g2;
                        if (w3 <= 1e-12 * L || g3 <= 1e-12 * L) continue;
                        consider({0.0, w1, w1 + g1, w1 + g1 + w2,
                                  w1 + g1 + w2 + g2, w1 + g1 + w2 + g2 + w3});
                    }
    }
    best.converged = true;
    return best;
}

PeriodicProfile random_profile(double alpha, double L, int m_max,
                               std::uint64_t seed, std::uint64_t index) {
    if (m_max < 2) throw std::invalid_argument("random_profile: m_max >= 2");
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(index + 1)));
    const int pairs_max = std::max(1, m_max / 2);
    std::uniform_int_distribution<int> pick_pairs(1, pairs_max);
    std::exponential_distribution<double> expo(1.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const int np = pick_pairs(rng);
        std::vector<double> w(np), g(np);
        double ws = 0, gs = 0;
        for (auto& x : w) { x = expo(rng) + 0.05; ws += x; }
        for (auto& x : g) { x = expo(rng) + 0.05; gs += x; }
        std::vector<double> bnd;
        double pos = 0.0;
        bool ok = true;
        for (int j = 0; j < np; ++j) {
            const double wj = w[j] / ws * alpha * L;
            const double gj = g[j] / gs * (1.0 - alpha) * L;
            if (wj < 1e-3 * L / np || gj < 1e-3 * L / np) { ok = false; break; }
            bnd.push_back(pos);
            bnd.push_back(pos + wj);
            pos += wj + gj;
        }
        if (!ok) continue;
        PeriodicProfile p{L, std::move(bnd)};
        p.validate();
        return p;
    }
    return PeriodicProfile{L, {0.0, alpha * L}};  // deterministic fallback
}

RpProbeReport rp_probe(const KernelParams& kp, int n_samples, int m_max,
                       double alpha, double L, std::uint64_t seed, double tol) {
    RpProbeReport rep;
    rep.samples = n_samples;
    const LambdaSample lam = lambda_value(kp, alpha, 1e-12);
    rep.lambda = lam.lambda;
    rep.min_margin = std::numeric_limits<double>::infinity();
    double min_window = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_samples; ++i) {
        const PeriodicProfile p = random_profile(alpha, L, m_max, seed, i);
        const EnergyBreakdown eb = profile_energy(kp, p, tol * 1e-3);
        const double margin = eb.total_density - lam.lambda;
        rep.min_margin = std::min(rep.min_margin, margin);
        if (margin < -tol) {
            ++rep.violations;
            rep.falsifications.push_back(profile_to_json(p, kp));
        }
        // per-sample window statistic, deterministic in (seed, i)
        std::mt19937_64 wrng(splitmix64(seed ^ splitmix64(0x77777 + i)));
        std::uniform_real_distribution<double> uu(0.0, L);
        std::uniform_real_distribution<double> uw(0.25 * L, 0.75 * L);
        const double u = uu(wrng), wlen = uw(wrng);
        double rsum = 0.0;
        for (size_t j = 0; j < p.boundaries.size(); ++j) {
            double posj = p.boundaries[j] - u;
            if (posj < 0) posj += L;
            if (posj < wlen) rsum += eb.per_boundary_r[j];
        }
        const double aI = p.measure_in(u, u + wlen) / wlen;
        double lamI = 0.0;
        if (aI > 1e-4 && aI < 1.0 - 1e-4)
            lamI = lambda_value(kp, aI, 1e-10).lambda;
        min_window = std::min(min_window, rsum - wlen * lamI);
    }
    rep.empirical_c0 = -std::min(min_window, 0.0);
    return rep;
}

double profile_distance(const PeriodicProfile& a, const PeriodicProfile& b) {
    if (a.boundaries.size() != b.boundaries.size() ||
        std::abs(a.period - b.period) > 1e-12 * a.period)
        return std::numeric_limits<double>::infinity();
    const int m = static_cast<int>(a.boundaries.size());
    const double L = a.period;
    const auto dist_to = [&](const PeriodicProfile& bb) {
        double best = std::numeric_limits<double>::infinity();
        for (int rot = 0; rot < m; rot += 2) {  // even shifts preserve parity
            double worst = 0.0;
            for (int j = 0; j < m; ++j) {
                const double va = a.boundaries[j] - a.boundaries[0];
                const double vb =
                    bb.boundaries[(rot + j) % m] - bb.boundaries[rot];
                worst = std::max(worst, std::abs(std::remainder(vb - va, L)));
            }
            best = std::min(best, worst);
        }
        return best;
    };
    PeriodicProfile r = b;
    for (double& x : r.boundaries) {
        x = L - x;
        if (x >= L) x -= L;
    }
    std::sort(r.boundaries.begin(), r.boundaries.end());
    return std::min(dist_to(b), dist_to(r));
}

std::string profile_to_json(const PeriodicProfile& profile,
                            const KernelParams& kp) {
    nlohmann::ordered_json j;
    j["L"] = profile.period;
    j["boundaries"] = profile.boundaries;
    j["tau"] = kp.tau;
    j["d"] = kp.d;
    j["p"] = kp.p;
    return j.dump();
}

std::pair<PeriodicProfile, KernelParams> profile_from_json(
    const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PeriodicProfile p;
    p.period = j.at("L").get<double>();
    p.boundaries = j.at("boundaries").get<std::vector<double>>();
    p.validate();
    const KernelParams kp = make_params(j.at("d").get<int>(),
                                        j.at("p").get<double>(),
                                        j.at("tau").get<double>());
    return {p, kp};
}

}  // namespace stripes
