#include "stripes/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <format>
#include <functional>
#include <numeric>
#include <queue>
#include <random>

#include "json.hpp"
#include "stripes/series.hpp"

namespace stripes {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

int wrap(int x, int n) {
    int r = x % n;
    return r < 0 ? r + n : r;
}

}  // namespace

double GridSet::alpha() const { return double(occupied_count()) / double(size()); }

int GridSet::occupied_count() const {
    return int(std::accumulate(occ.begin(), occ.end(), std::int64_t(0)));
}

std::size_t GridSet::index(std::array<int, 3> c) const {
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * n + wrap(c[i], n);
    return idx;
}

void GridSet::validate() const {
    if (d < 2 || d > 3) throw std::invalid_argument("grid: d in {2,3}");
    if (n < 2) throw std::invalid_argument("grid: n >= 2");
    if (!(L > 0)) throw std::invalid_argument("grid: L > 0");
    std::size_t want = 1;
    for (int i = 0; i < d; ++i) want *= n;
    if (occ.size() != want) throw std::invalid_argument("grid: size mismatch");
    for (auto v : occ)
        if (v > 1) throw std::invalid_argument("grid: occupancy not binary");
}

GridSet make_stripes(int d, int n, double alpha, int period_cells,
                     int direction) {
    if (period_cells <= 0 || n % period_cells != 0)
        throw std::invalid_argument("make_stripes: period must divide n");
    if (direction < 0 || direction >= d)
        throw std::invalid_argument("make_stripes: bad direction");
    const int width = int(std::lround(alpha * period_cells));
    if (width <= 0 || width >= period_cells)
        throw std::invalid_argument("make_stripes: alpha incompatible with period");
    GridSet g;
    g.d = d;
    g.n = n;
    g.L = 1.0;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    g.occ.resize(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        int coord = 0;
        for (int i = d - 1; i >= 0; --i) {
            if (i == direction) coord = int(rem % n);
            rem /= n;
        }
        g.occ[idx] = (coord % period_cells) < width ? 1 : 0;
    }
    return g;
}

GridSet make_checkerboard(int d, int n, int cell) {
    if (cell <= 0 || n % cell != 0)
        throw std::invalid_argument("make_checkerboard: cell must divide n");
    if ((n / cell) % 2 != 0)
        throw std::invalid_argument("make_checkerboard: odd tile count");
    GridSet g;
    g.d = d;
    g.n = n;
    g.L = 1.0;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    g.occ.resize(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        int parity = 0;
        for (int i = d - 1; i >= 0; --i) {
            parity += int(rem % n) / cell;
            rem /= n;
        }
        g.occ[idx] = parity % 2;
    }
    return g;
}

GridSet make_disc(int n, double alpha) {
    GridSet g;
    g.d = 2;
    g.n = n;
    g.L = 1.0;
    const std::size_t total = std::size_t(n) * n;
    g.occ.assign(total, 0);
    const int count = int(std::lround(alpha * double(total)));
    // exactly `count` cells nearest to the center, ties broken by index
    std::vector<std::pair<double, std::size_t>> order(total);
    const double c0 = 0.5 * n;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) {
            const double dx = x + 0.5 - c0, dy = y + 0.5 - c0;
            order[std::size_t(x) * n + y] = {dx * dx + dy * dy,
                                             std::size_t(x) * n + y};
        }
    std::sort(order.begin(), order.end());
    for (int i = 0; i < count; ++i) g.occ[order[i].second] = 1;
    return g;
}

GridSet make_random(int d, int n, double alpha, std::uint64_t seed) {
    GridSet g;
    g.d = d;
    g.n = n;
    g.L = 1.0;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    g.occ.assign(total, 0);
    const int count = int(std::lround(alpha * double(total)));
    std::fill(g.occ.begin(), g.occ.begin() + count, 1);
    std::mt19937_64 rng(splitmix64(seed));
    std::shuffle(g.occ.begin(), g.occ.end(), rng);
    return g;
}

// ---------------------------------------------------------------------------
// evaluator tables
// ---------------------------------------------------------------------------

GridEvaluator::GridEvaluator(const KernelParams& kp, int d, int n, double L)
    : kp_(kp), d_(d), n_(n), L_(L), delta_(L / n) {
    if (d != kp.d)
        throw std::invalid_argument("GridEvaluator: grid/kernel dimension mismatch");
    if (d < 2 || d > 3) throw std::invalid_argument("GridEvaluator: d in {2,3}");
    if (n < 2) throw std::invalid_argument("GridEvaluator: n >= 2");
    const double dl = delta_, eps = kp_.eps, p = kp_.p;
    const double step = dl * n;
    const double tol = 1e-15;

    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    W_.assign(total, 0.0);
    const int half = n / 2;

    // per-axis image families of the residue c: the singleton |c| plus the
    // progressions {k n - c} and {k n + c}, k >= 1 (c = 0 doubles up)
    const auto entry_value = [&](const std::vector<int>& c, double& tail) {
        double sum = 0.0;
        const int combos = int(std::pow(3, d));
        for (int mask = 0; mask < combos; ++mask) {
            int m = mask, t = 0;
            double s0 = 0.0, dsum = 0.0;
            for (int i = 0; i < d; ++i) {
                const int kind = m % 3;
                m /= 3;
                if (kind == 0)
                    s0 += c[i];
                else {
                    ++t;
                    dsum += (kind == 1) ? -double(c[i]) : double(c[i]);
                }
            }
            if (t == 0) {
                if (s0 > 0.0) sum += std::pow(dl * s0 + eps, -p);
                continue;  // the zero-offset self image is excluded
            }
            const double A = dl * (t * n + s0 + dsum) + eps;
            const SeriesResult s0r = power_sum(A, step, p, 0, tol);
            if (t == 1) {
                sum += s0r.value;
                tail += s0r.tail_bound;
            } else if (t == 2) {
                const SeriesResult s1r = power_sum(A, step, p, 1, tol);
                sum += s0r.value + s1r.value;
                tail += s0r.tail_bound + s1r.tail_bound;
            } else {
                const SeriesResult s1r = power_sum(A, step, p, 1, tol);
                const SeriesResult s2r = power_sum(A, step, p, 2, tol);
                sum += 0.5 * (s2r.value + 3.0 * s1r.value + 2.0 * s0r.value);
                tail += 0.5 * (s2r.tail_bound + 3.0 * s1r.tail_bound +
                               2.0 * s0r.tail_bound);
            }
        }
        return sum;
    };

    std::vector<int> c(d, 0);
    std::function<void(int)> fill = [&](int axis) {
        if (axis == d) {
            double tail = 0.0;
            const double v = entry_value(c, tail) * std::pow(dl, d);
            table_tail_ += tail * std::pow(dl, d);
            const int mirrors = 1 << d;
            for (int mm = 0; mm < mirrors; ++mm) {
                std::size_t idx = 0;
                for (int i = 0; i < d; ++i) {
                    const int vi = (mm >> i & 1) ? (n - c[i]) % n : c[i];
                    idx = idx * n + vi;
                }
                W_[idx] = v;
            }
            return;
        }
        for (int v = 0; v <= half; ++v) {
            c[axis] = v;
            fill(axis + 1);
        }
    };
    fill(0);
    W_[0] = 0.0;
    Wtot_ = std::accumulate(W_.begin(), W_.end(), 0.0);

    // one-sided folded reduced kernel: KF[j0] = sum_{im>=0} Khat(j0 + im n) dl^2
    KF_.assign(n + 1, 0.0);
    const double dpow = std::pow(dl, d + 1);
    for (int j0 = 1; j0 <= n; ++j0) {
        const SeriesResult direct = power_sum(dl * j0 + eps, step, p, 0, tol);
        double v = direct.value;
        double tb = direct.tail_bound;
        for (int r = 1; r <= n; ++r) {
            const double A = dl * (j0 + r) + eps;
            const SeriesResult s0r = power_sum(A, step, p, 0, tol);
            const SeriesResult s1r = power_sum(A, step, p, 1, tol);
            if (d == 2) {
                v += 2.0 * (s0r.value + s1r.value);
                tb += 2.0 * (s0r.tail_bound + s1r.tail_bound);
            } else {
                const SeriesResult s2r = power_sum(A, step, p, 2, tol);
                v += 4.0 * (r * (s0r.value + s1r.value) +
                            0.5 * n * (s1r.value + s2r.value));
                tb += 4.0 * (r * (s0r.tail_bound + s1r.tail_bound) +
                             0.5 * n * (s1r.tail_bound + s2r.tail_bound));
            }
        }
        KF_[j0] = v * dpow;
        table_tail_ += tb * dpow;
    }

    // lattice boundary moment; for d = 2 the shell weight is 2 s^2, for
    // d = 3 it is (4 s^3 + 2 s)/3 (generating-function reduction)
    {
        const double A = dl + eps;
        const SeriesResult s0r = power_sum(A, dl, p, 0, tol);
        const SeriesResult s1r = power_sum(A, dl, p, 1, tol);
        const SeriesResult s2r = power_sum(A, dl, p, 2, tol);
        const double sum_s2 = s0r.value + 2.0 * s1r.value + s2r.value;
        if (d == 2) {
            M_ = 2.0 * dpow * sum_s2;
        } else {
            const SeriesResult s3r = power_sum(A, dl, p, 3, tol);
            const double sum_s3 =
                s3r.value + 3.0 * s2r.value + 3.0 * s1r.value + s0r.value;
            const double sum_s1 = s0r.value + s1r.value;
            M_ = dpow * ((4.0 * sum_s3 + 2.0 * sum_s1) / 3.0);
        }
    }
}

double GridEvaluator::weight_at(std::array<int, 3> off) const {
    std::size_t idx = 0;
    for (int i = 0; i < d_; ++i) idx = idx * n_ + wrap(off[i], n_);
    return W_[idx];
}

// ---------------------------------------------------------------------------
// energy
// ---------------------------------------------------------------------------

namespace {

std::vector<std::int64_t> overlap_counts(const GridSet& g) {
    const int n = g.n;
    std::vector<std::int64_t> cnt(g.size(), 0);
    if (g.d == 2) {
        for (int v0 = 0; v0 < n; ++v0)
            for (int v1 = 0; v1 < n; ++v1) {
                std::int64_t c = 0;
                for (int x0 = 0; x0 < n; ++x0) {
                    const std::uint8_t* a = &g.occ[std::size_t(x0) * n];
                    const std::uint8_t* b =
                        &g.occ[std::size_t((x0 + v0) % n) * n];
                    const int split = n - v1;
                    for (int x1 = 0; x1 < split; ++x1) c += a[x1] ^ b[x1 + v1];
                    for (int x1 = split; x1 < n; ++x1)
                        c += a[x1] ^ b[x1 + v1 - n];
                }
                cnt[std::size_t(v0) * n + v1] = c;
            }
    } else {
        for (int v0 = 0; v0 < n; ++v0)
            for (int v1 = 0; v1 < n; ++v1)
                for (int v2 = 0; v2 < n; ++v2) {
                    std::int64_t c = 0;
                    for (int x0 = 0; x0 < n; ++x0)
                        for (int x1 = 0; x1 < n; ++x1) {
                            const std::uint8_t* a =
                                &g.occ[(std::size_t(x0) * n + x1) * n];
                            const std::uint8_t* b =
                                &g.occ[(std::size_t((x0 + v0) % n) * n +
                                        (x1 + v1) % n) *
                                       n];
                            const int split = n - v2;
                            for (int x2 = 0; x2 < split; ++x2)
                                c += a[x2] ^ b[x2 + v2];
                            for (int x2 = split; x2 < n; ++x2)
                                c += a[x2] ^ b[x2 + v2 - n];
                        }
                    cnt[(std::size_t(v0) * n + v1) * n + v2] = c;
                }
    }
    return cnt;
}

std::array<std::int64_t, 3> face_counts(const GridSet& g) {
    const int n = g.n;
    std::array<std::int64_t, 3> f{};
    if (g.d == 2) {
        for (int x0 = 0; x0 < n; ++x0)
            for (int x1 = 0; x1 < n; ++x1) {
                const std::uint8_t o = g.occ[std::size_t(x0) * n + x1];
                f[0] += o ^ g.occ[std::size_t((x0 + 1) % n) * n + x1];
                f[1] += o ^ g.occ[std::size_t(x0) * n + (x1 + 1) % n];
            }
    } else {
        for (int x0 = 0; x0 < n; ++x0)
            for (int x1 = 0; x1 < n; ++x1)
                for (int x2 = 0; x2 < n; ++x2) {
                    const std::size_t i = (std::size_t(x0) * n + x1) * n + x2;
                    const std::uint8_t o = g.occ[i];
                    f[0] +=
                        o ^ g.occ[(std::size_t((x0 + 1) % n) * n + x1) * n + x2];
                    f[1] +=
                        o ^ g.occ[(std::size_t(x0) * n + (x1 + 1) % n) * n + x2];
                    f[2] += o ^ g.occ[i - x2 + (x2 + 1) % n];
                }
    }
    return f;
}

}  // namespace

GridEnergy GridEvaluator::energy(const GridSet& g) const {
    g.validate();
    if (g.n != n_ || g.d != d_)
        throw std::invalid_argument("energy: evaluator/grid shape mismatch");
    const double dl = delta_;
    const auto faces = face_counts(g);
    GridEnergy out;
    for (int i = 0; i < d_; ++i) {
        out.per_i[i] = double(faces[i]) * std::pow(dl, d_ - 1);
        out.per1 += out.per_i[i];
    }
    const auto cnt = overlap_counts(g);
    double rep = 0.0;
    for (std::size_t v = 0; v < cnt.size(); ++v)
        rep += W_[v] * double(cnt[v]);
    rep *= std::pow(dl, d_);
    out.repulsion = rep;
    const double vol = std::pow(L_, d_);
    out.value = (-out.per1 + out.per1 * M_ - rep) / vol;
    out.tail_bound =
        (table_tail_ * double(g.size()) * std::pow(dl, d_) + out.per1 * 1e-13) /
        vol;
    return out;
}

// ---------------------------------------------------------------------------
// slicing decomposition
// ---------------------------------------------------------------------------

GridEvaluator::DecompositionDetail GridEvaluator::decomposition_detail(
    const GridSet& g) const {
    g.validate();
    if (g.n != n_ || g.d != d_)
        throw std::invalid_argument("decomposition: shape mismatch");
    const int n = n_, d = d_;
    const double dl = delta_;
    const std::size_t total = g.size();
    DecompositionDetail det;
    det.r_face.assign(d, std::vector<double>(total, 0.0));
    det.v_face.assign(d, std::vector<double>(total, 0.0));
    det.w_cell.assign(d, std::vector<double>(total, 0.0));

    // w values: wcell_i(t) = (1/d) sum_v fE(t,v) W[v].  For d = 2 the two
    // directions share the same product of axis differences.
    if (d == 2) {
        std::vector<double>& wc = det.w_cell[0];
        for (int v0 = 1; v0 < n; ++v0)
            for (int v1 = 1; v1 < n; ++v1) {
                const double w = W_[std::size_t(v0) * n + v1];
                if (w == 0.0) continue;
                for (int x0 = 0; x0 < n; ++x0) {
                    const std::uint8_t* base = &g.occ[std::size_t(x0) * n];
                    const std::uint8_t* sh0 =
                        &g.occ[std::size_t((x0 + v0) % n) * n];
                    double* wl = &wc[std::size_t(x0) * n];
                    const int split = n - v1;
                    for (int x1 = 0; x1 < n; ++x1) {
                        const std::uint8_t o = base[x1];
                        const std::uint8_t a = sh0[x1];
                        const std::uint8_t b =
                            base[x1 < split ? x1 + v1 : x1 + v1 - n];
                        if ((o ^ a) & (o ^ b)) wl[x1] += w;
                    }
                }
            }
        for (auto& v : wc) v *= 0.5;  // the 1/d factor
        det.w_cell[1] = wc;
    } else {
        std::array<int, 3> v{}, x{};
        for (int dir = 0; dir < 3; ++dir) {
            for (v[0] = 0; v[0] < n; ++v[0])
                for (v[1] = 0; v[1] < n; ++v[1])
                    for (v[2] = 0; v[2] < n; ++v[2]) {
                        const double w =
                            W_[(std::size_t(v[0]) * n + v[1]) * n + v[2]];
                        if (w == 0.0) continue;
                        std::array<int, 3> vi{}, vp = v;
                        vi[dir] = v[dir];
                        vp[dir] = 0;
                        if (v[dir] == 0 ||
                            (vp[0] == 0 && vp[1] == 0 && vp[2] == 0))
                            continue;
                        for (x[0] = 0; x[0] < n; ++x[0])
                            for (x[1] = 0; x[1] < n; ++x[1])
                                for (x[2] = 0; x[2] < n; ++x[2]) {
                                    const std::size_t i0 = g.index(x);
                                    const std::uint8_t o = g.occ[i0];
                                    const std::uint8_t a = g.occ[g.index(
                                        {x[0] + vi[0], x[1] + vi[1],
                                         x[2] + vi[2]})];
                                    const std::uint8_t b = g.occ[g.index(
                                        {x[0] + vp[0], x[1] + vp[1],
                                         x[2] + vp[2]})];
                                    if ((o ^ a) & (o ^ b))
                                        det.w_cell[dir][i0] += w;
                                }
                    }
            for (auto& val : det.w_cell[dir]) val /= d;
        }
    }

    // r and v per boundary face, line by line
    std::vector<std::uint8_t> line(n);
    std::vector<double> splus(n), sminus(n), wline(n);
    std::vector<std::size_t> lidx(n);
    for (int dir = 0; dir < d; ++dir) {
        const std::size_t n_lines = total / n;
        for (std::size_t li = 0; li < n_lines; ++li) {
            std::array<int, 3> xc{};
            std::size_t rem = li;
            for (int i = d - 1; i >= 0; --i) {
                if (i == dir) continue;
                xc[i] = int(rem % n);
                rem /= n;
            }
            for (int c = 0; c < n; ++c) {
                xc[dir] = c;
                lidx[c] = g.index(xc);
                line[c] = g.occ[lidx[c]];
                wline[c] = det.w_cell[dir][lidx[c]];
            }
            std::vector<int> faces;
            for (int c = 0; c < n; ++c)
                if (line[c] != line[(c + 1) % n]) faces.push_back(c);
            if (faces.empty()) continue;
            for (int u = 0; u < n; ++u) {
                double sp = 0.0, sm = 0.0;
                const std::uint8_t ou = line[u];
                for (int j = 1; j <= n; ++j) {
                    if (line[(u + j) % n] != ou) sp += KF_[j];
                    if (line[((u - j) % n + n) % n] != ou) sm += KF_[j];
                }
                splus[u] = sp;
                sminus[u] = sm;
            }
            const int m = int(faces.size());
            for (int t = 0; t < m; ++t) {
                const int s = faces[t];
                const int sprev = faces[(t - 1 + m) % m];
                const int snext = faces[(t + 1) % m];
                double X = 0.0, Y = 0.0, vsum = 0.0;
                int run = (s - sprev + n) % n;
                if (run == 0) run = n;
                for (int k = 0; k < run; ++k) {
                    const int u = (sprev + 1 + k) % n;
                    X += splus[u];
                    vsum += wline[u];
                }
                int run2 = (snext - s + n) % n;
                if (run2 == 0) run2 = n;
                for (int k = 0; k < run2; ++k) {
                    const int u = (s + 1 + k) % n;
                    Y += sminus[u];
                    vsum += wline[u];
                }
                det.r_face[dir][lidx[s]] = -1.0 + M_ - X - Y;
                det.v_face[dir][lidx[s]] = 0.5 * dl * vsum;
            }
        }
    }

    DecompositionReport rep;
    const double vol = std::pow(L_, d);
    const double perp = std::pow(dl, d - 1);
    for (int dir = 0; dir < d; ++dir) {
        double rs = 0, vs = 0, ws = 0;
        for (std::size_t i = 0; i < total; ++i) {
            rs += det.r_face[dir][i];
            vs += det.v_face[dir][i];
            ws += det.w_cell[dir][i];
        }
        rep.r_total[dir] = rs * perp;
        rep.v_total[dir] = vs * perp;
        rep.w_total[dir] = ws * std::pow(dl, d);
        rep.rhs_total +=
            (rep.r_total[dir] + rep.v_total[dir] + rep.w_total[dir]) / vol;
    }
    rep.energy = energy(g).value;
    rep.slack = rep.energy - rep.rhs_total;
    det.report = rep;
    return det;
}

DecompositionReport GridEvaluator::decomposition(const GridSet& g) const {
    return decomposition_detail(g).report;
}

std::vector<double> GridEvaluator::f_bar_local(const GridSet& g,
                                               std::array<int, 3> corner,
                                               int l_cells) const {
    const DecompositionDetail det = decomposition_detail(g);
    return f_bar_from_detail(det, g, corner, l_cells);
}

std::vector<double> f_bar_from_detail(
    const GridEvaluator::DecompositionDetail& det, const GridSet& g,
    std::array<int, 3> corner, int l_cells) {
    const int d = g.d;
    const double dl = g.delta();
    const double l = l_cells * dl;
    std::vector<double> out(d, 0.0);
    std::array<int, 3> x{};
    const std::function<void(int)> visit = [&](int axis) {
        if (axis == d) {
            const std::size_t i = g.index(x);
            for (int dir = 0; dir < d; ++dir)
                out[dir] += std::pow(dl, d - 1) *
                                (det.r_face[dir][i] + det.v_face[dir][i]) +
                            std::pow(dl, d) * det.w_cell[dir][i];
            return;
        }
        for (int k = 0; k < l_cells; ++k) {
            x[axis] = corner[axis] + k;
            visit(axis + 1);
        }
    };
    visit(0);
    for (double& v : out) v /= std::pow(l, d);
    return out;
}

// ---------------------------------------------------------------------------
// stripe distance
// ---------------------------------------------------------------------------

StripeDistance stripe_distance(const GridSet& g, std::array<int, 3> corner,
                               std::array<int, 3> extent, int direction,
                               double eta) {
    g.validate();
    if (direction < 0 || direction >= g.d)
        throw std::invalid_argument("stripe_distance: bad direction");
    const int nc = extent[direction];
    if (nc < 1) throw std::invalid_argument("stripe_distance: empty window");
    std::vector<double> mu(nc, 0.0);
    std::size_t perp_count = 1;
    for (int i = 0; i < g.d; ++i)
        if (i != direction) perp_count *= extent[i];
    std::array<int, 3> x{};
    for (int c = 0; c < nc; ++c) {
        x[direction] = corner[direction] + c;
        double acc = 0.0;
        const std::function<void(int)> visit = [&](int axis) {
            if (axis == g.d) {
                acc += g.occ[g.index(x)];
                return;
            }
            if (axis == direction) {
                visit(axis + 1);
                return;
            }
            for (int k = 0; k < extent[axis]; ++k) {
                x[axis] = corner[axis] + k;
                visit(axis + 1);
            }
        };
        visit(0);
        mu[c] = acc / double(perp_count);
    }
    const int rmin = std::max(1, int(std::ceil(eta / g.delta() - 1e-9)));
    constexpr double kInf = 1e300;
    const int R = rmin;
    std::vector<double> cur(2 * std::size_t(R + 1), kInf),
        nxt(2 * std::size_t(R + 1), kInf);
    const auto at = [&](std::vector<double>& v, int ph, int r) -> double& {
        return v[std::size_t(ph) * (R + 1) + r];
    };
    const auto cost = [&](int c, int ph) {
        return ph == 0 ? mu[c] : 1.0 - mu[c];
    };
    at(cur, 0, R) = cost(0, 0);  // first run is edge-exempt (saturated)
    at(cur, 1, R) = cost(0, 1);
    for (int c = 1; c < nc; ++c) {
        std::fill(nxt.begin(), nxt.end(), kInf);
        for (int ph = 0; ph < 2; ++ph)
            for (int r = 1; r <= R; ++r) {
                const double v = at(cur, ph, r);
                if (v >= kInf) continue;
                const int re = std::min(r + 1, R);
                double& ext = at(nxt, ph, re);
                ext = std::min(ext, v + cost(c, ph));
                if (r == R) {
                    double& sw = at(nxt, 1 - ph, 1);
                    sw = std::min(sw, v + cost(c, 1 - ph));
                }
            }
        cur.swap(nxt);
    }
    StripeDistance sd;
    sd.direction = direction;
    sd.eta = eta;
    sd.value = *std::min_element(cur.begin(), cur.end()) / nc;
    return sd;
}

StripeDistance stripe_distance_min(const GridSet& g, double eta) {
    StripeDistance best;
    best.value = 2.0;
    std::array<int, 3> corner{0, 0, 0};
    std::array<int, 3> extent{g.n, g.n, g.n};
    for (int i = 0; i < g.d; ++i) {
        const StripeDistance s = stripe_distance(g, corner, extent, i, eta);
        if (s.value < best.value) best = s;
    }
    return best;
}

// ---------------------------------------------------------------------------
// region classification
// ---------------------------------------------------------------------------

RegionLabels classify_regions(const GridSet& g, const RegionParams& rp) {
    g.validate();
    const int n = g.n, d = g.d;
    if (rp.l_cells < 1 || rp.l_cells > n)
        throw std::invalid_argument("classify_regions: bad cube side");
    const std::size_t total = g.size();
    RegionLabels out;
    out.n = n;
    out.d = d;
    out.label.assign(total, 0);

    const auto each_cell = [&](auto&& fn) {
        std::array<int, 3> c{};
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rem = idx;
            for (int i = d - 1; i >= 0; --i) {
                c[i] = int(rem % n);
                rem /= n;
            }
            fn(idx, c);
        }
    };

    std::vector<std::vector<double>> dist(d, std::vector<double>(total, 0.0));
    std::array<int, 3> extent{};
    for (int i = 0; i < d; ++i) extent[i] = rp.l_cells;
    each_cell([&](std::size_t idx, const std::array<int, 3>& c) {
        std::array<int, 3> corner{};
        for (int i = 0; i < d; ++i) corner[i] = c[i] - rp.l_cells / 2;
        for (int dir = 0; dir < d; ++dir)
            dist[dir][idx] = stripe_distance(g, corner, extent, dir, rp.eta).value;
    });

    std::vector<std::uint8_t> far(total, 0), mixed(total, 0);
    for (std::size_t i = 0; i < total; ++i) {
        int close = 0;
        double dmin = 2.0;
        for (int dir = 0; dir < d; ++dir) {
            dmin = std::min(dmin, dist[dir][i]);
            if (dist[dir][i] <= rp.delta) ++close;
        }
        if (dmin >= rp.delta) far[i] = 1;
        if (close >= 2) mixed[i] = 1;
    }
    const auto dilate = [&](std::vector<std::uint8_t>& set, int radius) {
        if (radius <= 0) return;
        std::vector<std::uint8_t> grown(total, 0);
        each_cell([&](std::size_t idx, const std::array<int, 3>& c) {
            if (!set[idx]) return;
            std::array<int, 3> b{};
            const std::function<void(int)> visit = [&](int axis) {
                if (axis == d) {
                    grown[g.index(b)] = 1;
                    return;
                }
                for (int k = -radius; k <= radius; ++k) {
                    b[axis] = c[axis] + k;
                    visit(axis + 1);
                }
            };
            visit(0);
        });
        set.swap(grown);
    };
    dilate(far, int(std::lround(rp.rho / g.delta())));
    dilate(mixed, int(std::lround(rp.enlarge_mixed / g.delta())));

    constexpr std::int8_t kUnresolved = 100;
    for (std::size_t i = 0; i < total; ++i)
        out.label[i] = mixed[i] ? -1 : (far[i] ? 0 : kUnresolved);

    // connected components of the complement, periodic face adjacency
    std::vector<std::int32_t> comp(total, -1);
    int ncomp = 0;
    each_cell([&](std::size_t idx, const std::array<int, 3>& c) {
        if (out.label[idx] != kUnresolved || comp[idx] >= 0) return;
        const int id = ncomp++;
        std::queue<std::array<int, 3>> bfs;
        bfs.push(c);
        comp[idx] = id;
        while (!bfs.empty()) {
            const auto cur = bfs.front();
            bfs.pop();
            for (int axis = 0; axis < d; ++axis)
                for (int sgn : {-1, +1}) {
                    std::array<int, 3> nb = cur;
                    nb[axis] += sgn;
                    const std::size_t ni = g.index(nb);
                    if (out.label[ni] == kUnresolved && comp[ni] < 0) {
                        comp[ni] = id;
                        bfs.push(nb);
                    }
                }
        }
    });
    std::vector<std::array<int, 3>> votes(ncomp, {0, 0, 0});
    std::vector<int> sizes(ncomp, 0);
    for (std::size_t i = 0; i < total; ++i) {
        if (out.label[i] != kUnresolved) continue;
        ++sizes[comp[i]];
        for (int dir = 0; dir < d; ++dir)
            if (dist[dir][i] <= rp.delta) ++votes[comp[i]][dir];
    }
    std::vector<std::int8_t> comp_label(ncomp, 0);
    for (int cid = 0; cid < ncomp; ++cid) {
        int full = -1, nfull = 0;
        for (int dir = 0; dir < d; ++dir)
            if (votes[cid][dir] == sizes[cid]) {
                full = dir;
                ++nfull;
            }
        if (nfull == 1) {
            comp_label[cid] = std::int8_t(full + 1);
        } else {
            comp_label[cid] = 0;  // reported, not guessed
            out.ambiguities.push_back(
                std::format("component {} of {} cells has {} uniform directions",
                            cid, sizes[cid], nfull));
        }
    }
    for (std::size_t i = 0; i < total; ++i)
        if (out.label[i] == kUnresolved) out.label[i] = comp_label[comp[i]];
    for (std::size_t i = 0; i < total; ++i) ++out.counts[out.label[i] + 1];
    return out;
}

LipschitzReport lipschitz_probe(const GridSet& g, int l_cells, double eta,
                                int n_pairs, std::uint64_t seed) {
    g.validate();
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_int_distribution<int> pick(0, g.n - 1);
    LipschitzReport rep;
    rep.pairs = n_pairs;
    double sum = 0.0;
    const double l = l_cells * g.delta();
    std::array<int, 3> extent{};
    for (int i = 0; i < g.d; ++i) extent[i] = l_cells;
    const auto dmin = [&](const std::array<int, 3>& center) {
        std::array<int, 3> corner{};
        for (int i = 0; i < g.d; ++i) corner[i] = center[i] - l_cells / 2;
        double best = 2.0;
        for (int dir = 0; dir < g.d; ++dir)
            best = std::min(best,
                            stripe_distance(g, corner, extent, dir, eta).value);
        return best;
    };
    for (int i = 0; i < n_pairs; ++i) {
        std::array<int, 3> a{}, b{};
        for (int k = 0; k < g.d; ++k) {
            a[k] = pick(rng);
            b[k] = pick(rng);
        }
        double dist2 = 0.0;
        for (int k = 0; k < g.d; ++k) {
            const int diff = std::abs(a[k] - b[k]);
            const int wrapped = std::min(diff, g.n - diff);
            dist2 += double(wrapped) * wrapped;
        }
        if (dist2 == 0.0) continue;
        const double dz = std::sqrt(dist2) * g.delta();
        const double ratio = std::abs(dmin(a) - dmin(b)) * l / dz;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        sum += ratio;
    }
    rep.mean_ratio = sum / n_pairs;
    return rep;
}

// ---------------------------------------------------------------------------
// annealing
// ---------------------------------------------------------------------------

namespace {

int local_face_count(const GridSet& g, const std::array<int, 3>& z) {
    int c = 0;
    const std::size_t zi = g.index(z);
    for (int axis = 0; axis < g.d; ++axis)
        for (int sgn : {-1, +1}) {
            std::array<int, 3> nb = z;
            nb[axis] += sgn;
            c += g.occ[zi] != g.occ[g.index(nb)];
        }
    return c;
}

// phi(z) += sgn_x W[z - x] + sgn_y W[z - y], fused over the torus
void phi_swap_update(std::vector<double>& phi, const std::vector<double>& W,
                     int d, int n, const std::array<int, 3>& x,
                     const std::array<int, 3>& y) {
    if (d == 2) {
        for (int z0 = 0; z0 < n; ++z0) {
            double* row = &phi[std::size_t(z0) * n];
            const double* wx = &W[std::size_t(wrap(z0 - x[0], n)) * n];
            const double* wy = &W[std::size_t(wrap(z0 - y[0], n)) * n];
            for (int z1 = 0; z1 < n; ++z1)
                row[z1] += -wx[wrap(z1 - x[1], n)] + wy[wrap(z1 - y[1], n)];
        }
    } else {
        for (int z0 = 0; z0 < n; ++z0)
            for (int z1 = 0; z1 < n; ++z1) {
                double* row = &phi[(std::size_t(z0) * n + z1) * n];
                const double* wx =
                    &W[(std::size_t(wrap(z0 - x[0], n)) * n +
                        wrap(z1 - x[1], n)) *
                       n];
                const double* wy =
                    &W[(std::size_t(wrap(z0 - y[0], n)) * n +
                        wrap(z1 - y[1], n)) *
                       n];
                for (int z2 = 0; z2 < n; ++z2)
                    row[z2] += -wx[wrap(z2 - x[2], n)] + wy[wrap(z2 - y[2], n)];
            }
    }
}

}  // namespace

AnnealResult anneal(const GridEvaluator& ev, double alpha,
                    const AnnealSchedule& sched, std::uint64_t seed) {
    const int n = ev.n(), d = ev.params().d;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    const double cells = double(total) * alpha;
    if (std::abs(cells - std::lround(cells)) > 1e-9)
        throw std::invalid_argument("anneal: alpha * n^d must be integral");
    const int nocc = int(std::lround(cells));
    const double dl = ev.delta();
    const double dvol = std::pow(dl, d);
    const double vol = std::pow(ev.L(), d);
    const double M = ev.moment();
    const double Wtot = ev.w_total();
    const auto& W = ev.weights();

    AnnealResult best;
    best.energy = std::numeric_limits<double>::infinity();

    const auto decode = [&](std::size_t idx, std::array<int, 3>& c) {
        std::size_t rem = idx;
        for (int i = d - 1; i >= 0; --i) {
            c[i] = int(rem % n);
            rem /= n;
        }
    };

    for (int chain = 0; chain < sched.chains; ++chain) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(0x51ab5 + chain)));
        GridSet grid;
        grid.d = d;
        grid.n = n;
        grid.L = ev.L();
        grid.occ.assign(total, 0);
        std::fill(grid.occ.begin(), grid.occ.begin() + nocc, 1);
        std::shuffle(grid.occ.begin(), grid.occ.end(), rng);

        std::vector<double> phi(total, 0.0);
        {
            std::vector<std::array<int, 3>> occupied;
            std::array<int, 3> c{};
            for (std::size_t i = 0; i < total; ++i)
                if (grid.occ[i]) {
                    decode(i, c);
                    occupied.push_back(c);
                }
            std::array<int, 3> z{}, off{};
            for (std::size_t zi = 0; zi < total; ++zi) {
                decode(zi, z);
                double acc = 0.0;
                for (const auto& y : occupied) {
                    for (int i = 0; i < d; ++i) off[i] = z[i] - y[i];
                    acc += W[grid.index(off)];
                }
                phi[zi] = acc;
            }
        }
        double energy = ev.energy(grid).value;

        std::vector<AnnealTraceRow> trace;
        double max_err = 0.0;
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<int> pick(0, n - 1);
        const long long hold =
            (long long)(sched.hold_fraction * double(sched.moves));
        const auto temperature = [&](long long mv) {
            if (mv < hold) return sched.t_start;
            const double f =
                double(mv - hold) / std::max(1.0, double(sched.moves - hold));
            return sched.t_start * std::pow(sched.t_end / sched.t_start, f);
        };

        for (long long mv = 0; mv < sched.moves; ++mv) {
            std::array<int, 3> x{}, y{};
            bool found = false;
            if (u01(rng) < sched.p_boundary) {
                for (int att = 0; att < 32 && !found; ++att) {
                    for (int i = 0; i < d; ++i) x[i] = pick(rng);
                    if (!grid.occ[grid.index(x)]) continue;
                    const int axis = int(rng() % std::uint64_t(d));
                    const int sgn = (rng() & 1) ? 1 : -1;
                    y = x;
                    y[axis] = wrap(y[axis] + sgn, n);
                    if (!grid.occ[grid.index(y)]) found = true;
                }
            } else {
                bool have_x = false;
                for (int att = 0; att < 64 && !have_x; ++att) {
                    for (int i = 0; i < d; ++i) x[i] = pick(rng);
                    if (grid.occ[grid.index(x)]) have_x = true;
                }
                if (have_x)
                    for (int att = 0; att < 64 && !found; ++att) {
                        for (int i = 0; i < d; ++i) y[i] = pick(rng);
                        if (!grid.occ[grid.index(y)]) found = true;
                    }
            }
            if (sched.trace_every > 0 && mv % sched.trace_every == 0) {
                trace.push_back(
                    {mv, energy,
                     stripe_distance_min(grid, sched.eta_trace).value,
                     temperature(mv)});
            }
            if (!found) continue;
            const std::size_t xi = grid.index(x), yi = grid.index(y);
            std::array<int, 3> off{};
            for (int i = 0; i < d; ++i) off[i] = y[i] - x[i];
            const double wxy = W[grid.index(off)];
            const double dRep = 2.0 * dvol * (2.0 * phi[xi] - Wtot) +
                                2.0 * dvol * (Wtot - 2.0 * phi[yi]) +
                                4.0 * dvol * wxy;
            const bool adjacent = [&] {
                int diff_axes = 0, ax = -1;
                for (int i = 0; i < d; ++i)
                    if (x[i] != y[i]) {
                        ++diff_axes;
                        ax = i;
                    }
                if (diff_axes != 1) return false;
                const int dist = std::abs(x[ax] - y[ax]);
                return dist == 1 || dist == n - 1;
            }();
            int before =
                local_face_count(grid, x) + local_face_count(grid, y);
            if (adjacent) before -= 1;
            grid.occ[xi] = 0;
            grid.occ[yi] = 1;
            int after = local_face_count(grid, x) + local_face_count(grid, y);
            if (adjacent) after -= 1;
            const double dPer = double(after - before) * std::pow(dl, d - 1);
            const double dE = (-dPer + dPer * M - dRep) / vol;
            const double T = temperature(mv);
            if (dE <= 0.0 || u01(rng) < std::exp(-dE / T)) {
                energy += dE;
                phi_swap_update(phi, W, d, n, x, y);
            } else {
                grid.occ[xi] = 1;
                grid.occ[yi] = 0;
            }
            if (sched.check_every > 0 && (mv + 1) % sched.check_every == 0) {
                const double full = ev.energy(grid).value;
                max_err = std::max(max_err, std::abs(full - energy));
                energy = full;  // re-anchor against floating drift
            }
        }
        const double final_energy = ev.energy(grid).value;
        if (final_energy < best.energy) {
            best.energy = final_energy;
            best.grid = std::move(grid);
            best.winning_chain = chain;
            best.trace = std::move(trace);
        }
        best.max_incremental_error = std::max(best.max_incremental_error, max_err);
    }
    return best;
}

double estimate_period_cells(const GridSet& g, int direction) {
    const int n = g.n;
    std::vector<double> mu(n, 0.0);
    const std::size_t perp = g.size() / n;
    std::array<int, 3> x{};
    for (int c = 0; c < n; ++c) {
        x[direction] = c;
        double acc = 0.0;
        const std::function<void(int)> visit = [&](int axis) {
            if (axis == g.d) {
                acc += g.occ[g.index(x)];
                return;
            }
            if (axis == direction) {
                visit(axis + 1);
                return;
            }
            for (int k = 0; k < n; ++k) {
                x[axis] = k;
                visit(axis + 1);
            }
        };
        visit(0);
        mu[c] = acc / double(perp);
    }
    int transitions = 0;
    for (int c = 0; c < n; ++c) {
        const bool a = mu[c] > 0.5, b = mu[(c + 1) % n] > 0.5;
        if (a != b) ++transitions;
    }
    if (transitions < 2) return 0.0;
    return 2.0 * n / double(transitions);
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    const std::size_t at = out.size();
    out.resize(at + sizeof(T));
    std::memcpy(out.data() + at, &v, sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t& at) {
    if (at + sizeof(T) > in.size())
        throw std::invalid_argument("grid_from_binary: truncated");
    T v;
    std::memcpy(&v, in.data() + at, sizeof(T));
    at += sizeof(T);
    return v;
}

}  // namespace

std::vector<std::uint8_t> grid_to_binary(const GridSet& g,
                                         const KernelParams& kp) {
    g.validate();
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'S', 'G', 'R', 'D'});
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, std::uint32_t(g.d));
    put<std::uint32_t>(out, std::uint32_t(g.n));
    put<double>(out, g.L);
    put<double>(out, kp.tau);
    put<double>(out, kp.p);
    std::uint8_t byte = 0;
    int bit = 0;
    for (std::size_t i = 0; i < g.occ.size(); ++i) {
        byte |= std::uint8_t(g.occ[i] << bit);
        if (++bit == 8) {
            out.push_back(byte);
            byte = 0;
            bit = 0;
        }
    }
    if (bit) out.push_back(byte);
    return out;
}

std::pair<GridSet, KernelParams> grid_from_binary(
    const std::vector<std::uint8_t>& data) {
    if (data.size() < 4 || std::memcmp(data.data(), "SGRD", 4) != 0)
        throw std::invalid_argument("grid_from_binary: bad magic");
    std::size_t at = 4;
    const auto version = get<std::uint32_t>(data, at);
    if (version != 1) throw std::invalid_argument("grid_from_binary: version");
    GridSet g;
    g.d = int(get<std::uint32_t>(data, at));
    g.n = int(get<std::uint32_t>(data, at));
    g.L = get<double>(data, at);
    const double tau = get<double>(data, at);
    const double p = get<double>(data, at);
    std::size_t total = 1;
    for (int i = 0; i < g.d; ++i) total *= g.n;
    g.occ.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t byte_at = at + i / 8;
        if (byte_at >= data.size())
            throw std::invalid_argument("grid_from_binary: truncated bits");
        g.occ[i] = (data[byte_at] >> (i % 8)) & 1;
    }
    g.validate();
    return {g, make_params(g.d, p, tau)};
}

std::string grid_to_json(const GridSet& g, const KernelParams& kp) {
    nlohmann::ordered_json j;
    j["d"] = g.d;
    j["n"] = g.n;
    j["L"] = g.L;
    j["tau"] = kp.tau;
    j["p"] = kp.p;
    j["occupancy"] = g.occ;
    return j.dump();
}

std::pair<GridSet, KernelParams> grid_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GridSet g;
    g.d = j.at("d").get<int>();
    g.n = j.at("n").get<int>();
    g.L = j.at("L").get<double>();
    g.occ = j.at("occupancy").get<std::vector<std::uint8_t>>();
    g.validate();
    return {g, make_params(g.d, j.at("p").get<double>(),
                           j.at("tau").get<double>())};
}

}  // namespace stripes
