#include "wug/stats.hpp"

#include "wug/errors.hpp"
#include "wug/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace wug {

namespace {

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double r = 0.5 * static_cast<double>(i + j) + 1.0;   // mean rank, 1-based
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace

Correlation pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw NumericError("pearson: length mismatch");
    std::size_t n = x.size();
    if (n < 3) throw NumericError("pearson: need at least 3 observations");
    double mx = mean(x), my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson: degenerate variance");
    Correlation c;
    c.n = n;
    c.r = sxy / std::sqrt(sxx * syy);
    c.r = std::clamp(c.r, -1.0, 1.0);
    double df = static_cast<double>(n - 2);
    double denom = 1.0 - c.r * c.r;
    if (denom <= 0.0) {
        c.p = 0.0;
    } else {
        double t = c.r * std::sqrt(df / denom);
        c.p = student_t_two_sided_p(t, df);
    }
    return c;
}

Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw NumericError("spearman: length mismatch");
    return pearson(average_ranks(x), average_ranks(y));
}

// ---------------------------------------------------------------------------
// Mixed model
// ---------------------------------------------------------------------------

namespace {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Vec2 = std::array<double, 2>;

// Per-group sufficient statistics; everything downstream is 2x2 algebra via
// the Woodbury identity, so group size never enters the inner loop.
struct GroupStats {
    Mat2 ZtZ{};
    Vec2 Zty{};
    Mat2 ZtX{};      // columns of X; second column unused when p == 1
    Mat2 XtX{};
    Vec2 Xty{};
    double yty = 0.0;
    std::size_t n = 0;
};

Mat2 mat_mul(const Mat2& a, const Mat2& b) {
    Mat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) c[i][j] += a[i][k] * b[k][j];
    return c;
}

Mat2 mat_t(const Mat2& a) { return {{{a[0][0], a[1][0]}, {a[0][1], a[1][1]}}}; }

Vec2 mat_vec(const Mat2& a, const Vec2& v) {
    return {a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]};
}

// Inverse and log-determinant of a symmetric positive definite 2x2.
bool inv_logdet(const Mat2& m, Mat2& inv, double& logdet) {
    double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (!(det > 0.0) || !(m[0][0] > 0.0)) return false;
    inv = {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
    logdet = std::log(det);
    return true;
}

struct ProfiledFit {
    double loglik;
    Vec2 beta;       // beta[1] unused when p == 1
    double sigma2;
    bool ok;
};

// Profile likelihood at a fixed Lambda: beta by GLS, sigma^2 in closed form.
ProfiledFit profile_loglik(const std::vector<GroupStats>& groups, const Mat2& lambda, int p) {
    ProfiledFit out{-std::numeric_limits<double>::infinity(), {0, 0}, 0, false};
    Mat2 lambda_t = mat_t(lambda);

    Mat2 xtvx{};
    Vec2 xtvy{};
    double ytvy = 0.0;
    double logdet_sum = 0.0;
    std::size_t n = 0;

    for (const auto& g : groups) {
        n += g.n;
        // M = I + L^T Z^T Z L;   V^-1 = I - Z L M^-1 L^T Z^T
        Mat2 m = mat_mul(lambda_t, mat_mul(g.ZtZ, lambda));
        m[0][0] += 1.0;
        m[1][1] += 1.0;
        Mat2 minv;
        double logdet;
        if (!inv_logdet(m, minv, logdet)) return out;
        logdet_sum += logdet;

        Mat2 ltzx = mat_mul(lambda_t, g.ZtX);          // 2 x p
        Vec2 ltzy = mat_vec(lambda_t, g.Zty);
        Mat2 minv_ltzx = mat_mul(minv, ltzx);
        Vec2 minv_ltzy = mat_vec(minv, ltzy);

        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                double corr = ltzx[0][i] * minv_ltzx[0][j] + ltzx[1][i] * minv_ltzx[1][j];
                xtvx[i][j] += g.XtX[i][j] - corr;
            }
            xtvy[i] += g.Xty[i] - (ltzx[0][i] * minv_ltzy[0] + ltzx[1][i] * minv_ltzy[1]);
        }
        ytvy += g.yty - (ltzy[0] * minv_ltzy[0] + ltzy[1] * minv_ltzy[1]);
    }

    Vec2 beta{0, 0};
    if (p == 1) {
        if (!(xtvx[0][0] > 0.0)) return out;
        beta[0] = xtvy[0] / xtvx[0][0];
    } else {
        Mat2 inv;
        double ld;
        if (!inv_logdet(xtvx, inv, ld)) return out;
        beta = mat_vec(inv, xtvy);
    }

    double rss = ytvy - (beta[0] * xtvy[0] + beta[1] * xtvy[1]);
    if (!(rss > 0.0)) return out;
    double nn = static_cast<double>(n);
    double sigma2 = rss / nn;
    out.loglik = -0.5 * (nn * std::log(2.0 * M_PI * sigma2) + nn + logdet_sum);
    out.beta = beta;
    out.sigma2 = sigma2;
    out.ok = std::isfinite(out.loglik);
    return out;
}

// Standard Nelder-Mead on R^dim; returns best point and whether the simplex
// collapsed before the iteration cap.
bool nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double>& x,
                 int max_iter) {
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    std::size_t dim = x.size();
    std::vector<std::vector<double>> pts(dim + 1, x);
    for (std::size_t i = 0; i < dim; ++i) pts[i + 1][i] += 0.5;
    std::vector<double> fv(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) fv[i] = f(pts[i]);

    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<std::size_t> order(dim + 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        {
            std::vector<std::vector<double>> np(dim + 1);
            std::vector<double> nf(dim + 1);
            for (std::size_t i = 0; i <= dim; ++i) {
                np[i] = pts[order[i]];
                nf[i] = fv[order[i]];
            }
            pts.swap(np);
            fv.swap(nf);
        }
        if (std::fabs(fv[dim] - fv[0]) < 1e-10 * (1.0 + std::fabs(fv[0]))) {
            x = pts[0];
            return true;
        }
        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += pts[i][j] / static_cast<double>(dim);

        auto blend = [&](double t) {
            std::vector<double> p(dim);
            for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + t * (pts[dim][j] - centroid[j]);
            return p;
        };
        std::vector<double> xr = blend(-alpha);
        double fr = f(xr);
        if (fr < fv[0]) {
            std::vector<double> xe = blend(-gamma);
            double fe = f(xe);
            if (fe < fr) {
                pts[dim] = xe;
                fv[dim] = fe;
            } else {
                pts[dim] = xr;
                fv[dim] = fr;
            }
        } else if (fr < fv[dim - 1]) {
            pts[dim] = xr;
            fv[dim] = fr;
        } else {
            std::vector<double> xc = blend(fr < fv[dim] ? -rho : rho);
            double fc = f(xc);
            if (fc < std::min(fr, fv[dim])) {
                pts[dim] = xc;
                fv[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim; ++i) {
                    for (std::size_t j = 0; j < dim; ++j) pts[i][j] = pts[0][j] + sigma * (pts[i][j] - pts[0][j]);
                    fv[i] = f(pts[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= dim; ++i)
        if (fv[i] < fv[best]) best = i;
    x = pts[best];
    return false;
}

MixedModelFit fit_mixed_impl(const ObservationSet& obs, bool null_model) {
    std::map<std::string, GroupStats> stats;
    std::vector<double> ys, xs;
    for (const auto& row : obs.rows) {
        if (!std::isfinite(row.log_count) || !std::isfinite(row.iota))
            throw NumericError("non-finite observation for unit " + row.unit);
        GroupStats& g = stats[row.language];
        double x = row.log_count, y = row.iota;
        Vec2 z{1.0, x};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) g.ZtZ[i][j] += z[i] * z[j];
        g.Zty[0] += y;
        g.Zty[1] += x * y;
        g.yty += y * y;
        g.n += 1;
        ys.push_back(y);
        xs.push_back(x);
    }
    if (stats.size() < 2) throw NumericError("mixed model needs at least 2 languages");
    for (const auto& [lang, g] : stats)
        if (g.n < 3) throw NumericError("language " + lang + " has fewer than 3 observations");

    int p = null_model ? 1 : 2;
    std::vector<GroupStats> groups;
    for (auto& [lang, g] : stats) {
        // Fixed-effect design: intercept only (null) or intercept + logcount.
        g.ZtX[0][0] = g.ZtZ[0][0];
        g.ZtX[1][0] = g.ZtZ[1][0];
        g.XtX[0][0] = g.ZtZ[0][0];
        g.Xty[0] = g.Zty[0];
        if (p == 2) {
            g.ZtX[0][1] = g.ZtZ[0][1];
            g.ZtX[1][1] = g.ZtZ[1][1];
            g.XtX[0][1] = g.XtX[1][0] = g.ZtZ[0][1];
            g.XtX[1][1] = g.ZtZ[1][1];
            g.Xty[1] = g.Zty[1];
        }
        groups.push_back(g);
    }

    auto lambda_of = [](const std::vector<double>& t) {
        Mat2 l{};
        l[0][0] = std::exp(t[0]);
        l[1][0] = t[1];
        l[1][1] = std::exp(t[2]);
        return l;
    };
    auto objective = [&](const std::vector<double>& t) {
        if (std::fabs(t[0]) > 30.0 || std::fabs(t[2]) > 30.0 || std::fabs(t[1]) > 1e6) return 1e100;
        ProfiledFit pf = profile_loglik(groups, lambda_of(t), p);
        return pf.ok ? -pf.loglik : 1e100;
    };

    // Start: random-effect variances at 10% of total variance, correlation 0.
    double vy = std::max(variance(ys), 1e-12);
    double vx = std::max(variance(xs), 1e-12);
    (void)vy;
    std::vector<double> t0 = {0.5 * std::log(1.0 / 9.0), 0.0, 0.5 * std::log((1.0 / 9.0) / vx)};
    bool converged = nelder_mead(objective, t0, 2000);

    Mat2 lambda = lambda_of(t0);
    ProfiledFit pf = profile_loglik(groups, lambda, p);
    if (!pf.ok) throw NumericError("mixed model likelihood not finite at optimum");

    MixedModelFit fit;
    fit.beta0 = pf.beta[0];
    fit.beta1 = null_model ? 0.0 : pf.beta[1];
    fit.slope_fixed_zero = null_model;
    fit.residual_var = pf.sigma2;
    Mat2 psi = mat_mul(lambda, mat_t(lambda));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) fit.random_cov[i][j] = pf.sigma2 * psi[i][j];
    fit.loglik = pf.loglik;
    fit.n_params = null_model ? 5 : 6;   // beta + 3 covariance + residual
    fit.aic = 2.0 * fit.n_params - 2.0 * fit.loglik;
    fit.converged = converged;
    fit.n_obs = obs.rows.size();
    fit.n_groups = stats.size();
    return fit;
}

} // namespace

MixedModelFit fit_mixed(const ObservationSet& obs) { return fit_mixed_impl(obs, false); }

MixedModelFit fit_mixed_null(const ObservationSet& obs) { return fit_mixed_impl(obs, true); }

LikelihoodRatioTest likelihood_ratio_test(const MixedModelFit& full, const MixedModelFit& null_fit) {
    LikelihoodRatioTest lrt;
    double stat = 2.0 * (full.loglik - null_fit.loglik);
    if (stat < 0.0) {
        lrt.floored = true;
        stat = 0.0;
    }
    lrt.chi2 = stat;
    lrt.df = 1;
    lrt.p = chi2_sf(stat, 1.0);
    return lrt;
}

double aic_log_odds(const MixedModelFit& full, const MixedModelFit& null_fit) {
    return (null_fit.aic - full.aic) / 2.0;
}

ObservationSet build_observations(const std::vector<ScoredForm>& scores,
                                  const std::map<std::string, std::vector<CollapsedParadigm>>& paradigms_by_language,
                                  const std::map<std::string, FrequencyTable>& freq_by_language,
                                  ObservationLevel level,
                                  const std::set<std::string>& included_languages) {
    ObservationSet out;
    out.level = level;
    if (level == ObservationLevel::Form) {
        for (const auto& s : scores) {
            if (!included_languages.count(s.language)) continue;
            auto fit = freq_by_language.find(s.language);
            if (fit == freq_by_language.end()) continue;
            std::uint64_t c = fit->second.count(s.form);
            if (c == 0) continue;   // zero-count forms are excluded
            out.rows.push_back({s.language, s.lexeme + "/" + s.slot, std::log(static_cast<double>(c)), s.iota});
        }
        return out;
    }

    // Lexeme level: average iota over a lexeme's scored cells, count summed
    // over the whole paradigm.
    std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> acc;
    for (const auto& s : scores) {
        if (!included_languages.count(s.language)) continue;
        auto& slot = acc[{s.language, s.lexeme}];
        slot.first += s.iota;
        slot.second += 1;
    }
    for (const auto& [key, sum_n] : acc) {
        const auto& [lang, lexeme] = key;
        auto pit = paradigms_by_language.find(lang);
        auto fit = freq_by_language.find(lang);
        if (pit == paradigms_by_language.end() || fit == freq_by_language.end()) continue;
        const CollapsedParadigm* paradigm = nullptr;
        for (const auto& p : pit->second)
            if (p.lexeme == lexeme) {
                paradigm = &p;
                break;
            }
        if (!paradigm) continue;
        std::uint64_t total = lexeme_count(*paradigm, fit->second);
        if (total == 0) continue;
        double iota = sum_n.first / static_cast<double>(sum_n.second);
        out.rows.push_back({lang, lexeme, std::log(static_cast<double>(total)), iota});
    }
    return out;
}

} // namespace wug
