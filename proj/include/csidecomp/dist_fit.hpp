#ifndef CSIDECOMP_DIST_FIT_HPP
#define CSIDECOMP_DIST_FIT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "csidecomp/error.hpp"

namespace csid {

enum class Family { Rician, Rayleigh, Nakagami, Weibull, Normal, Uniform };

inline constexpr std::array<Family, 6> kAllFamilies{Family::Rician, Family::Rayleigh, Family::Nakagami,
                                                    Family::Weibull, Family::Normal, Family::Uniform};

inline std::string_view to_string(Family f) {
    switch (f) {
        case Family::Rician: return "rician";
        case Family::Rayleigh: return "rayleigh";
        case Family::Nakagami: return "nakagami";
        case Family::Weibull: return "weibull";
        case Family::Normal: return "normal";
        case Family::Uniform: return "uniform";
    }
    return "unknown";
}

/// Parameter conventions: Rician (nu, sigma), Rayleigh (sigma), Nakagami (m, omega),
/// Weibull (scale lambda, shape k), Normal (mu, sigma), Uniform (a, b).
inline std::array<std::string_view, 2> parameter_names(Family f) {
    switch (f) {
        case Family::Rician: return {"nu", "sigma"};
        case Family::Rayleigh: return {"sigma", ""};
        case Family::Nakagami: return {"m", "omega"};
        case Family::Weibull: return {"lambda", "k"};
        case Family::Normal: return {"mu", "sigma"};
        case Family::Uniform: return {"a", "b"};
    }
    return {"", ""};
}

inline int parameter_count(Family f) { return f == Family::Rayleigh ? 1 : 2; }

inline bool positive_support(Family f) { return f != Family::Normal && f != Family::Uniform; }

struct FitResult {
    Family family = Family::Normal;
    std::array<double, 2> params{0.0, 0.0};
    int k = 2;
    double log_likelihood = 0.0;
    double aic = 0.0;
    double ks_stat = 0.0;
    double p_value = 0.0;
    int iterations = 0;
};

inline double aic(double log_likelihood, int k) {
    require(k >= 1, ErrorKind::InvalidArgument, "parameter count must be >= 1");
    return -2.0 * log_likelihood + 2.0 * static_cast<double>(k);
}

namespace fit_detail {

inline constexpr int kMaxIterations = 500;
inline constexpr double kStepTolerance = 1e-8;

/// e^{-z} I0(z) and e^{-z} I1(z) for z >= 0.
inline std::pair<double, double> bessel_i01_scaled(double z) {
    if (z < 20.0) {
        const double q = 0.25 * z * z;
        double term0 = 1.0;
        double term1 = 1.0;
        double s0 = 1.0;
        double s1 = 1.0;
        for (int k = 1; k < 200; ++k) {
            term0 *= q / (static_cast<double>(k) * k);
            term1 *= q / (static_cast<double>(k) * (k + 1));
            s0 += term0;
            s1 += term1;
            if (term0 < 1e-17 * s0 && term1 < 1e-17 * s1) {
                break;
            }
        }
        const double e = std::exp(-z);
        return {s0 * e, 0.5 * z * s1 * e};
    }
    // Hankel asymptotic expansion; terms shrink until k ~ 2z, well past where we stop.
    const double base = 1.0 / std::sqrt(2.0 * std::numbers::pi * z);
    double s0 = 1.0;
    double s1 = 1.0;
    double t0 = 1.0;
    double t1 = 1.0;
    for (int k = 1; k < 40; ++k) {
        const double odd = 2.0 * k - 1.0;
        t0 *= -(0.0 - odd * odd) / (8.0 * z * k);
        t1 *= -(4.0 - odd * odd) / (8.0 * z * k);
        s0 += t0;
        s1 += t1;
        if (std::abs(t0) < 1e-17 * s0 && std::abs(t1) < 1e-17 * std::abs(s1)) {
            break;
        }
    }
    return {base * s0, base * s1};
}

inline double log_bessel_i0(double z) {
    const double az = std::abs(z);
    return az + std::log(bessel_i01_scaled(az).first);
}

/// I1(z) / I0(z)
inline double bessel_ratio(double z) {
    const double az = std::abs(z);
    const auto [i0, i1] = bessel_i01_scaled(az);
    return std::copysign(i1 / i0, z);
}

struct Moments {
    double n = 0.0;
    double mean = 0.0;
    double mean_sq = 0.0;
    double mean_log = 0.0;
    double min = 0.0;
    double max = 0.0;
};

inline Moments moments(std::span<const double> x, bool logs) {
    Moments mo;
    mo.n = static_cast<double>(x.size());
    mo.min = *std::min_element(x.begin(), x.end());
    mo.max = *std::max_element(x.begin(), x.end());
    for (double v : x) {
        mo.mean += v;
        mo.mean_sq += v * v;
        if (logs) {
            mo.mean_log += std::log(v);
        }
    }
    mo.mean /= mo.n;
    mo.mean_sq /= mo.n;
    mo.mean_log /= mo.n;
    return mo;
}

inline double rician_loglik(std::span<const double> x, double nu, double s) {
    double ll = 0.0;
    for (double v : x) {
        ll += std::log(v) - std::log(s) - (v * v + nu * nu) / (2.0 * s) + log_bessel_i0(v * nu / s);
    }
    return ll;
}

/// Newton iteration with Levenberg damping over (nu, s = sigma^2). The
/// log-likelihood is even in nu, so nu is unconstrained and reported as |nu|.
inline FitResult fit_rician(std::span<const double> x) {
    const Moments mo = moments(x, false);
    double m4 = 0.0;
    for (double v : x) {
        m4 += v * v * v * v;
    }
    m4 /= mo.n;
    double nu = std::pow(std::max(2.0 * mo.mean_sq * mo.mean_sq - m4, 0.0), 0.25);
    if (nu < 0.1 * std::sqrt(mo.mean_sq)) {
        nu = 0.1 * std::sqrt(mo.mean_sq);
    }
    double s = std::max(0.5 * (mo.mean_sq - nu * nu), 0.05 * mo.mean_sq);

    double ll = rician_loglik(x, nu, s);
    int iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        double gv = 0.0, gs = 0.0, hvv = 0.0, hvs = 0.0, hss = 0.0;
        for (double v : x) {
            const double z = v * nu / s;
            const double a = bessel_ratio(z);
            const double da = z == 0.0 ? 0.5 : 1.0 - a / z - a * a; // A'(z)
            gv += -nu / s + v / s * a;
            gs += -1.0 / s + (v * v + nu * nu) / (2.0 * s * s) - v * nu / (s * s) * a;
            hvv += -1.0 / s + v * v / (s * s) * da;
            hvs += nu / (s * s) - v / (s * s) * a - v * v * nu / (s * s * s) * da;
            hss += 1.0 / (s * s) - (v * v + nu * nu) / (s * s * s) + 2.0 * v * nu / (s * s * s) * a +
                   v * v * nu * nu / (s * s * s * s) * da;
        }
        // Solve (-H + mu I) delta = g, raising mu until the step improves the likelihood.
        // Near nu = 0 the nu curvature vanishes (the likelihood is quartic there),
        // so damping starts small and grows only when a step fails.
        const double scale = std::abs(hvv) + std::abs(hss) + 2.0 * std::abs(hvs) + 1e-300;
        double mu = 0.0;
        const double det = hvv * hss - hvs * hvs;
        if (!(hvv < 0.0 && det > 0.0)) {
            mu = 1e-9 * scale;
        }
        bool accepted = false;
        double dv = 0.0;
        double ds = 0.0;
        double gain = 0.0;
        for (int tries = 0; tries < 80; ++tries) {
            const double a11 = -hvv + mu;
            const double a22 = -hss + mu;
            const double a12 = -hvs;
            const double d = a11 * a22 - a12 * a12;
            dv = (a22 * gv - a12 * gs) / d;
            ds = (a11 * gs - a12 * gv) / d;
            if (s + ds > 0.0 && std::isfinite(dv) && std::isfinite(ds)) {
                const double trial = rician_loglik(x, nu + dv, s + ds);
                if (trial >= ll - 1e-12 * std::abs(ll)) {
                    nu += dv;
                    s += ds;
                    gain = trial - ll;
                    ll = trial;
                    accepted = true;
                    break;
                }
            }
            mu = mu == 0.0 ? 1e-9 * scale : 4.0 * mu;
        }
        const bool small_step =
            std::abs(dv) <= kStepTolerance * (1.0 + std::abs(nu)) && std::abs(ds) <= kStepTolerance * (1.0 + s);
        // a flat ridge in nu: the likelihood has stopped moving even if nu creeps
        const bool flat = std::abs(gain) <= 1e-13 * (1.0 + std::abs(ll)) && std::abs(ds) <= 1e-6 * s;
        if (!accepted || small_step || flat) {
            break;
        }
    }
    require(iter < kMaxIterations, ErrorKind::NonConvergence,
            "Rician fit did not converge in 500 iterations (nu = " + std::to_string(std::abs(nu)) +
                ", sigma = " + std::to_string(std::sqrt(s)) + ")");
    FitResult r;
    r.family = Family::Rician;
    r.params = {std::abs(nu), std::sqrt(s)};
    r.log_likelihood = ll;
    r.iterations = iter + 1;
    return r;
}

inline FitResult fit_weibull(std::span<const double> x) {
    const Moments mo = moments(x, true);
    std::vector<double> logs(x.size());
    std::vector<double> y(x.size());
    const double scale = mo.max;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = x[i] / scale;
        logs[i] = std::log(y[i]);
    }
    double var_log = 0.0;
    const double mean_log_y = mo.mean_log - std::log(scale);
    for (double l : logs) {
        var_log += (l - mean_log_y) * (l - mean_log_y);
    }
    var_log /= mo.n;
    double k = var_log > 0.0 ? 1.2 / std::sqrt(var_log) : 1.0;

    // Root of 1/k + mean(log y) - sum(y^k log y) / sum(y^k), a decreasing function of k.
    int iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double p = std::exp(k * logs[i]);
            s0 += p;
            s1 += p * logs[i];
            s2 += p * logs[i] * logs[i];
        }
        const double g = 1.0 / k + mean_log_y - s1 / s0;
        const double dg = -1.0 / (k * k) - (s2 * s0 - s1 * s1) / (s0 * s0);
        double step = -g / dg;
        while (k + step <= 0.0) {
            step *= 0.5;
        }
        k += step;
        if (std::abs(step) <= kStepTolerance * (1.0 + k)) {
            break;
        }
    }
    require(iter < kMaxIterations, ErrorKind::NonConvergence, "Weibull fit did not converge (k = " + std::to_string(k) + ")");
    double mean_pow = 0.0;
    for (double l : logs) {
        mean_pow += std::exp(k * l);
    }
    mean_pow /= mo.n;
    const double lambda = scale * std::pow(mean_pow, 1.0 / k);

    FitResult r;
    r.family = Family::Weibull;
    r.params = {lambda, k};
    double ll = 0.0;
    for (double v : x) {
        ll += std::log(k / lambda) + (k - 1.0) * std::log(v / lambda) - std::pow(v / lambda, k);
    }
    r.log_likelihood = ll;
    r.iterations = iter + 1;
    return r;
}

inline FitResult fit_nakagami(std::span<const double> x) {
    const Moments mo = moments(x, true);
    const double omega = mo.mean_sq;
    const double delta = std::log(omega) - 2.0 * mo.mean_log; // log(omega) - mean(log x^2) >= 0
    require(delta > 0.0, ErrorKind::NonConvergence, "Nakagami fit needs non-constant data");
    double m = (1.0 + std::sqrt(1.0 + 4.0 * delta / 3.0)) / (4.0 * delta);
    int iter = 0;
    for (; iter < kMaxIterations; ++iter) {
        const double f = std::log(m) - boost::math::digamma(m) - delta;
        const double df = 1.0 / m - boost::math::trigamma(m);
        double step = -f / df;
        while (m + step <= 0.0) {
            step *= 0.5;
        }
        m += step;
        if (std::abs(step) <= kStepTolerance * (1.0 + m)) {
            break;
        }
    }
    require(iter < kMaxIterations, ErrorKind::NonConvergence, "Nakagami fit did not converge (m = " + std::to_string(m) + ")");
    FitResult r;
    r.family = Family::Nakagami;
    r.params = {m, omega};
    const double c = std::log(2.0) + m * std::log(m) - std::lgamma(m) - m * std::log(omega);
    double ll = 0.0;
    for (double v : x) {
        ll += c + (2.0 * m - 1.0) * std::log(v) - m * v * v / omega;
    }
    r.log_likelihood = ll;
    r.iterations = iter + 1;
    return r;
}

} // namespace fit_detail

/// CDF of a fitted family at x.
inline double fitted_cdf(Family family, const std::array<double, 2>& p, double x) {
    switch (family) {
        case Family::Rician: {
            if (x <= 0.0) return 0.0;
            const double s2 = p[1] * p[1];
            if (p[0] == 0.0) return -std::expm1(-x * x / (2.0 * s2));
            boost::math::non_central_chi_squared_distribution<double> dist(2.0, p[0] * p[0] / s2);
            return boost::math::cdf(dist, x * x / s2);
        }
        case Family::Rayleigh:
            return x <= 0.0 ? 0.0 : -std::expm1(-x * x / (2.0 * p[0] * p[0]));
        case Family::Nakagami:
            return x <= 0.0 ? 0.0 : boost::math::gamma_p(p[0], p[0] * x * x / p[1]);
        case Family::Weibull:
            return x <= 0.0 ? 0.0 : -std::expm1(-std::pow(x / p[0], p[1]));
        case Family::Normal:
            return 0.5 * std::erfc(-(x - p[0]) / (p[1] * std::numbers::sqrt2));
        case Family::Uniform:
            return std::clamp((x - p[0]) / (p[1] - p[0]), 0.0, 1.0);
    }
    return 0.0;
}

/// Survival function of the asymptotic Kolmogorov distribution, P(K > lambda).
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) {
        return 1.0;
    }
    if (lambda < 1.18) {
        // P(K <= l) = sqrt(2 pi)/l * sum_k exp(-(2k-1)^2 pi^2 / (8 l^2)), fast for small l.
        const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
        double sum = 0.0;
        for (int k = 1; k < 100; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double term = std::exp(-odd * odd * c);
            sum += term;
            if (term < 1e-10 * sum) {
                break;
            }
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k < 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-10) {
            break;
        }
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test. The p-value uses the asymptotic
/// distribution at the effective size sqrt(n) + 0.12 + 0.11/sqrt(n); no
/// correction is made for parameters estimated from the same sample.
inline KsResult ks_test(std::span<const double> samples, const std::function<double(double)>& cdf) {
    require(!samples.empty(), ErrorKind::InsufficientSamples, "KS test needs samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, hi - f, f - lo});
    }
    d = std::clamp(d, 0.0, 1.0);
    const double en = std::sqrt(n);
    return {d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)};
}

inline constexpr std::size_t kMinFitSamples = 20;

/// Maximum-likelihood fit of one family, with AIC and KS goodness of fit.
inline FitResult fit_mle(std::span<const double> samples, Family family) {
    require(samples.size() >= kMinFitSamples, ErrorKind::InsufficientSamples,
            "distribution fitting needs at least " + std::to_string(kMinFitSamples) + " samples");
    for (double v : samples) {
        require(std::isfinite(v), ErrorKind::NonFinite, "sample is not finite");
        if (positive_support(family)) {
            require(v > 0.0, ErrorKind::InvalidArgument,
                    std::string(to_string(family)) + " needs strictly positive samples");
        }
    }
    const auto mo = fit_detail::moments(samples, false);
    const double n = mo.n;
    FitResult r;
    switch (family) {
        case Family::Rayleigh: {
            const double s2 = mo.mean_sq / 2.0;
            r.family = family;
            r.params = {std::sqrt(s2), 0.0};
            double sum_log = 0.0;
            for (double v : samples) {
                sum_log += std::log(v);
            }
            r.log_likelihood = sum_log - n * std::log(s2) - n * mo.mean_sq / (2.0 * s2);
            break;
        }
        case Family::Normal: {
            double var = 0.0;
            for (double v : samples) {
                var += (v - mo.mean) * (v - mo.mean);
            }
            var /= n;
            require(var > 0.0, ErrorKind::InvalidArgument, "normal fit needs non-constant data");
            r.family = family;
            r.params = {mo.mean, std::sqrt(var)};
            r.log_likelihood = -0.5 * n * (std::log(2.0 * std::numbers::pi * var) + 1.0);
            break;
        }
        case Family::Uniform: {
            require(mo.max > mo.min, ErrorKind::InvalidArgument, "uniform fit needs non-constant data");
            r.family = family;
            r.params = {mo.min, mo.max};
            r.log_likelihood = -n * std::log(mo.max - mo.min);
            break;
        }
        case Family::Rician: r = fit_detail::fit_rician(samples); break;
        case Family::Nakagami: r = fit_detail::fit_nakagami(samples); break;
        case Family::Weibull: r = fit_detail::fit_weibull(samples); break;
    }
    r.k = parameter_count(family);
    r.aic = aic(r.log_likelihood, r.k);
    const auto params = r.params;
    const KsResult ks = ks_test(samples, [family, params](double v) { return fitted_cdf(family, params, v); });
    r.ks_stat = ks.statistic;
    r.p_value = ks.p_value;
    return r;
}

/// Fits every requested family whose support admits the data and returns the
/// results sorted by ascending AIC (ties keep family order).
inline std::vector<FitResult> fit_all(std::span<const double> samples,
                                      std::span<const Family> families = kAllFamilies) {
    const bool all_positive = std::all_of(samples.begin(), samples.end(), [](double v) { return v > 0.0; });
    std::vector<FitResult> out;
    for (Family f : families) {
        if (positive_support(f) && !all_positive) {
            continue;
        }
        out.push_back(fit_mle(samples, f));
    }
    std::stable_sort(out.begin(), out.end(), [](const FitResult& a, const FitResult& b) { return a.aic < b.aic; });
    return out;
}

} // namespace csid

#endif
