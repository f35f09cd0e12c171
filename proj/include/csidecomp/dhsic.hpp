#ifndef CSIDECOMP_DHSIC_HPP
#define CSIDECOMP_DHSIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "csidecomp/error.hpp"
#include "csidecomp/kpca.hpp"
#include "csidecomp/parallel.hpp"
#include "csidecomp/rng.hpp"

namespace csid {

/// Per-variable Gram matrix of a scalar sequence under
/// k(x, y) = exp(-(x - y)^2 / sigma^2), sigma = sqrt(median((x_i - x_j)^2) / 2).
struct ScalarGram {
    std::size_t m = 0;
    std::vector<double> k; // row-major m x m
    std::vector<double> row_sums;
    double total = 0.0;
    double sigma = 0.0;
    bool degenerate = false; // constant sequence, K = all ones

    double operator()(std::size_t i, std::size_t j) const { return k[i * m + j]; }
};

inline ScalarGram scalar_gram(std::span<const double> x) {
    const std::size_t m = x.size();
    require(m >= 2, ErrorKind::InsufficientSamples, "dHSIC needs at least two observations per variable");
    ScalarGram g;
    g.m = m;
    g.k.assign(m * m, 1.0);

    std::vector<double> sq;
    sq.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = x[i] - x[j];
            sq.push_back(d * d);
        }
    }
    double med = median_of(sq);
    if (med == 0.0) {
        const double largest = *std::max_element(sq.begin(), sq.end());
        if (largest == 0.0) {
            g.degenerate = true;
        } else {
            // More than half the pairs tie exactly; fall back to the median of the non-zero distances.
            std::vector<double> nonzero;
            std::copy_if(sq.begin(), sq.end(), std::back_inserter(nonzero), [](double v) { return v > 0.0; });
            med = median_of(std::move(nonzero));
        }
    }
    if (!g.degenerate) {
        g.sigma = std::sqrt(med / 2.0);
        const double inv = 1.0 / (g.sigma * g.sigma);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                const double d = x[i] - x[j];
                const double v = std::exp(-d * d * inv);
                g.k[i * m + j] = v;
                g.k[j * m + i] = v;
            }
        }
    }
    g.row_sums.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        g.row_sums[i] = std::accumulate(g.k.begin() + static_cast<std::ptrdiff_t>(i * m),
                                        g.k.begin() + static_cast<std::ptrdiff_t>((i + 1) * m), 0.0);
    }
    g.total = std::accumulate(g.row_sums.begin(), g.row_sums.end(), 0.0);
    return g;
}

/// d sequences of equal length M, one per variable under test.
class DhsicInput {
public:
    explicit DhsicInput(std::vector<std::vector<double>> variables) {
        require(variables.size() >= 2, ErrorKind::InvalidArgument, "dHSIC needs at least two variables");
        const std::size_t m = variables.front().size();
        for (const auto& v : variables) {
            require(v.size() == m, ErrorKind::ShapeMismatch, "all dHSIC variables must have the same length");
            for (double x : v) {
                require(std::isfinite(x), ErrorKind::NonFinite, "dHSIC observation is not finite");
            }
        }
        grams_.reserve(variables.size());
        for (const auto& v : variables) {
            grams_.push_back(scalar_gram(v));
        }
    }

    std::size_t d() const { return grams_.size(); }
    std::size_t m() const { return grams_.front().m; }
    const std::vector<ScalarGram>& grams() const { return grams_; }
    bool degenerate() const {
        return std::any_of(grams_.begin(), grams_.end(), [](const ScalarGram& g) { return g.degenerate; });
    }

private:
    std::vector<ScalarGram> grams_;
};

/// term1 + term2 - term3 of the V-statistic where variable l > 0 is read
/// through the index permutation perms[l - 1] (identity when perms is empty):
///   term1 = 1/M^2 sum_ij prod_l K^l_ij
///   term2 = 1/M^(2d) prod_l sum_ij K^l_ij
///   term3 = 2/M^(d+1) sum_i prod_l sum_j K^l_ij
inline double dhsic_statistic_permuted(const DhsicInput& input, const std::vector<std::vector<std::size_t>>& perms) {
    const auto& grams = input.grams();
    const std::size_t m = input.m();
    const std::size_t d = input.d();
    const double md = static_cast<double>(m);
    const bool identity = perms.empty();
    auto index = [&](std::size_t l, std::size_t i) { return (identity || l == 0) ? i : perms[l - 1][i]; };

    double term1 = 0.0;
    std::vector<double> row(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double* k0 = &grams[0].k[i * m];
        std::copy(k0, k0 + m, row.begin());
        for (std::size_t l = 1; l < d; ++l) {
            const double* kl = &grams[l].k[index(l, i) * m];
            if (identity) {
                for (std::size_t j = 0; j < m; ++j) {
                    row[j] *= kl[j];
                }
            } else {
                const auto& p = perms[l - 1];
                for (std::size_t j = 0; j < m; ++j) {
                    row[j] *= kl[p[j]];
                }
            }
        }
        term1 += std::accumulate(row.begin(), row.end(), 0.0);
    }
    term1 /= md * md;

    double term2 = 1.0;
    for (const auto& g : grams) {
        term2 *= g.total / (md * md);
    }

    double term3 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double prod = 1.0;
        for (std::size_t l = 0; l < d; ++l) {
            prod *= grams[l].row_sums[index(l, i)] / md;
        }
        term3 += prod;
    }
    term3 *= 2.0 / md;

    return term1 + term2 - term3;
}

inline double dhsic_statistic(const DhsicInput& input) { return dhsic_statistic_permuted(input, {}); }

struct CriticalValue {
    double value = 0.0;
    std::size_t index = 0; // 1-based position in the sorted resampled statistics
    std::size_t ties = 0;
    bool clamped = false;
    std::vector<double> sorted; // resampled statistics, ascending
};

/// Monte-Carlo critical value from b resamplings that permute every variable
/// except the first independently. The order statistic index is
/// ceil((b+1)(1-alpha)) plus the number of other replicates tied with the one
/// at that index, clamped to b.
inline CriticalValue critical_value_detail(const DhsicInput& input, double alpha, std::size_t b, std::uint64_t seed,
                                           unsigned threads = default_threads()) {
    require(b >= 100, ErrorKind::InvalidArgument, "need at least 100 resamplings");
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
    const std::size_t m = input.m();
    const std::size_t d = input.d();

    CriticalValue cv;
    cv.sorted.assign(b, 0.0);
    parallel_for(
        b,
        [&](std::size_t r) {
            Rng rng = make_rng(seed, 0x64485349u, r);
            std::vector<std::vector<std::size_t>> perms(d - 1, std::vector<std::size_t>(m));
            for (auto& p : perms) {
                std::iota(p.begin(), p.end(), std::size_t{0});
                std::shuffle(p.begin(), p.end(), rng);
            }
            cv.sorted[r] = dhsic_statistic_permuted(input, perms);
        },
        threads);
    std::sort(cv.sorted.begin(), cv.sorted.end());

    const double position = std::ceil(static_cast<double>(b + 1) * (1.0 - alpha) - 1e-12);
    std::size_t base = static_cast<std::size_t>(std::max(1.0, position));
    if (base > b) {
        base = b;
        cv.clamped = true;
    }
    const double at = cv.sorted[base - 1];
    const auto [lo, hi] = std::equal_range(cv.sorted.begin(), cv.sorted.end(), at);
    cv.ties = static_cast<std::size_t>(hi - lo) - 1;
    cv.index = base + cv.ties;
    if (cv.index > b) {
        cv.index = b;
        cv.clamped = true;
    }
    cv.value = cv.sorted[cv.index - 1];
    return cv;
}

inline double critical_value(const DhsicInput& input, double alpha, std::size_t b, std::uint64_t seed) {
    return critical_value_detail(input, alpha, b, seed).value;
}

/// Normalised dependence: statistic / cv when the test rejects, else zero.
inline double delta_bar(double statistic, double cv) {
    require(cv > 0.0, ErrorKind::InvalidArgument, "critical value must be positive");
    return statistic > cv ? statistic / cv : 0.0;
}

struct DependenceReport {
    double statistic = 0.0;
    double critical_value = 0.0;
    double delta_bar = 0.0;
    double ratio = 0.0; // statistic / critical_value without the rejection gate
    double alpha = 0.05;
    std::size_t b = 1000;
    bool reject = false;
    bool degenerate = false;
    std::vector<std::string> warnings;
};

inline DependenceReport dhsic_test(const DhsicInput& input, double alpha, std::size_t b, std::uint64_t seed,
                                   unsigned threads = default_threads()) {
    DependenceReport rep;
    rep.alpha = alpha;
    rep.b = b;
    rep.degenerate = input.degenerate();
    rep.statistic = dhsic_statistic(input);
    const CriticalValue cv = critical_value_detail(input, alpha, b, seed, threads);
    rep.critical_value = cv.value;
    if (cv.clamped) {
        rep.warnings.push_back("critical-value index clamped to b");
    }
    if (rep.degenerate) {
        rep.warnings.push_back("constant variable: its kernel is all ones");
    }
    rep.reject = rep.statistic > rep.critical_value;
    if (rep.critical_value > 0.0) {
        rep.ratio = rep.statistic / rep.critical_value;
        rep.delta_bar = delta_bar(rep.statistic, rep.critical_value);
    } else {
        rep.warnings.push_back("non-positive critical value; delta_bar set to 0");
    }
    return rep;
}

/// Sample Pearson correlation.
inline double pearson_cc(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorKind::ShapeMismatch, "Pearson inputs differ in length");
    require(a.size() >= 2, ErrorKind::InsufficientSamples, "Pearson needs at least two samples");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    require(saa > 0.0 && sbb > 0.0, ErrorKind::InvalidArgument, "Pearson input has zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

} // namespace csid

#endif
