#ifndef CSIDECOMP_TEST_ORACLES_HPP
#define CSIDECOMP_TEST_ORACLES_HPP

// Straight-line reference implementations. None of these share code with the
// library; they trade speed for being obviously correct.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// k(x, y) = exp(-(x-y)^2 / s^2) with s^2 = median_{i<j}((x_i - x_j)^2) / 2.
inline std::vector<std::vector<double>> scalar_kernel(const std::vector<double>& x) {
    const std::size_t m = x.size();
    std::vector<double> sq;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            sq.push_back((x[i] - x[j]) * (x[i] - x[j]));
        }
    }
    std::vector<std::vector<double>> k(m, std::vector<double>(m, 1.0));
    const double med = median(sq);
    if (med == 0.0) {
        return k;
    }
    const double s2 = med / 2.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            k[i][j] = std::exp(-(x[i] - x[j]) * (x[i] - x[j]) / s2);
        }
    }
    return k;
}

/// The three-term V-statistic written out as loops over every index.
inline double dhsic(const std::vector<std::vector<double>>& vars) {
    const std::size_t d = vars.size();
    const std::size_t m = vars.front().size();
    std::vector<std::vector<std::vector<double>>> k;
    for (const auto& v : vars) {
        k.push_back(scalar_kernel(v));
    }
    const double md = static_cast<double>(m);
    double t1 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double p = 1.0;
            for (std::size_t l = 0; l < d; ++l) {
                p *= k[l][i][j];
            }
            t1 += p;
        }
    }
    t1 /= md * md;
    double t2 = 1.0;
    for (std::size_t l = 0; l < d; ++l) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                s += k[l][i][j];
            }
        }
        t2 *= s;
    }
    t2 /= std::pow(md, 2.0 * static_cast<double>(d));
    double t3 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double p = 1.0;
        for (std::size_t l = 0; l < d; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                s += k[l][i][j];
            }
            p *= s;
        }
        t3 += p;
    }
    t3 *= 2.0 / std::pow(md, static_cast<double>(d + 1));
    return t1 + t2 - t3;
}

/// k nearest by full sort of (distance, index).
inline std::vector<std::size_t> knn(const std::vector<Eigen::Vector3d>& pts, std::size_t node, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j != node) {
            all.emplace_back((pts[j] - pts[node]).norm(), j);
        }
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(all[i].second);
    }
    return out;
}

/// exp(-|h_i - conj(h_j)|^2 / (2 s^2)) evaluated entry by entry.
inline Eigen::MatrixXd conj_gram(const Eigen::MatrixXcd& h, double sigma) {
    const Eigen::Index n = h.cols();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double s = 0.0;
            for (Eigen::Index t = 0; t < h.rows(); ++t) {
                s += std::norm(h(t, i) - std::conj(h(t, j)));
            }
            k(i, j) = std::exp(-s / (2.0 * sigma * sigma));
        }
    }
    return k;
}

inline Eigen::MatrixXd hkh(const Eigen::MatrixXd& k) {
    const Eigen::Index n = k.rows();
    const Eigen::MatrixXd h =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    return h * k * h;
}

enum class Act { Linear, Tanh, Softplus, Relu };

inline double act(Act a, double z) {
    switch (a) {
        case Act::Linear: return z;
        case Act::Tanh: return std::tanh(z);
        case Act::Softplus: return std::log(1.0 + std::exp(z));
        case Act::Relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

/// y_i = act(sum_j W_ij x_j + b_i), layer after layer, one sample.
inline std::vector<double> mlp_forward(const std::vector<Eigen::MatrixXd>& w, const std::vector<Eigen::VectorXd>& b,
                                       const std::vector<Act>& acts, std::vector<double> x) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        std::vector<double> y(static_cast<std::size_t>(w[l].rows()));
        for (Eigen::Index i = 0; i < w[l].rows(); ++i) {
            double s = b[l](i);
            for (Eigen::Index j = 0; j < w[l].cols(); ++j) {
                s += w[l](i, j) * x[static_cast<std::size_t>(j)];
            }
            y[static_cast<std::size_t>(i)] = act(acts[l], s);
        }
        x = std::move(y);
    }
    return x;
}

/// (1/N) sum_n sum_{m in U(n)} sum_t r[t][n] r[t][m]
inline double e2(const std::vector<std::vector<double>>& residual_by_node,
                 const std::vector<std::vector<std::size_t>>& groups) {
    double total = 0.0;
    for (std::size_t n = 0; n < residual_by_node.size(); ++n) {
        for (std::size_t m : groups[n]) {
            for (std::size_t t = 0; t < residual_by_node[n].size(); ++t) {
                total += residual_by_node[n][t] * residual_by_node[m][t];
            }
        }
    }
    return total / static_cast<double>(residual_by_node.size());
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = g(rng);
        }
    }
    return m;
}

inline Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    Eigen::MatrixXcd m(rows, cols);
    m.real() = random_matrix(rows, cols, rng);
    m.imag() = random_matrix(rows, cols, rng);
    return m;
}

} // namespace oracle

#endif
