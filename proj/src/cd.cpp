#include "l2dcd/cd.hpp"

#include "l2dcd/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace l2dcd::cd {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::RECI: return "reci";
        case Method::PairLiNGAM: return "pair_lingam";
        case Method::BQCDLite: return "bqcd_lite";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    if (text == "reci" || text == "RECI") return Method::RECI;
    if (text == "pair_lingam" || text == "lingam" || text == "LiNGAM") return Method::PairLiNGAM;
    if (text == "bqcd_lite" || text == "bqcd" || text == "bQCD") return Method::BQCDLite;
    throw Error(ErrorKind::InvalidConfig, "unknown causal discovery method '" + std::string(text) + "'");
}

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
    if (x.size() != y.size())
        throw Error(ErrorKind::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    if (x.size() < min_len)
        throw Error(ErrorKind::DegenerateInput, "need at least " + std::to_string(min_len) + " samples");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(x.begin(), x.end(), finite) || !std::all_of(y.begin(), y.end(), finite))
        throw Error(ErrorKind::DegenerateInput, "non-finite input");
    for (auto col : {x, y}) {
        auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        if (*lo == *hi) throw Error(ErrorKind::DegenerateInput, "constant column");
    }
}

DirectionScore decide(double forward_cost, double backward_cost, Method method) {
    DirectionScore out;
    out.method = method;
    out.direction = forward_cost <= backward_cost ? Direction::Forward : Direction::Backward;
    out.score = std::abs(forward_cost - backward_cost);
    return out;
}

Eigen::VectorXd min_max(std::span<const double> v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double range = *hi - *lo;
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = (v[i] - *lo) / range;
    return out;
}

double polynomial_mse(const Eigen::VectorXd& predictor, const Eigen::VectorXd& target, int degree) {
    const Eigen::Index n = predictor.size();
    Eigen::MatrixXd design(n, degree + 1);
    design.col(0).setOnes();
    for (int p = 1; p <= degree; ++p) design.col(p) = design.col(p - 1).cwiseProduct(predictor);
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    return (target - design * coef).squaredNorm() / static_cast<double>(n);
}

}  // namespace

DirectionScore reci(std::span<const double> x, std::span<const double> y, int degree) {
    if (degree < 1) throw Error(ErrorKind::OutOfRange, "degree must be positive");
    check_inputs(x, y, static_cast<std::size_t>(degree) + 2);
    const auto xs = min_max(x);
    const auto ys = min_max(y);
    return decide(polynomial_mse(xs, ys, degree), polynomial_mse(ys, xs, degree), Method::RECI);
}

// ---------------------------------------------------------------------------

namespace {

double log_cosh(double u) {
    const double a = std::abs(u);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

std::vector<double> standardize(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    const double sd = std::sqrt(ss / n);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / sd;
    return out;
}

// Standardized residual of regressing target on predictor (both standardized).
// Empty when the residual vanishes (perfectly collinear columns).
std::vector<double> standardized_residual(const std::vector<double>& predictor, const std::vector<double>& target,
                                          double rho) {
    std::vector<double> r(predictor.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = target[i] - rho * predictor[i];
    double ss = 0.0;
    for (double e : r) ss += e * e;
    if (ss <= 1e-24 * static_cast<double>(r.size())) return {};
    return standardize(r);
}

}  // namespace

double max_entropy_approx(std::span<const double> u) {
    const double n = static_cast<double>(u.size());
    double log_cosh_mean = 0.0, gauss_mean = 0.0;
    for (double e : u) {
        log_cosh_mean += log_cosh(e);
        gauss_mean += e * std::exp(-0.5 * e * e);
    }
    log_cosh_mean /= n;
    gauss_mean /= n;
    const double a = log_cosh_mean - EntropyConstants::kGamma;
    return EntropyConstants::kGaussianEntropy - EntropyConstants::kLogCosh * a * a -
           EntropyConstants::kGaussDeriv * gauss_mean * gauss_mean;
}

DirectionScore pair_lingam(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y, 3);
    const auto xs = standardize(x);
    const auto ys = standardize(y);
    double rho = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) rho += xs[i] * ys[i];
    rho /= static_cast<double>(xs.size());

    const auto r_yx = standardized_residual(xs, ys, rho);
    const auto r_xy = standardized_residual(ys, xs, rho);
    double h_r_yx = 0.0, h_r_xy = 0.0;
    if (!r_yx.empty() && !r_xy.empty()) {
        h_r_yx = max_entropy_approx(r_yx);
        h_r_xy = max_entropy_approx(r_xy);
    }
    const double forward = max_entropy_approx(xs) + h_r_yx;
    const double backward = max_entropy_approx(ys) + h_r_xy;
    return decide(forward, backward, Method::PairLiNGAM);
}

// ---------------------------------------------------------------------------

int default_neighbors(std::size_t n) {
    const int k = std::max(10, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
    return std::min(k, static_cast<int>(n) - 1);
}

namespace {

double pinball(double residual, double tau) { return residual >= 0 ? tau * residual : (tau - 1.0) * residual; }

// Type-7 empirical quantile of an ascending-sorted sample.
double sorted_quantile(const std::vector<double>& sorted, double tau) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * tau;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Sum over quantile levels of the normalised kNN conditional pinball loss of target given predictor.
double conditional_quantile_loss(std::span<const double> predictor, std::span<const double> target,
                                 std::span<const double> quantiles, int k) {
    const std::size_t n = predictor.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return predictor[a] < predictor[b]; });

    std::vector<double> sorted_target(target.begin(), target.end());
    std::sort(sorted_target.begin(), sorted_target.end());

    std::vector<double> conditional(quantiles.size(), 0.0);
    std::vector<double> unconditional(quantiles.size(), 0.0);
    std::vector<double> unconditional_q(quantiles.size());
    for (std::size_t t = 0; t < quantiles.size(); ++t) unconditional_q[t] = sorted_quantile(sorted_target, quantiles[t]);

    std::vector<double> neighbours;
    neighbours.reserve(static_cast<std::size_t>(k));
    for (std::size_t p = 0; p < n; ++p) {
        const double centre = predictor[order[p]];
        neighbours.clear();
        std::size_t left = p, right = p + 1;
        while (neighbours.size() < static_cast<std::size_t>(k)) {
            const bool has_left = left > 0;
            const bool has_right = right < n;
            bool take_left;
            if (has_left && has_right)
                take_left = centre - predictor[order[left - 1]] <= predictor[order[right]] - centre;
            else
                take_left = has_left;
            if (take_left) {
                --left;
                neighbours.push_back(target[order[left]]);
            } else {
                neighbours.push_back(target[order[right]]);
                ++right;
            }
        }
        std::sort(neighbours.begin(), neighbours.end());
        const double observed = target[order[p]];
        for (std::size_t t = 0; t < quantiles.size(); ++t) {
            conditional[t] += pinball(observed - sorted_quantile(neighbours, quantiles[t]), quantiles[t]);
            unconditional[t] += pinball(observed - unconditional_q[t], quantiles[t]);
        }
    }
    double total = 0.0;
    for (std::size_t t = 0; t < quantiles.size(); ++t) total += conditional[t] / unconditional[t];
    return total;
}

}  // namespace

DirectionScore bqcd_lite(std::span<const double> x, std::span<const double> y, std::span<const double> quantiles,
                         int k) {
    check_inputs(x, y, 3);
    if (quantiles.empty()) throw Error(ErrorKind::InvalidQuantile, "no quantile levels");
    for (double tau : quantiles)
        if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::InvalidQuantile, std::to_string(tau));
    if (k <= 0) k = default_neighbors(x.size());
    if (static_cast<std::size_t>(k) >= x.size())
        throw Error(ErrorKind::OutOfRange, "k must be smaller than the sample size");
    return decide(conditional_quantile_loss(x, y, quantiles, k), conditional_quantile_loss(y, x, quantiles, k),
                  Method::BQCDLite);
}

DirectionScore run(Method m, std::span<const double> x, std::span<const double> y) {
    switch (m) {
        case Method::RECI: return reci(x, y);
        case Method::PairLiNGAM: return pair_lingam(x, y);
        case Method::BQCDLite: return bqcd_lite(x, y);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown method");
}

}  // namespace l2dcd::cd
