#pragma once

#include "l2dcd/types.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace l2dcd::cd {

enum class Method { RECI, PairLiNGAM, BQCDLite };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct DirectionScore {
    Direction direction = Direction::Forward;
    double score = 0.0;  // confidence margin, 0 on an exact tie
    Method method = Method::RECI;
};

/// Regression-error based inference: min-max rescale both variables, fit a
/// least-squares polynomial in each direction, and pick the direction whose
/// regression leaves the smaller mean squared residual.
DirectionScore reci(std::span<const double> x, std::span<const double> y, int degree = 3);

/// Constants of the maximum-entropy approximation of differential entropy.
struct EntropyConstants {
    static constexpr double kGaussianEntropy = 1.4189385332046727;  // (1 + log 2pi) / 2
    static constexpr double kLogCosh = 79.047;
    static constexpr double kGaussDeriv = 7.4129;
    static constexpr double kGamma = 0.37457;
};

/// Differential entropy approximation for a standardized sample.
double max_entropy_approx(std::span<const double> u);

/// Pairwise likelihood-ratio LiNGAM: R = H(x) + H(r_y|x) - H(y) - H(r_x|y); Forward iff R < 0.
DirectionScore pair_lingam(std::span<const double> x, std::span<const double> y);

/// Default neighbour count for bqcd_lite: max(10, floor(sqrt(N))), capped at N - 1.
int default_neighbors(std::size_t n);

inline const std::vector<double> kDefaultQuantiles = {0.25, 0.5, 0.75};

/// Quantile scoring: k-nearest-neighbour conditional quantiles in both directions,
/// pinball losses normalised by the unconditional pinball loss at the same level.
/// k <= 0 selects default_neighbors(N).
DirectionScore bqcd_lite(std::span<const double> x, std::span<const double> y,
                         std::span<const double> quantiles = kDefaultQuantiles, int k = 0);

/// Runs a method with its default hyperparameters.
DirectionScore run(Method m, std::span<const double> x, std::span<const double> y);

}  // namespace l2dcd::cd
