#include "graphpoison/rng.hpp"

#include <algorithm>
#include <cmath>

namespace graphpoison {

int discretize_rating(double x, int r_max) {
    if (std::isnan(x)) return 1;
    const double r = std::round(std::clamp(x, -1e9, 1e9));
    return static_cast<int>(std::clamp(r, 1.0, static_cast<double>(r_max)));
}

int sample_rating(Rng& rng, double mean, double stddev, int r_max) {
    if (!(stddev > 0.0)) return discretize_rating(mean, r_max);
    std::normal_distribution<double> dist(mean, stddev);
    return discretize_rating(dist(rng), r_max);
}

}  // namespace graphpoison
