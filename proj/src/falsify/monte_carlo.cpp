#include "ivf/falsify/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ivf/error.hpp"
#include "ivf/scm/rng.hpp"

namespace ivf::falsify {

RateEstimate rejection_rate(const scm::ScmSpec& spec, std::size_t n, std::uint64_t seed, std::size_t reps,
                            unsigned threads, const std::function<bool(const scm::Dataset&)>& reject) {
    // 1 reject, 0 accept, -1 failed
    const auto marks = mc_map<int>(reps, threads, [&](std::size_t r) {
        const auto d = scm::sample(spec, n, scm::derive_seed(seed, r));
        try {
            return reject(d) ? 1 : 0;
        } catch (const Error&) {
            return -1;
        }
    });
    RateEstimate e;
    e.reps = reps;
    for (int m : marks) {
        if (m > 0) ++e.rejections;
        if (m < 0) ++e.errors;
    }
    e.rate = reps ? static_cast<double>(e.rejections) / static_cast<double>(reps) : 0.0;
    return e;
}

std::vector<double> pvalues(const scm::ScmSpec& spec, std::size_t n, std::uint64_t seed, std::size_t reps,
                            unsigned threads, const std::function<double(const scm::Dataset&)>& p) {
    return mc_map<double>(reps, threads, [&](std::size_t r) {
        const auto d = scm::sample(spec, n, scm::derive_seed(seed, r));
        try {
            return p(d);
        } catch (const Error&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    });
}

double ks_uniform(std::vector<double> sample) {
    sample.erase(std::remove_if(sample.begin(), sample.end(), [](double v) { return std::isnan(v); }), sample.end());
    if (sample.empty()) return 1.0;
    std::sort(sample.begin(), sample.end());
    const double m = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double u = std::clamp(sample[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1) / m - u, u - static_cast<double>(i) / m});
    }
    return d;
}

} // namespace ivf::falsify
