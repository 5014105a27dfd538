#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ivf/scm/dataset.hpp"
#include "ivf/scm/scm.hpp"

namespace ivf::falsify {

/// Calls f(rep) for rep in [0, reps) on up to `threads` workers. Results are
/// stored by index, so the output does not depend on the thread count.
template <class T>
std::vector<T> mc_map(std::size_t reps, unsigned threads, const std::function<T(std::size_t)>& f);

struct RateEstimate {
    std::size_t reps = 0;
    std::size_t rejections = 0;
    std::size_t errors = 0; // replications where the decision threw
    double rate = 0.0;      // rejections / reps
};

/// Replication r draws n rows with seed derive_seed(seed, r).
RateEstimate rejection_rate(const scm::ScmSpec& spec, std::size_t n, std::uint64_t seed, std::size_t reps,
                            unsigned threads, const std::function<bool(const scm::Dataset&)>& reject);

/// p-values of the same kind of replication, NaN for a failed replication.
std::vector<double> pvalues(const scm::ScmSpec& spec, std::size_t n, std::uint64_t seed, std::size_t reps,
                            unsigned threads, const std::function<double(const scm::Dataset&)>& p);

/// Kolmogorov-Smirnov distance between the sample and U(0, 1); NaNs are ignored.
double ks_uniform(std::vector<double> sample);

} // namespace ivf::falsify

#include "ivf/falsify/monte_carlo_impl.hpp"
