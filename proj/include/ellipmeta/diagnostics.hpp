#pragma once

#include <vector>

namespace ellipmeta {

/// Normalized autocorrelation at lags 0..n-1, computed by FFT.
std::vector<double> autocorrelation(const std::vector<double>& x);

/// Effective sample size from Geyer's initial monotone sequence estimator.
/// Returns 1 for a constant series and is capped at n log10(n).
double effective_sample_size(const std::vector<double>& x);

}  // namespace ellipmeta
