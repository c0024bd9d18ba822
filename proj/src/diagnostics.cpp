#include "ellipmeta/diagnostics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace ellipmeta {

std::vector<double> autocorrelation(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);

  std::size_t m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> padded(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[i] = x[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (auto& c : spec) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spec);

  std::vector<double> rho(n, 0.0);
  if (!(acov[0] > 0.0)) return rho;
  for (std::size_t k = 0; k < n; ++k) rho[k] = acov[k] / acov[0];
  return rho;
}

double effective_sample_size(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const std::vector<double> rho = autocorrelation(x);
  if (rho[0] == 0.0) return 1.0;

  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    double pair = rho[k] + rho[k + 1];
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    tau += 2.0 * pair;
    prev = pair;
  }
  const double nn = static_cast<double>(n);
  return std::min(nn / std::max(tau, 1e-12), nn * std::log10(nn));
}

}  // namespace ellipmeta
