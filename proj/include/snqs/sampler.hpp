#pragma once

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "snqs/errors.hpp"
#include "snqs/rbm.hpp"
#include "snqs/rng.hpp"
#include "snqs/spin.hpp"

namespace snqs {

struct ChainConfig {
  int n_chains = 16;
  int n_samples = 256;  // kept samples per chain
  int burn_in = 100;    // sweeps discarded before the first kept sample
  int thinning = 2;     // sweeps between kept samples
  std::uint64_t seed = 0;

  void validate() const {
    if (n_chains < 1 || n_samples < 1 || burn_in < 1 || thinning < 1) {
      throw ConfigError("ChainConfig: all settings must be positive");
    }
  }

  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

// Samples from P_t ~ |psi|^2, concatenated chain by chain.
struct SampleSet {
  std::vector<SpinConfig> configs;
  int n_chains = 0;
  int samples_per_chain = 0;
  double source_time = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return configs.size(); }
};

// Single-spin-flip Metropolis targeting |psi|^2: proposals flip one
// uniformly random site, acceptance min(1, |psi_new/psi_old|^2), one
// sweep = L proposals. Chains are keyed by (seed, chain index) so
// identical inputs reproduce identical output.
inline SampleSet sample(const RbmParams& p, const ChainConfig& cfg) {
  cfg.validate();
  if (!p.all_finite()) throw NumericError("sample: non-finite parameters");
  const int L = p.n_sites();
  SampleSet out;
  out.n_chains = cfg.n_chains;
  out.samples_per_chain = cfg.n_samples;
  out.seed = cfg.seed;
  out.configs.reserve(static_cast<std::size_t>(cfg.n_chains) * cfg.n_samples);
  for (int chain = 0; chain < cfg.n_chains; ++chain) {
    CounterRng rng(derive_key(cfg.seed, {static_cast<std::uint64_t>(RngStream::sampler),
                                         static_cast<std::uint64_t>(chain)}));
    std::uint64_t code = rng.next_u64() & SpinConfig::mask(L);
    HiddenCache cache(p, SpinConfig(code, L));
    auto sweep = [&] {
      for (int step = 0; step < L; ++step) {
        const int site = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(L)));
        const double log_weight = 2.0 * cache.log_ratio_flip(site).real();
        const double accept = log_weight >= 0.0 ? 1.0 : std::exp(log_weight);
        if (!std::isfinite(accept)) {
          throw NumericError("sample: non-finite acceptance ratio");
        }
        if (rng.next_double() < accept) cache.apply_flip(site);
      }
    };
    for (int s = 0; s < cfg.burn_in; ++s) sweep();
    for (int kept = 0; kept < cfg.n_samples; ++kept) {
      for (int s = 0; s < cfg.thinning; ++s) sweep();
      out.configs.push_back(cache.config());
    }
  }
  return out;
}

// Mean of a local estimator over the samples, with the standard error of
// the mean from batch means across chains.
template <class LocalEstimator>
std::pair<std::complex<double>, double> estimate_observable(const SampleSet& samples,
                                                            const RbmParams& p,
                                                            LocalEstimator&& local) {
  if (samples.configs.empty()) throw ConfigError("estimate_observable: empty sample set");
  const int chains = samples.n_chains;
  const int per_chain = samples.samples_per_chain;
  std::vector<std::complex<double>> chain_means(static_cast<std::size_t>(chains), 0.0);
  std::complex<double> mean = 0.0;
  for (int c = 0; c < chains; ++c) {
    std::complex<double> acc = 0.0;
    for (int s = 0; s < per_chain; ++s) {
      acc += local(p, samples.configs[static_cast<std::size_t>(c) * per_chain + s]);
    }
    chain_means[static_cast<std::size_t>(c)] = acc / double(per_chain);
    mean += acc;
  }
  mean /= double(chains) * per_chain;
  double se = 0.0;
  if (chains > 1) {
    double var = 0.0;
    for (const auto& m : chain_means) var += std::norm(m - mean);
    se = std::sqrt(var / (double(chains) * (chains - 1)));
  }
  return {mean, se};
}

}  // namespace snqs
