#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polyurn/urn.hpp"

namespace polyurn::stats {

double normal_cdf(double x);

// Sup distance between the empirical CDF and the standard normal CDF.
// Requires >= 100 samples.
double ks_vs_normal(std::vector<double> samples);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

enum class TestKind {
  CltSmall,
  CltLarge,
  CltTriangular,
  CltTriangularMixing,
  Lil,
  Tails,
  Density,
  Moments,
};

std::string to_string(TestKind t);

struct VerificationReport {
  TestKind test;
  double statistic = 0;
  double threshold = 0;
  bool passed = false;
  std::map<std::string, std::string> meta;  // sorted keys, deterministic dump

  std::string to_json() const;
};

// Shared battery knobs. scale_override multiplies the CLT normalization
// constant; setting it to anything but 1 is the negative-control hook.
struct CommonParams {
  std::uint64_t replicas = 10000;
  std::uint64_t seed = 1;
  int threads = 0;
  double scale_override = 1.0;
};

struct CltParams : CommonParams {
  std::uint64_t n = 2000;
  std::uint64_t N = 20000;  // limit proxy horizon (tail-sum regimes)
  double threshold = 0.03;
};

struct MixingParams : CommonParams {
  std::uint64_t n = 2000;
  std::uint64_t N = 20000;
  double ks_threshold = 0.03;
  double control_min_ks = 0.05;  // the broken pairing must be detected above this
};

struct LilParams : CommonParams {
  std::uint64_t n_min = 100;
  std::uint64_t n_max = 1000000;
  double band_lo = 0.4;
  double band_hi = 1.6;
  double min_coverage = 0.9;
};

struct TailParams : CommonParams {
  std::uint64_t N = 10000;
  std::uint32_t grid_points = 20;
  double top_fraction = 0.05;
  double min_r2 = 0.9;
  double domination_slack = 0.5;  // log-scale allowance above the fitted bound
};

struct DensityParams : CommonParams {
  std::uint64_t N = 10000;
  std::uint32_t bins = 64;
};

struct MomentParams : CommonParams {
  std::uint64_t n = 1000;
  std::uint64_t proxy_mult = 10;
  double tol2 = 0.10;
  double tol4 = 0.20;
};

// Regime-dispatched KS test of the normalized statistic against N(0,1).
VerificationReport verify_clt(const UrnSpec& spec, const CltParams& p);
// Independence of the triangular mixing factor from the normalized residual,
// plus a mixture-law comparison with a deliberately broken pairing as control.
VerificationReport verify_mixing(const UrnSpec& spec, const MixingParams& p);
// Band-coverage proxy for the iterated-logarithm laws at dyadic checkpoints.
VerificationReport verify_lil(const UrnSpec& spec, const LilParams& p);
// Tail-decay fits (quadratic or linear in t on the log scale) of the limit proxy.
VerificationReport verify_tails(const UrnSpec& spec, const TailParams& p);
// Histogram boundedness / refinement stability of the limit proxy's density.
VerificationReport verify_density(const UrnSpec& spec, const DensityParams& p);
// Limit mean plus second/fourth martingale-difference moment scaling.
VerificationReport verify_moments(const UrnSpec& spec, const MomentParams& p);

}  // namespace polyurn::stats
