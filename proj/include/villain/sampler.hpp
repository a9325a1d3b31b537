#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "villain/gauge.hpp"
#include "villain/radial.hpp"
#include "villain/rng.hpp"

namespace villain {

// i.i.d. plaquette angles X_p ~ N(0, 2^-2N).
std::vector<double> sample_pure_plaquettes(const Lattice &lat, Philox &rng);

// Philox stream of the k-th independent pure-gauge draw: Philox(seed, pure_sample_stream, k).
inline constexpr std::uint32_t pure_sample_stream = 0x10000000u;

// Pure-gauge field Psi(X) with X drawn as above.
GaugeField sample_pure(const Lattice &lat, Philox &rng);

// Wrapped Gaussian density on [-pi, pi) with variance 2^-2N, and its CDF.
double heat_kernel_u1(double x, int N);
double heat_kernel_cdf(double x, int N);

enum class WeightMethod { quadrature, monte_carlo, loop_expansion };

std::string to_string(WeightMethod m);
WeightMethod weight_method_from_string(const std::string &s);

struct WeightOptions
{
	int samples = 4096;     // Monte Carlo draws
	double epsilon = 1.0;   // mass added to the importance density
	int max_len = 8;        // loop expansion truncation
	int quad_nodes = 96;    // radial and angular nodes for quadrature
};

struct WeightEstimate
{
	WeightMethod method = WeightMethod::monte_carlo;
	double log_value = 0;
	double value = 0;
	double rel_stderr = 0;
	double stderr_ = 0;
	double ess = 0;
	std::size_t samples = 0;
};

// D(g) = int exp(<phi, Delta_g phi> - sum_x V(|phi_x|)) dphi over C^interior.
WeightEstimate higgs_weight(const GaugeField &g, const Potential &V, WeightMethod method, const WeightOptions &opt,
                            Philox &rng);

enum class WeightModel { monte_carlo, coefficients, constant };

std::string to_string(WeightModel m);
WeightModel weight_model_from_string(const std::string &s);

struct ChainConfig
{
	Potential V = Potential::quartic(0);
	WeightModel weight = WeightModel::monte_carlo;
	WeightOptions weight_options{256};
	double proposal_sd = -1; // < 0 selects 0.5 * 2^-N
	bool tune = true;
	int burn_in = 2000;
	int samples = 10000; // retained per chain
	int thin = 1;
	int chains = 4;
	std::uint64_t seed = 1;
	int threads = 1;
};

nlohmann::json to_json(const ChainConfig &c);
// Missing keys keep the values of `base`; unknown keys are a ConfigError.
ChainConfig chain_config_from_json(const nlohmann::json &j, ChainConfig base = {});

struct ChainResult
{
	int chains = 0;
	int per_chain = 0;
	std::vector<std::vector<double>> X; // chain-major: chain c owns [c * per_chain, (c+1) * per_chain)
	std::vector<double> acceptance;     // per chain
	double proposal_sd = 0;
};

// Pseudo-marginal Metropolis-Hastings on plaquette angles for the measure
// proportional to D(Psi(X)) nu(dX).
ChainResult sample_interacting(const Lattice &lat, const ChainConfig &cfg);

} // namespace villain
