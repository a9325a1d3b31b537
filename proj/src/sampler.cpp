#include "villain/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "villain/errors.hpp"
#include "villain/higgs.hpp"
#include "villain/json_util.hpp"
#include "villain/parallel.hpp"
#include "villain/stats.hpp"

namespace villain {

namespace {
constexpr double pi = std::numbers::pi;
constexpr std::uint32_t tuning_stream = 0x80000000u;
constexpr std::uint32_t init_stream = 0x40000000u;
} // namespace

std::vector<double> sample_pure_plaquettes(const Lattice &lat, Philox &rng)
{
	std::normal_distribution<double> nd(0.0, lat.spacing());
	std::vector<double> X(lat.num_plaquettes());
	for (double &x : X)
		x = nd(rng);
	return X;
}

GaugeField sample_pure(const Lattice &lat, Philox &rng) { return psi(lat, sample_pure_plaquettes(lat, rng)); }

double heat_kernel_u1(double x, int N)
{
	const double t = std::ldexp(1.0, -2 * N);
	double s = 0;
	for (int n = 0;; ++n)
	{
		double a = std::exp(-(x + 2 * pi * n) * (x + 2 * pi * n) / (2 * t));
		double b = n ? std::exp(-(x - 2 * pi * n) * (x - 2 * pi * n) / (2 * t)) : 0.0;
		s += a + b;
		if (n > 0 && a + b < 1e-18 * s)
			break;
	}
	return s / std::sqrt(2 * pi * t);
}

double heat_kernel_cdf(double x, int N)
{
	const double sd = std::ldexp(1.0, -N);
	double s = 0;
	for (int n = -50; n <= 50; ++n)
		s += normal_cdf((x + 2 * pi * n) / sd) - normal_cdf((-pi + 2 * pi * n) / sd);
	return std::clamp(s, 0.0, 1.0);
}

std::string to_string(WeightMethod m)
{
	switch (m)
	{
	case WeightMethod::quadrature:
		return "quadrature";
	case WeightMethod::monte_carlo:
		return "monte_carlo";
	case WeightMethod::loop_expansion:
		return "loop_expansion";
	}
	return "?";
}

WeightMethod weight_method_from_string(const std::string &s)
{
	if (s == "quadrature")
		return WeightMethod::quadrature;
	if (s == "monte_carlo" || s == "mc")
		return WeightMethod::monte_carlo;
	if (s == "loop_expansion" || s == "loops")
		return WeightMethod::loop_expansion;
	throw ConfigError("unknown weight method " + s);
}

std::string to_string(WeightModel m)
{
	switch (m)
	{
	case WeightModel::monte_carlo:
		return "monte_carlo";
	case WeightModel::coefficients:
		return "coefficients";
	case WeightModel::constant:
		return "constant";
	}
	return "?";
}

WeightModel weight_model_from_string(const std::string &s)
{
	if (s == "monte_carlo" || s == "mc")
		return WeightModel::monte_carlo;
	if (s == "coefficients")
		return WeightModel::coefficients;
	if (s == "constant")
		return WeightModel::constant;
	throw ConfigError("unknown weight model " + s);
}

nlohmann::json to_json(const ChainConfig &c)
{
	return {{"potential", c.V.to_json()},
	        {"weight", to_string(c.weight)},
	        {"weight_samples", c.weight_options.samples},
	        {"epsilon", c.weight_options.epsilon},
	        {"max_len", c.weight_options.max_len},
	        {"proposal_sd", c.proposal_sd},
	        {"tune", c.tune},
	        {"burn_in", c.burn_in},
	        {"samples", c.samples},
	        {"thin", c.thin},
	        {"chains", c.chains},
	        {"seed", c.seed},
	        {"threads", c.threads}};
}

ChainConfig chain_config_from_json(const nlohmann::json &j, ChainConfig c)
{
	require_keys(j,
	             {"potential", "weight", "weight_samples", "epsilon", "max_len", "proposal_sd", "tune", "burn_in",
	              "samples", "thin", "chains", "seed", "threads"},
	             "chain config");
	if (j.contains("potential"))
		c.V = Potential::from_json(j.at("potential"));
	if (j.contains("weight"))
		c.weight = weight_model_from_string(j.at("weight").get<std::string>());
	read_key(j, "weight_samples", c.weight_options.samples);
	read_key(j, "epsilon", c.weight_options.epsilon);
	read_key(j, "max_len", c.weight_options.max_len);
	read_key(j, "proposal_sd", c.proposal_sd);
	read_key(j, "tune", c.tune);
	read_key(j, "burn_in", c.burn_in);
	read_key(j, "samples", c.samples);
	read_key(j, "thin", c.thin);
	read_key(j, "chains", c.chains);
	read_key(j, "seed", c.seed);
	read_key(j, "threads", c.threads);
	if (c.burn_in < 0 || c.samples < 1 || c.thin < 1 || c.chains < 1 || c.weight_options.samples < 1)
		throw ConfigError("chain sizes must be positive");
	return c;
}

namespace {

WeightEstimate weight_quadrature(const GaugeField &g, const Potential &V, const WeightOptions &opt)
{
	const Lattice &lat = g.lattice();
	if (lat.N() != 1)
		throw ResourceError("quadrature of the Higgs weight is only available at N = 1");
	// one interior site: integrate over (s, theta) with the quadratic form from the Laplacian
	const double form = std::ldexp(covariant_laplacian(g)(0, 0).real(), -2 * lat.N());
	auto lw = [&](double s) { return std::log(s) + form * s * s - V(s); };
	double R = radial_cutoff(lw);
	QuadratureRule r = composite_gauss_legendre(opt.quad_nodes / 8 + 1, 16, 0, R);
	QuadratureRule th = periodic_trapezoid(opt.quad_nodes);
	double s = 0;
	for (Eigen::Index a = 0; a < th.nodes.size(); ++a)
		for (Eigen::Index i = 0; i < r.nodes.size(); ++i)
		{
			std::complex<double> phi = std::polar(r.nodes(i), th.nodes(a));
			double ex = form * std::norm(phi) - V(std::abs(phi));
			s += th.weights(a) * r.weights(i) * r.nodes(i) * std::exp(ex);
		}
	WeightEstimate e;
	e.method = WeightMethod::quadrature;
	e.value = s;
	e.log_value = std::log(s);
	e.samples = std::size_t(r.nodes.size() * th.nodes.size());
	return e;
}

WeightEstimate weight_monte_carlo(const GaugeField &g, const Potential &V, const WeightOptions &opt, Philox &rng)
{
	const Lattice &lat = g.lattice();
	if (lat.N() > 6)
		throw ResourceError("Monte Carlo Higgs weight is limited to N <= 6");
	if (opt.samples < 2 || !(opt.epsilon > 0))
		throw ConfigError("Monte Carlo weight needs samples >= 2 and epsilon > 0");
	const int n = lat.num_interior();
	// importance density: complex Gaussian with precision P = eps I - 2^-2N Delta_g
	Eigen::MatrixXcd P = -std::ldexp(1.0, -2 * lat.N()) * covariant_laplacian(g);
	P.diagonal().array() += opt.epsilon;
	Eigen::LLT<Eigen::MatrixXcd> llt(P);
	if (llt.info() != Eigen::Success)
		throw NumericalError("importance precision matrix is not positive definite");
	double logdet = 0;
	for (int i = 0; i < n; ++i)
		logdet += 2 * std::log(llt.matrixL()(i, i).real());
	std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
	std::vector<double> h(opt.samples);
	Eigen::VectorXcd z(n);
	for (int k = 0; k < opt.samples; ++k)
	{
		for (int i = 0; i < n; ++i)
		{
			double re = nd(rng);
			double im = nd(rng);
			z(i) = {re, im};
		}
		Eigen::VectorXcd phi = llt.matrixU().solve(z);
		double acc = 0;
		for (int i = 0; i < n; ++i)
			acc += opt.epsilon * std::norm(phi(i)) - V(std::abs(phi(i)));
		h[k] = acc;
	}
	const double mx = *std::max_element(h.begin(), h.end());
	double s = 0, s2 = 0;
	for (double v : h)
	{
		double w = std::exp(v - mx);
		s += w;
		s2 += w * w;
	}
	const double K = opt.samples;
	const double mean = s / K;
	const double var = std::max(0.0, (s2 / K - mean * mean) * K / (K - 1));
	WeightEstimate e;
	e.method = WeightMethod::monte_carlo;
	e.samples = opt.samples;
	e.log_value = n * std::log(pi) - logdet + mx + std::log(mean);
	e.value = std::exp(e.log_value);
	e.rel_stderr = std::sqrt(var / K) / mean;
	e.stderr_ = e.value * e.rel_stderr;
	e.ess = s * s / s2;
	return e;
}

WeightEstimate weight_loops(const GaugeField &g, const Potential &V, const WeightOptions &opt)
{
	const Lattice &lat = g.lattice();
	if (lat.N() > 2)
		throw ResourceError("loop expansion of the Higgs weight is limited to N <= 2");
	auto hi = higgs_loop_coefficients(lat, V, opt.max_len);
	auto lo = higgs_loop_coefficients(lat, V, std::max(0, opt.max_len - 2));
	WeightEstimate e;
	e.method = WeightMethod::loop_expansion;
	e.value = hi.evaluate(g);
	e.log_value = std::log(e.value);
	// last computed order as the truncation estimate
	e.stderr_ = std::abs(e.value - lo.evaluate(g));
	e.rel_stderr = e.stderr_ / e.value;
	e.samples = hi.multisets;
	return e;
}

} // namespace

WeightEstimate higgs_weight(const GaugeField &g, const Potential &V, WeightMethod method, const WeightOptions &opt,
                            Philox &rng)
{
	switch (method)
	{
	case WeightMethod::quadrature:
		return weight_quadrature(g, V, opt);
	case WeightMethod::monte_carlo:
		return weight_monte_carlo(g, V, opt, rng);
	case WeightMethod::loop_expansion:
		return weight_loops(g, V, opt);
	}
	throw ConfigError("unknown weight method");
}

namespace {

struct LogWeight
{
	const Lattice &lat;
	const ChainConfig &cfg;
	std::shared_ptr<HiggsCoefficients> coeffs;

	double operator()(const std::vector<double> &X, Philox &rng) const
	{
		switch (cfg.weight)
		{
		case WeightModel::constant:
			return 0;
		case WeightModel::coefficients:
			return std::log(coeffs->evaluate(psi(lat, X)));
		case WeightModel::monte_carlo:
			return weight_monte_carlo(psi(lat, X), cfg.V, cfg.weight_options, rng).log_value;
		}
		return 0;
	}
};

double log_prior(const std::vector<double> &X, double t)
{
	double s = 0;
	for (double x : X)
		s += x * x;
	return -s / (2 * t);
}

struct ChainState
{
	std::vector<double> X;
	double logw = 0;
};

// One Metropolis-Hastings step; returns whether the proposal was accepted.
bool mh_step(ChainState &st, const LogWeight &lw, double sd, double t, Philox &rng)
{
	std::normal_distribution<double> nd(0.0, sd);
	std::vector<double> Y = st.X;
	for (double &y : Y)
		y += nd(rng);
	const double lwy = lw(Y, rng);
	const double log_ratio = lwy + log_prior(Y, t) - st.logw - log_prior(st.X, t);
	if (std::log(rng.uniform()) < log_ratio)
	{
		st.X = std::move(Y);
		st.logw = lwy;
		return true;
	}
	return false;
}

} // namespace

ChainResult sample_interacting(const Lattice &lat, const ChainConfig &cfg)
{
	if (cfg.chains < 1 || cfg.samples < 1 || cfg.thin < 1 || cfg.burn_in < 0)
		throw ConfigError("chain needs chains, samples, thin >= 1 and burn_in >= 0");
	LogWeight lw{lat, cfg, nullptr};
	if (cfg.weight == WeightModel::coefficients)
		lw.coeffs = std::make_shared<HiggsCoefficients>(
		    higgs_loop_coefficients(lat, cfg.V, cfg.weight_options.max_len));
	const double t = std::ldexp(1.0, -2 * lat.N());
	double sd = cfg.proposal_sd > 0 ? cfg.proposal_sd : 0.5 * lat.spacing();

	if (cfg.tune)
	{
		// deterministic pre-run on chain 0, aiming at 30-50 % acceptance
		Philox init(cfg.seed, tuning_stream | init_stream, 0);
		ChainState st{sample_pure_plaquettes(lat, init), 0};
		st.logw = lw(st.X, init);
		std::uint32_t step = 0;
		for (int round = 0; round < 20; ++round)
		{
			int acc = 0;
			const int len = 200;
			for (int i = 0; i < len; ++i)
			{
				Philox rng(cfg.seed, tuning_stream, step++);
				acc += mh_step(st, lw, sd, t, rng);
			}
			double rate = double(acc) / len;
			if (rate > 0.5)
				sd *= 1.25;
			else if (rate < 0.3)
				sd /= 1.25;
			else
				break;
		}
	}

	ChainResult res;
	res.chains = cfg.chains;
	res.per_chain = cfg.samples;
	res.proposal_sd = sd;
	res.X.assign(std::size_t(cfg.chains) * cfg.samples, {});
	res.acceptance.assign(cfg.chains, 0.0);
	parallel_for(std::size_t(cfg.chains), cfg.threads, [&](std::size_t c) {
		Philox init(cfg.seed, init_stream | std::uint32_t(c), 0);
		ChainState st{sample_pure_plaquettes(lat, init), 0};
		st.logw = lw(st.X, init);
		std::uint32_t step = 0;
		long accepted = 0, proposed = 0;
		for (int i = 0; i < cfg.burn_in; ++i)
		{
			Philox rng(cfg.seed, std::uint32_t(c), step++);
			mh_step(st, lw, sd, t, rng);
		}
		for (int k = 0; k < cfg.samples; ++k)
		{
			for (int i = 0; i < cfg.thin; ++i)
			{
				Philox rng(cfg.seed, std::uint32_t(c), step++);
				accepted += mh_step(st, lw, sd, t, rng);
				++proposed;
			}
			res.X[c * cfg.samples + k] = st.X;
		}
		res.acceptance[c] = double(accepted) / double(proposed);
	});
	return res;
}

} // namespace villain
