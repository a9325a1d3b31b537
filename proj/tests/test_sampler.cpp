#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "villain/higgs.hpp"
#include "villain/quadrature.hpp"
#include "villain/sampler.hpp"
#include "villain/stats.hpp"

using namespace villain;
constexpr double pi = std::numbers::pi;

namespace {
GaugeField random_field(const Lattice &lat, std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(-pi, pi);
	std::vector<double> t(lat.num_bonds());
	for (double &x : t)
		x = u(rng);
	return GaugeField(lat, t);
}
} // namespace

TEST_CASE("Philox known-answer vectors")
{
	using B = Philox::block;
	CHECK(Philox::bijection({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
	CHECK(Philox::bijection({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) == B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
	CHECK(Philox::bijection({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
	      B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("Philox streams are reproducible and distinct")
{
	Philox a(42, 1, 2), b(42, 1, 2), c(42, 1, 3), d(42, 2, 2), e(43, 1, 2);
	auto x = a();
	CHECK(x == b());
	CHECK(x != c());
	CHECK(x != d());
	CHECK(x != e());
	Philox u(7);
	double s = 0;
	bool in_range = true;
	for (int i = 0; i < 100000; ++i)
	{
		double v = u.uniform();
		in_range = in_range && v >= 0 && v < 1;
		s += v;
	}
	CHECK(in_range);
	CHECK(std::abs(s / 100000 - 0.5) < 4 * std::sqrt(1.0 / 12 / 100000));
}

TEST_CASE("heat kernel is a normalised wrapped Gaussian")
{
	for (int N = 0; N <= 3; ++N)
	{
		QuadratureRule q = composite_gauss_legendre(64, 16, -pi, pi);
		CHECK(q.integrate([&](double x) { return heat_kernel_u1(x, N); }) == Catch::Approx(1.0).epsilon(1e-12));
		CHECK(heat_kernel_cdf(pi, N) == Catch::Approx(1.0).epsilon(1e-12));
		double x = 0.3;
		double cdf = composite_gauss_legendre(64, 16, -pi, x).integrate([&](double y) { return heat_kernel_u1(y, N); });
		CHECK(heat_kernel_cdf(x, N) == Catch::Approx(cdf).epsilon(1e-10));
	}
	// N = 0: period images contribute visibly
	double plain = std::exp(-pi * pi / 2) / std::sqrt(2 * pi);
	CHECK(heat_kernel_u1(pi - 1e-12, 0) == Catch::Approx(2 * plain).epsilon(1e-9));
}

TEST_CASE("pure-gauge plaquettes follow the heat kernel")
{
	const int N = 2;
	Lattice lat(N);
	std::vector<double> logs;
	double ss = 0;
	long n = 0;
	for (int k = 0; k < 2000; ++k)
	{
		Philox rng(9, 0, std::uint32_t(k));
		auto X = sample_pure_plaquettes(lat, rng);
		GaugeField g = psi(lat, X);
		for (int p = 0; p < lat.num_plaquettes(); ++p)
		{
			logs.push_back(g.plaquette_log(p));
			ss += X[p] * X[p];
			++n;
		}
	}
	double var = ss / double(n);
	double t = 1.0 / 16;
	CHECK(std::abs(var - t) < 4 * t * std::sqrt(2.0 / double(n)));
	auto ks = ks_test(logs, [&](double x) { return heat_kernel_cdf(x, N); });
	CHECK(ks.p_value > 1e-3);
}

TEST_CASE("Higgs weight at N=1 by quadrature")
{
	Lattice lat(1);
	Philox rng(1);
	WeightOptions opt;
	// V = 0: 2 pi int s exp(-4 s^2) ds = pi / 4
	auto e0 = higgs_weight(GaugeField(lat), Potential::zero(), WeightMethod::quadrature, opt, rng);
	CHECK(e0.value == Catch::Approx(pi / 4).epsilon(1e-12));
	Potential V = Potential::quartic(1.0);
	auto a = higgs_weight(GaugeField(lat), V, WeightMethod::quadrature, opt, rng);
	auto b = higgs_weight(random_field(lat, 3), V, WeightMethod::quadrature, opt, rng);
	CHECK(a.value == Catch::Approx(b.value).epsilon(1e-14));
	CHECK(a.value == Catch::Approx(2 * pi * RadialMeasure::higgs(V).moment(0)).epsilon(1e-10));
	opt.samples = 20000;
	auto mc = higgs_weight(random_field(lat, 4), V, WeightMethod::monte_carlo, opt, rng);
	CHECK(std::abs(mc.value - a.value) < 4 * mc.stderr_);
}

TEST_CASE("Higgs weight at N=2: Monte Carlo against the loop expansion")
{
	Lattice lat(2);
	Potential V = Potential::quartic(0);
	WeightOptions opt;
	opt.samples = 100000;
	opt.max_len = 8;
	for (int k = 0; k < 5; ++k)
	{
		GaugeField g = random_field(lat, 100 + k);
		Philox rng(5, std::uint32_t(k), 0);
		auto mc = higgs_weight(g, V, WeightMethod::monte_carlo, opt, rng);
		auto lp = higgs_weight(g, V, WeightMethod::loop_expansion, opt, rng);
		INFO("MC " << mc.value << " +- " << mc.stderr_ << " loops " << lp.value << " trunc " << lp.stderr_);
		CHECK(std::abs(mc.value - lp.value) < 3 * mc.stderr_ + lp.stderr_);
		CHECK(mc.ess > 0.5 * opt.samples);
	}
}

TEST_CASE("Higgs weight is gauge invariant")
{
	Lattice lat(2);
	Potential V = Potential::quartic(0.5);
	GaugeField g = random_field(lat, 7);
	std::mt19937_64 r(8);
	std::uniform_real_distribution<double> u(-pi, pi);
	GaugeTransform tr{std::vector<double>(lat.num_nodes())};
	for (double &a : tr.angle)
		a = u(r);
	WeightOptions opt;
	opt.samples = 50000;
	Philox r1(1), r2(2);
	auto a = higgs_weight(g, V, WeightMethod::monte_carlo, opt, r1);
	auto b = higgs_weight(apply_gauge(g, tr), V, WeightMethod::monte_carlo, opt, r2);
	CHECK(std::abs(a.value - b.value) < 4 * std::hypot(a.stderr_, b.stderr_));
	auto la = higgs_weight(g, V, WeightMethod::loop_expansion, opt, r1);
	auto lb = higgs_weight(apply_gauge(g, tr), V, WeightMethod::loop_expansion, opt, r2);
	CHECK(la.value == Catch::Approx(lb.value).epsilon(1e-10));
}

TEST_CASE("chain with constant weight samples the free measure")
{
	Lattice lat(2);
	ChainConfig cfg;
	cfg.weight = WeightModel::constant;
	cfg.samples = 2000;
	cfg.thin = 10;
	cfg.chains = 2;
	cfg.burn_in = 500;
	cfg.seed = 11;
	auto res = sample_interacting(lat, cfg);
	for (double a : res.acceptance)
	{
		CHECK(a > 0.2);
		CHECK(a < 0.6);
	}
	std::vector<double> x0;
	for (auto &X : res.X)
		x0.push_back(X[5]);
	double sd = lat.spacing();
	auto ks = ks_test(x0, [&](double x) { return normal_cdf(x / sd); });
	CHECK(ks.p_value > 1e-3);
}

TEST_CASE("pseudo-marginal chain is reproducible and thread-count independent")
{
	Lattice lat(2);
	ChainConfig cfg;
	cfg.samples = 50;
	cfg.burn_in = 20;
	cfg.chains = 3;
	cfg.seed = 5;
	cfg.tune = false;
	cfg.weight_options.samples = 64;
	auto a = sample_interacting(lat, cfg);
	cfg.threads = 3;
	auto b = sample_interacting(lat, cfg);
	CHECK(a.X == b.X);
	CHECK(a.acceptance == b.acceptance);
}
