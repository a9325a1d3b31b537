#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/rational.hpp>

#include "villain/gauge_fix.hpp"
#include "villain/sampler.hpp"

using namespace villain;
constexpr double pi = std::numbers::pi;

namespace {
GaugeTransform random_transform(const Lattice &lat, std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(-pi, pi);
	GaugeTransform t{std::vector<double>(lat.num_nodes())};
	for (double &a : t.angle)
		a = u(rng);
	return t;
}

GaugeField random_field(const Lattice &lat, std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(-pi, pi);
	std::vector<double> t(lat.num_bonds());
	for (double &x : t)
		x = u(rng);
	return GaugeField(lat, t);
}

// Pure-gauge curvature scaled down by `scale`, put in a random gauge.
GaugeField smooth_field(const Lattice &lat, std::uint64_t seed, double scale)
{
	Philox rng(seed);
	auto X = sample_pure_plaquettes(lat, rng);
	for (double &x : X)
		x *= scale;
	return apply_gauge(psi(lat, X), random_transform(lat, seed + 1));
}

double naive_rect_sum(const GaugeField &g, const Rect &r)
{
	double s = 0;
	for (int j = r.y0; j < r.y0 + r.h; ++j)
		for (int i = r.x0; i < r.x0 + r.w; ++i)
			s += g.plaquette_log(g.lattice().plaquette_index(i, j));
	return s;
}

double naive_flatness(const GaugeField &g, double alpha)
{
	const int n = g.lattice().side();
	double best = 0;
	for (int x0 = 0; x0 < n; ++x0)
		for (int y0 = 0; y0 < n; ++y0)
			for (int w = 1; x0 + w <= n; ++w)
				for (int h = 1; y0 + h <= n; ++h)
				{
					Rect r{x0, y0, w, h};
					double area = double(w * h) / (n * n);
					best = std::max(best, std::abs(naive_rect_sum(g, r)) * std::pow(area, -alpha / 2));
				}
	return best;
}
} // namespace

TEST_CASE("summed-area table matches direct sums")
{
	Lattice lat(3);
	GaugeField g = random_field(lat, 1);
	PlaquetteSums ps(g);
	std::mt19937_64 rng(2);
	for (int k = 0; k < 200; ++k)
	{
		int x0 = int(rng() % 8), y0 = int(rng() % 8);
		int w = int(rng() % (8 - x0)) + 1, h = int(rng() % (8 - y0)) + 1;
		Rect r{x0, y0, w, h};
		CHECK(ps.sum(r) == Catch::Approx(naive_rect_sum(g, r)).margin(1e-12));
	}
}

TEST_CASE("non-flatness functional")
{
	Lattice lat(3);
	CHECK(flatness(GaugeField(lat), 0.5).value == 0);
	// one curved plaquette
	std::vector<double> X(64, 0.0);
	X[lat.plaquette_index(5, 2)] = 0.7;
	GaugeField g = psi(lat, X);
	for (double alpha : {0.0, 0.5, 1.0})
	{
		auto f = flatness(g, alpha);
		CHECK(f.value == Catch::Approx(0.7 * std::exp2(3 * alpha)).epsilon(1e-12));
		CHECK(f.value == Catch::Approx(naive_flatness(g, alpha)).epsilon(1e-12));
	}
	CHECK(flatness(g, 0.5).argmax == Rect{5, 2, 1, 1});

	GaugeField r = random_field(lat, 3);
	for (double alpha : {0.25, 0.5, 1.5})
	{
		auto f = flatness(r, alpha);
		CHECK(f.value == Catch::Approx(naive_flatness(r, alpha)).epsilon(1e-12));
		double area = double(f.argmax.area()) / 64;
		CHECK(std::abs(naive_rect_sum(r, f.argmax)) * std::pow(area, -alpha / 2) ==
		      Catch::Approx(f.value).epsilon(1e-12));
		CHECK(flatness(apply_gauge(r, random_transform(lat, 4)), alpha).value == Catch::Approx(f.value).epsilon(1e-12));
	}
}

TEST_CASE("scale selection rule")
{
	CHECK(select_scale(0, 0.5) == 4);
	CHECK(select_scale(0.1, 0.5) == 4);
	// threshold (8 / pi f)^4 = 1000 lies between 2^9 and 2^10
	CHECK(select_scale(pi / 8 * std::pow(1000.0, 0.25), 0.5) == 10);
	CHECK(select_scale(pi / 8 * std::pow(1000.0, 0.5), 1.0) == 10);
}

TEST_CASE("coarse restriction")
{
	Lattice lat(3);
	GaugeField g = random_field(lat, 5);
	CHECK(coarse_restrict(g, 3).angles() == g.angles());
	GaugeField flat = coarse_restrict(GaugeField(lat), 1);
	for (double v : flat.angles())
		CHECK(v == 0);
	GaugeField s = smooth_field(lat, 6, 0.5);
	GaugeField c = coarse_restrict(s, 2);
	for (int j = 0; j < 4; ++j)
		for (int i = 0; i < 4; ++i)
		{
			double fine = naive_rect_sum(s, {2 * i, 2 * j, 2, 2});
			CHECK(c.plaquette_log(c.lattice().plaquette_index(i, j)) == Catch::Approx(fine).margin(1e-12));
		}
}

TEST_CASE("axial gauge at a coarse level")
{
	Lattice lat(2);
	GaugeField ax = psi(lat, std::vector<double>(16, 0.3));
	for (double a : axial_fix(ax).angle)
		CHECK(a == 0);

	Lattice fine(4);
	GaugeField g = random_field(fine, 7);
	GaugeField gm = coarse_restrict(g, 2);
	GaugeTransform u = axial_fix(gm);
	GaugeField gu = apply_gauge(gm, u);
	const Lattice &cl = gm.lattice();
	const double C = thin_rectangle_sup(gm, 0.5);
	for (int b = 0; b < cl.num_bonds(); ++b)
	{
		if (cl.in_tree(b))
		{
			CHECK(std::abs(gu.bond_logs()[b]) < 1e-12);
			continue;
		}
		// vertical bond at (i + 1, j) closes the strip [0, i + 1] x [j, j + 1]
		Bond bd = cl.bond(b);
		double strip = wrap_angle(loop_angle_sum(gm, rectangle_loop(cl, {0, bd.x.k2, bd.x.k1, 1}).steps(cl)));
		CHECK(std::abs(wrap_angle(gu.bond_logs()[b] - strip)) < 1e-12);
		CHECK(std::abs(gu.bond_logs()[b]) <= C * std::exp2(-0.5 * 2 / 2) + 1e-12);
	}
	for (int p = 0; p < cl.num_plaquettes(); ++p)
		CHECK(std::abs(wrap_angle(gu.plaquette_log(p) - gm.plaquette_log(p))) < 1e-12);
}

TEST_CASE("Landau coefficients in exact arithmetic")
{
	using Q = boost::rational<long long>;
	std::mt19937_64 rng(8);
	for (int k = 0; k < 1000; ++k)
	{
		std::array<Q, 4> beta;
		for (int i = 0; i < 3; ++i)
			beta[i] = Q(long(rng() % 2001) - 1000, long(rng() % 999) + 1);
		beta[3] = -(beta[0] + beta[1] + beta[2]);
		auto a = landau_alphas(beta);
		for (int i = 0; i < 4; ++i)
			CHECK(a[i] - a[(i + 1) % 4] == beta[i]);
		CHECK(a[0] + a[1] + a[2] + a[3] == Q(0));
		// the auxiliary condition holds even off the small set
		beta[3] += Q(1, 3);
		auto b = landau_alphas(beta);
		CHECK(b[0] + b[1] + b[2] + b[3] == Q(0));
	}
}

TEST_CASE("Landau extension of the identity field")
{
	Lattice lat(4);
	auto res = landau_extend(GaugeField(lat), GaugeTransform::identity(Lattice(1)), 1);
	CHECK(res.violations == 0);
	for (double a : res.u.angle)
		CHECK(a == 0);
	REQUIRE(res.scales.size() == 4);
	CHECK(res.scales[1].centres == 4);
	CHECK(res.scales[3].centres == 64);

	auto id = gauge_fix(GaugeField(lat));
	CHECK(id.report.flat.value == 0);
	CHECK(id.report.m == 4);
	CHECK_FALSE(id.report.fallback);
	CHECK(id.report.norms[0].norm.value == 0);
}

TEST_CASE("pipeline on smooth fields")
{
	Lattice lat(5);
	GaugeFixOptions opt;
	opt.betas = {0.0, 0.5, 1.0};
	for (int k = 0; k < 10; ++k)
	{
		GaugeField g = smooth_field(lat, 100 + k, 0.125);
		for (int m : {2, 4})
		{
			auto res = gauge_fix_at(g, m, opt);
			const auto &rep = res.report;
			REQUIRE(rep.hypothesis.holds);
			CHECK(rep.violations == 0);
			CHECK(rep.axial_max <= rep.axial_bound + 1e-12);
			for (const auto &sc : rep.scales)
			{
				CHECK(sc.max_bond_log < pi / 4);
				CHECK(sc.alpha_residual < 1e-12);
				CHECK(sc.beta_sum_residual < 1e-12);
			}
			for (const auto &nc : rep.norms)
				CHECK(nc.norm.gr.value <= nc.landau_bound);
			// holonomies are untouched and bond logs obey Stokes without wrapping
			const Lattice &l = res.fixed.lattice();
			std::mt19937_64 rng(k);
			PlaquetteSums ps(g);
			auto logs = res.fixed.bond_logs();
			for (int t = 0; t < 100; ++t)
			{
				int x0 = int(rng() % 32), y0 = int(rng() % 32);
				Rect r{x0, y0, int(rng() % (32 - x0)) + 1, int(rng() % (32 - y0)) + 1};
				double s = 0;
				for (Step st : rectangle_loop(l, r).steps(l))
					s += st.sign * logs[st.bond];
				CHECK(s == Catch::Approx(ps.sum(r)).margin(1e-12));
			}
		}
	}
}

TEST_CASE("gauge fixing is deterministic and gauge covariant")
{
	Lattice lat(5);
	GaugeField g = smooth_field(lat, 7, 0.02);
	GaugeFixOptions opt;
	auto a = gauge_fix(g, opt);
	auto b = gauge_fix(g, opt);
	CHECK(a.u.angle == b.u.angle);
	opt.threads = 3;
	auto c = gauge_fix(g, opt);
	CHECK(a.u.angle == c.u.angle);
	CHECK_FALSE(a.report.fallback);
	CHECK(a.report.violations == 0);

	GaugeField gv = apply_gauge(g, random_transform(lat, 9));
	auto d = gauge_fix(gv);
	CHECK(d.report.m == a.report.m);
	CHECK(d.report.flat.value == Catch::Approx(a.report.flat.value).epsilon(1e-12));
	for (int bnd = 0; bnd < lat.num_bonds(); ++bnd)
		CHECK(std::abs(wrap_angle(d.fixed.angle(bnd) - a.fixed.angle(bnd))) < 1e-10);
}

TEST_CASE("fallback keeps the field and reports the trivial bound")
{
	Lattice lat(3);
	GaugeField g = random_field(lat, 10);
	auto res = gauge_fix(g);
	CHECK(res.report.fallback);
	CHECK(res.report.m_rule > 3);
	for (double a : res.u.angle)
		CHECK(a == 0);
	CHECK(res.report.norms[0].norm.value <= res.report.norms[0].trivial_bound);
	CHECK(res.report.norms[0].trivial_bound == Catch::Approx(2 * pi * std::exp2(3 * 1.25)));
}
