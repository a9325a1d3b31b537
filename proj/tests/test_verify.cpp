#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "villain/errors.hpp"
#include "villain/verify.hpp"

using namespace villain;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

VerifyConfig small(int samples = 4000)
{
	VerifyConfig c;
	c.samples = samples;
	return c;
}

const ExperimentResult &find_row(const ExperimentReport &r, const std::string &name, std::size_t skip = 0)
{
	for (const auto &e : r.rows)
		if (e.name == name && skip-- == 0)
			return e;
	FAIL("missing row " << name);
	return r.rows.front();
}

} // namespace

TEST_CASE("judge applies each tolerance policy")
{
	ExperimentResult r;
	r.estimate = 1.0;
	r.stderr_ = 0.1;
	r.reference = 1.25;
	r.check = Check::equal_3se;
	judge(r);
	CHECK(r.verdict == Verdict::pass);
	r.reference = 1.35;
	judge(r);
	CHECK(r.verdict == Verdict::fail);
	r.check = Check::upper_3se;
	r.reference = 0.75;
	judge(r);
	CHECK(r.verdict == Verdict::pass);
	r.reference = 0.65;
	judge(r);
	CHECK(r.verdict == Verdict::fail);
	r.check = Check::relative;
	r.tolerance = 1e-8;
	r.reference = 1.0 + 5e-9;
	judge(r);
	CHECK(r.verdict == Verdict::pass);
	r.reference = 1.0 + 5e-8;
	judge(r);
	CHECK(r.verdict == Verdict::fail);
	r.check = Check::upper_exact;
	r.reference = 1.0;
	judge(r);
	CHECK(r.verdict == Verdict::pass);
	r.check = Check::none;
	judge(r);
	CHECK(r.verdict == Verdict::informational);
}

TEST_CASE("mgf at eta zero is one on both sides")
{
	VerifyConfig c = small();
	c.eta = 0;
	auto rep = verify_mgf(c);
	const auto &m = find_row(rep, "pure_mgf");
	CHECK(m.estimate == 1.0);
	CHECK(*m.reference == 1.0);
	CHECK(m.verdict == Verdict::pass);
}

TEST_CASE("mgf reference for the half square loop is sqrt 2")
{
	VerifyConfig c = small(20000);
	c.eta = 1;
	auto rep = verify_mgf(c);
	CHECK(rep.info["omega"].get<double>() == 0.25);
	const auto &m = find_row(rep, "pure_mgf");
	CHECK_THAT(*m.reference, WithinRel(std::sqrt(2.0), 1e-15));
	CHECK(rep.passed());
	CHECK_THAT(find_row(rep, "pure_variance").estimate, WithinAbs(0.25, 4 * find_row(rep, "pure_variance").stderr_));
}

TEST_CASE("mgf rejects eta outside the convergence range")
{
	VerifyConfig c = small(10);
	c.eta = 2; // 1 / (2 omega)
	CHECK_THROWS_AS(verify_mgf(c), DomainError);
	c.eta = 2.5;
	CHECK_THROWS_AS(verify_mgf(c), DomainError);
	c.eta = 0.5;
	c.loop_rect = {0, 0, 3, 1};
	CHECK_THROWS_AS(verify_mgf(c), DomainError);
}

TEST_CASE("tail rows on pure gauge")
{
	auto rep = verify_tail(small(20000));
	CHECK(rep.passed());
	const auto &zero = find_row(rep, "pure_tail_bound");
	CHECK(zero.estimate == 1.0);
	CHECK_THAT(*zero.reference, WithinRel(std::sqrt(2.0), 1e-15));
	// x = sqrt(omega): exact two-sided Gaussian tail
	const auto &one = find_row(rep, "pure_tail_exact", 2);
	CHECK_THAT(*one.reference, WithinRel(0.31731050786291415, 1e-12));
}

TEST_CASE("plaquette-sum moments")
{
	auto rep = verify_plaquette_sum_moments(small(20000));
	CHECK(rep.passed());
	CHECK(find_row(rep, "pure_second_moment").reference == 0.25);
	CHECK(rep.info["pure_wrap_events"].get<int>() == 0);
	CHECK(rep.info.contains("pure_q_exponent"));

	VerifyConfig c = small(50);
	c.ensemble = Ensemble::identity;
	auto id = verify_plaquette_sum_moments(c);
	CHECK(find_row(id, "identity_moment").estimate == 0.0);
	CHECK(find_row(id, "identity_moment", 1).estimate == 0.0);

	c.q_list = {0.5};
	CHECK_THROWS_AS(verify_plaquette_sum_moments(c), DomainError);
}

TEST_CASE("decorrelation sides agree with the two-dimensional Gaussian closed form")
{
	// A = sa Z1, B = c1 Z1 + c2 Z2; tilting by e^{eta A^2} makes Z1 ~ N(0, s^2)
	auto closed = [](double sa, double sb, double sab, double eta) {
		const double s2 = 1 / (1 - 2 * eta * sa * sa);
		const double c1 = sab / sa, c2sq = sb * sb - c1 * c1;
		return std::sqrt(s2) * std::exp(-c1 * c1 * s2 / 2 - c2sq / 2);
	};
	for (auto [sa, sb, sab, eta] : {std::array{1.0, 1.0, 0.5, 0.2}, std::array{0.5, 2.0, 0.8, 1.0},
	                                std::array{2.0, 1.0, 1.5, 0.1}, std::array{1.0, 0.5, 0.4, 0.45}})
	{
		auto d = decorrelation_sides(sa, sb, sab, eta, 64);
		CHECK_THAT(d.lhs, WithinRel(closed(sa, sb, sab, eta), 1e-10));
		CHECK_THAT(d.rhs, WithinRel(closed(sa, sb, sab, eta), 1e-10));
	}
	// independence: correction factor is one
	auto ind = decorrelation_sides(1, 1, 0, 0.3, 64);
	CHECK_THAT(ind.lhs, WithinRel(std::exp(-0.5) / std::sqrt(1 - 0.6), 1e-12));

	auto rep = verify_decorrelation(VerifyConfig{});
	CHECK(rep.rows.size() == 6);
	CHECK(rep.passed());
	CHECK_THAT(*find_row(rep, "characteristic_function").reference, WithinRel(std::exp(-0.5), 1e-15));

	CHECK_THROWS_AS(decorrelation_sides(1, 1, 1.5, 0.1, 64), DomainError);
	CHECK_THROWS_AS(decorrelation_sides(1, 1, 0.5, 0.5, 64), DomainError);
	CHECK_THROWS_AS(decorrelation_sides(0, 1, 0, 0.1, 64), DomainError);
}

TEST_CASE("flatness moments")
{
	VerifyConfig c = small(300);
	c.q = 3;
	c.N_list = {2, 3};
	c.ensemble = Ensemble::identity;
	auto rep = verify_flatness_moments(c);
	for (const auto &r : rep.rows)
		if (r.name == "pure_flatness_moment")
		{
			CHECK(std::isfinite(r.estimate));
			CHECK(r.estimate > 0);
		}
	CHECK(find_row(rep, "identity_flatness_moment").verdict == Verdict::pass);
	CHECK(find_row(rep, "pure_flatness_max_over_min").verdict == Verdict::informational);

	c.alpha = 1;
	CHECK_THROWS_AS(verify_flatness_moments(c), DomainError);
}

TEST_CASE("uv stability reports fallback and zero identity norms")
{
	VerifyConfig c = small(100);
	c.N_list = {2, 3};
	c.ensemble = Ensemble::identity;
	auto rep = verify_uv_stability(c);
	CHECK(find_row(rep, "identity_uv_zero").estimate == 0.0);
	CHECK(find_row(rep, "identity_uv_zero", 1).estimate == 0.0);
	const auto &ratio = find_row(rep, "pure_uv_max_over_min");
	CHECK(ratio.check == Check::upper_exact);
	CHECK(*ratio.reference == 1.5);
	CHECK(find_row(rep, "pure_fallback_rate").estimate >= 0);

	c.beta = 1;
	CHECK_THROWS_AS(verify_uv_stability(c), DomainError);
}

TEST_CASE("interacting mgf run is gated and one-sided")
{
	VerifyConfig c = small(20000);
	c.ensemble = Ensemble::interacting;
	c.chain.V = Potential::quartic(1);
	c.chain.weight_options.samples = 32;
	c.chain.chains = 2;
	c.chain.burn_in = 200;
	c.chain.samples = 640;
	auto rep = verify_mgf(c);
	const auto &r = find_row(rep, "interacting_mgf");
	CHECK(r.check == Check::upper_3se);
	CHECK(r.samples == 1280);
	CHECK(rep.info["interacting"]["chains"] == 2);
}

TEST_CASE("experiments are pure functions of config and seed")
{
	VerifyConfig c = small(3000);
	for (const auto &name : {"mgf", "tail", "moments"})
	{
		auto a = report_json(run_experiment(name, c)).dump();
		auto b = report_json(run_experiment(name, c)).dump();
		CHECK(a == b);
		VerifyConfig t = c;
		t.threads = 3;
		CHECK(report_json(run_experiment(name, t)).dump() == a);
		VerifyConfig s = c;
		s.seed = 2;
		CHECK(report_json(run_experiment(name, s)).dump() != a);
	}
	CHECK_THROWS_AS(run_experiment("nope", c), ConfigError);
}

TEST_CASE("config json round trip and strict keys")
{
	VerifyConfig c;
	c.N = 3;
	c.eta = 0.7;
	c.q_list = {1, 3};
	c.decorrelation_grid = {{1, 2, 0.3, 0.1}};
	c.chain.chains = 7;
	auto j = to_json(c);
	VerifyConfig back = verify_config_from_json(j);
	CHECK(to_json(back) == j);
	CHECK_THROWS_AS(verify_config_from_json({{"bogus", 1}}), ConfigError);
	CHECK_THROWS_AS(verify_config_from_json({{"N", "two"}}), ConfigError);
	CHECK_THROWS_AS(verify_config_from_json({{"ensemble", "hot"}}), ConfigError);
	CHECK_THROWS_AS(verify_config_from_json({{"samples", 0}}), ConfigError);
}

TEST_CASE("csv ledger has one line per row")
{
	auto rep = verify_decorrelation(VerifyConfig{});
	std::ostringstream os;
	write_csv_header(os);
	write_csv_rows(os, rep);
	auto text = os.str();
	CHECK(std::count(text.begin(), text.end(), '\n') == 1 + long(rep.rows.size()));
	CHECK(text.find("\"{\"\"eta\"\"") != std::string::npos);
}
