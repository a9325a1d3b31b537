#include "villain/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "villain/errors.hpp"

namespace villain {

Potential Potential::quartic(double c)
{
	Potential p;
	p.name = "quartic";
	p.c = c;
	p.V = [c](double x) { return x * x * x * x - c * x * x; };
	return p;
}

nlohmann::json Potential::to_json() const { return {{"kind", name}, {"c", c}}; }

Potential Potential::from_json(const nlohmann::json &j)
{
	std::string kind = j.value("kind", std::string("quartic"));
	if (kind == "quartic")
		return quartic(j.value("c", 0.0));
	if (kind == "zero")
		return zero();
	throw ConfigError("unknown potential kind " + kind);
}

double radial_cutoff(const std::function<double(double)> &logf)
{
	const double ds = 1.0 / 64;
	double best = -std::numeric_limits<double>::infinity();
	for (double s = ds; s < 4096; s += ds)
	{
		double v = logf(s);
		if (v > best)
			best = v;
		else if (v < best - 46)
			return s;
	}
	throw NumericalError("radial measure does not decay fast enough");
}

RadialMeasure RadialMeasure::dirac0()
{
	RadialMeasure m;
	m.spec_ = {{"kind", "dirac0"}};
	return m;
}

RadialMeasure RadialMeasure::gamma(int k, double c)
{
	if (k < 0 || !(c > 0))
		throw ConfigError("gamma radial measure needs k >= 0 and c > 0");
	RadialMeasure m;
	m.kind_ = Kind::gamma;
	m.k_ = k;
	m.c_ = c;
	m.name_ = fmt::format("gamma(k={},c={})", k, c);
	m.spec_ = {{"kind", "gamma"}, {"k", k}, {"c", c}};
	return m;
}

RadialMeasure RadialMeasure::density(std::function<double(double)> log_weight, std::string name)
{
	RadialMeasure m;
	m.kind_ = Kind::density;
	m.logw_ = std::move(log_weight);
	m.name_ = std::move(name);
	m.spec_ = {{"kind", "density"}, {"name", m.name_}};
	return m;
}

RadialMeasure RadialMeasure::discrete(std::vector<double> s, std::vector<double> w)
{
	if (s.empty() || s.size() != w.size())
		throw ConfigError("discrete radial measure needs matching non-empty points and weights");
	for (std::size_t i = 0; i < s.size(); ++i)
		if (!(s[i] >= 0) || !(w[i] >= 0))
			throw ConfigError("discrete radial measure needs non-negative points and weights");
	RadialMeasure m;
	m.kind_ = Kind::discrete;
	m.name_ = "discrete";
	m.spec_ = {{"kind", "discrete"}, {"points", s}, {"weights", w}};
	m.s_ = std::move(s);
	m.w_ = std::move(w);
	return m;
}

RadialMeasure RadialMeasure::higgs(const Potential &V)
{
	RadialMeasure m = density([V](double s) { return std::log(s) - V(s) - 4 * s * s; }, "higgs-" + V.name);
	m.spec_ = {{"kind", "higgs"}, {"potential", V.to_json()}};
	return m;
}

std::function<double(double)> RadialMeasure::log_density() const
{
	if (kind_ == Kind::gamma)
		return [k = k_, c = c_](double s) { return std::log(c) + k * std::log(s) - s * s; };
	return logw_;
}

double RadialMeasure::log_radial_integral(int j) const
{
	if (j < 0)
		throw DomainError("negative moment index");
	const double neg_inf = -std::numeric_limits<double>::infinity();
	switch (kind_)
	{
	case Kind::dirac0:
		return j == 0 ? 0.0 : neg_inf;
	case Kind::gamma:
		return std::log(c_) + std::lgamma(0.5 * (j + k_ + 1)) - std::log(2.0);
	case Kind::discrete:
	{
		std::vector<double> terms;
		for (std::size_t i = 0; i < s_.size(); ++i)
			if (w_[i] > 0 && (s_[i] > 0 || j == 0))
				terms.push_back(std::log(w_[i]) + j * std::log(s_[i] > 0 ? s_[i] : 1.0));
		if (terms.empty())
			return neg_inf;
		double mx = *std::max_element(terms.begin(), terms.end());
		double acc = 0;
		for (double t : terms)
			acc += std::exp(t - mx);
		return mx + std::log(acc);
	}
	case Kind::density:
	{
		auto lw = logw_;
		auto logf = [&](double s) { return j * std::log(s) + lw(s); };
		double R = radial_cutoff(logf);
		QuadratureRule q = composite_gauss_legendre(64, 16, 0, R);
		double mx = -std::numeric_limits<double>::infinity();
		for (Eigen::Index i = 0; i < q.nodes.size(); ++i)
			mx = std::max(mx, logf(q.nodes(i)));
		double acc = q.integrate([&](double s) { return std::exp(logf(s) - mx); });
		return mx + std::log(acc);
	}
	}
	return neg_inf;
}

double RadialMeasure::radial_integral(int j) const { return std::exp(log_radial_integral(j)); }

QuadratureRule RadialMeasure::rule(int panels, int order, double growth) const
{
	QuadratureRule q;
	if (kind_ == Kind::dirac0)
	{
		q.nodes = Eigen::VectorXd::Zero(1);
		q.weights = Eigen::VectorXd::Ones(1);
		return q;
	}
	if (kind_ == Kind::discrete)
	{
		q.nodes = Eigen::Map<const Eigen::VectorXd>(s_.data(), Eigen::Index(s_.size()));
		q.weights = Eigen::Map<const Eigen::VectorXd>(w_.data(), Eigen::Index(w_.size()));
		return q;
	}
	auto lw = log_density();
	double R = radial_cutoff([&](double s) { return lw(s) + growth * s * s; });
	q = composite_gauss_legendre(panels, order, 0, R);
	for (Eigen::Index i = 0; i < q.nodes.size(); ++i)
		q.weights(i) *= std::exp(lw(q.nodes(i)));
	return q;
}

nlohmann::json RadialMeasure::to_json() const { return spec_; }

RadialMeasure RadialMeasure::from_json(const nlohmann::json &j)
{
	try
	{
		std::string kind = j.at("kind").get<std::string>();
		if (kind == "dirac0")
			return dirac0();
		if (kind == "gamma")
			return gamma(j.at("k").get<int>(), j.value("c", 1.0));
		if (kind == "discrete")
			return discrete(j.at("points").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>());
		if (kind == "higgs")
			return higgs(Potential::from_json(j.at("potential")));
		throw ConfigError("unknown radial measure kind " + kind);
	}
	catch (const nlohmann::json::exception &e)
	{
		throw ConfigError(std::string("malformed radial measure: ") + e.what());
	}
}

} // namespace villain
