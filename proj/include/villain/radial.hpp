#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "villain/quadrature.hpp"

namespace villain {

// Radial self-interaction V(|phi|) of the Higgs field.
struct Potential
{
	std::string name = "zero";
	double c = 0;
	std::function<double(double)> V = [](double) { return 0.0; };

	double operator()(double s) const { return V(s); }

	// V(x) = x^4 - c x^2
	static Potential quartic(double c);
	static Potential zero() { return {}; }

	nlohmann::json to_json() const;
	static Potential from_json(const nlohmann::json &j);
};

// Positive measure lambda on [0, inf). The site measure is the product of
// lambda with the surface measure of the unit sphere.
class RadialMeasure
{
public:
	enum class Kind { dirac0, gamma, density, discrete };

	// unit mass at s = 0
	static RadialMeasure dirac0();
	// c s^k exp(-s^2) ds
	static RadialMeasure gamma(int k, double c = 1.0);
	// exp(log_weight(s)) ds
	static RadialMeasure density(std::function<double(double)> log_weight, std::string name);
	// sum_i w_i delta_{s_i}
	static RadialMeasure discrete(std::vector<double> s, std::vector<double> w);
	// s exp(-V(s) - 4 s^2) ds, the polar form of exp(-V(|phi|) - 4|phi|^2) dphi on C
	static RadialMeasure higgs(const Potential &V);

	Kind kind() const { return kind_; }
	const std::string &name() const { return name_; }

	// integral of s^{2j} dlambda
	double moment(int j) const { return radial_integral(2 * j); }
	// integral of s^k dlambda
	double radial_integral(int k) const;
	double log_radial_integral(int k) const;

	// Rule for integrating f(s) dlambda(s) where |f(s)| grows at most like exp(growth s^2).
	QuadratureRule rule(int panels, int order, double growth = 0) const;

	nlohmann::json to_json() const;
	static RadialMeasure from_json(const nlohmann::json &j);

private:
	Kind kind_ = Kind::dirac0;
	std::string name_ = "dirac0";
	int k_ = 0;
	double c_ = 1;
	std::function<double(double)> logw_;
	std::vector<double> s_, w_;
	nlohmann::json spec_;

	std::function<double(double)> log_density() const;
};

// Interval [0, R] outside of which exp(logf) is below exp(-46) times its maximum.
double radial_cutoff(const std::function<double(double)> &logf);

} // namespace villain
