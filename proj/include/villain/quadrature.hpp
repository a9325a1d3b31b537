#pragma once

#include <Eigen/Dense>

namespace villain {

struct QuadratureRule
{
	Eigen::VectorXd nodes;
	Eigen::VectorXd weights;

	template <class F> double integrate(F &&f) const
	{
		double s = 0;
		for (Eigen::Index i = 0; i < nodes.size(); ++i)
			s += weights(i) * f(nodes(i));
		return s;
	}
};

// Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a = -1, double b = 1);

// Composite Gauss-Legendre: `panels` equal panels of order `order`.
QuadratureRule composite_gauss_legendre(int panels, int order, double a, double b);

// Gauss-Hermite rule for expectations under the standard normal law.
QuadratureRule gauss_hermite(int n);

// Trapezoid rule on [0, 2 pi) with n equispaced nodes.
QuadratureRule periodic_trapezoid(int n);

} // namespace villain
