#include "villain/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "villain/errors.hpp"

namespace villain {

namespace {

// Golub-Welsch: nodes are eigenvalues of the symmetric Jacobi matrix, weights
// are mass * (first eigenvector component)^2.
QuadratureRule golub_welsch(const Eigen::VectorXd &offdiag, double mass)
{
	const Eigen::Index n = offdiag.size() + 1;
	Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
	for (Eigen::Index k = 0; k + 1 < n; ++k)
		J(k, k + 1) = J(k + 1, k) = offdiag(k);
	Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
	if (es.info() != Eigen::Success)
		throw NumericalError("Golub-Welsch eigenvalue problem did not converge");
	QuadratureRule q;
	q.nodes = es.eigenvalues();
	q.weights = mass * es.eigenvectors().row(0).transpose().array().square();
	return q;
}

} // namespace

QuadratureRule gauss_legendre(int n, double a, double b)
{
	if (n < 1)
		throw ConfigError("quadrature order must be positive");
	Eigen::VectorXd off(n - 1);
	for (int k = 1; k < n; ++k)
		off(k - 1) = k / std::sqrt(4.0 * k * k - 1);
	QuadratureRule q = golub_welsch(off, 2.0);
	// symmetrise to remove eigen-solver noise
	for (int i = 0; i < n / 2; ++i)
	{
		double x = 0.5 * (q.nodes(n - 1 - i) - q.nodes(i));
		double w = 0.5 * (q.weights(i) + q.weights(n - 1 - i));
		q.nodes(i) = -x;
		q.nodes(n - 1 - i) = x;
		q.weights(i) = q.weights(n - 1 - i) = w;
	}
	if (n % 2)
		q.nodes(n / 2) = 0;
	q.nodes = (0.5 * (b - a)) * q.nodes.array() + 0.5 * (a + b);
	q.weights *= 0.5 * (b - a);
	return q;
}

QuadratureRule composite_gauss_legendre(int panels, int order, double a, double b)
{
	if (panels < 1)
		throw ConfigError("composite rule needs at least one panel");
	QuadratureRule base = gauss_legendre(order);
	QuadratureRule q;
	q.nodes.resize(panels * order);
	q.weights.resize(panels * order);
	const double h = (b - a) / panels;
	for (int p = 0; p < panels; ++p)
		for (int i = 0; i < order; ++i)
		{
			q.nodes(p * order + i) = a + h * (p + 0.5 * (base.nodes(i) + 1));
			q.weights(p * order + i) = 0.5 * h * base.weights(i);
		}
	return q;
}

QuadratureRule gauss_hermite(int n)
{
	if (n < 1)
		throw ConfigError("quadrature order must be positive");
	Eigen::VectorXd off(n - 1);
	for (int k = 1; k < n; ++k)
		off(k - 1) = std::sqrt(double(k));
	return golub_welsch(off, 1.0);
}

QuadratureRule periodic_trapezoid(int n)
{
	if (n < 1)
		throw ConfigError("quadrature order must be positive");
	QuadratureRule q;
	q.nodes.resize(n);
	q.weights = Eigen::VectorXd::Constant(n, 2 * std::numbers::pi / n);
	for (int i = 0; i < n; ++i)
		q.nodes(i) = 2 * std::numbers::pi * i / n;
	return q;
}

} // namespace villain
