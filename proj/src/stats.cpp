#include "villain/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "villain/errors.hpp"

namespace villain {

MeanEstimate iid_mean(const std::vector<double> &x)
{
	if (x.size() < 2)
		throw DomainError("mean estimate needs at least two values");
	double s = 0;
	for (double v : x)
		s += v;
	const double m = s / double(x.size());
	double ss = 0;
	for (double v : x)
		ss += (v - m) * (v - m);
	const double var = ss / double(x.size() - 1);
	return {m, std::sqrt(var / double(x.size())), x.size(), 0};
}

MeanEstimate batch_means(const std::vector<double> &x, int batches)
{
	if (batches < 2 || x.size() < std::size_t(batches))
		throw DomainError("batch means needs at least as many values as batches");
	const std::size_t b = x.size() / batches;
	std::vector<double> means(batches);
	for (int k = 0; k < batches; ++k)
	{
		double s = 0;
		for (std::size_t i = 0; i < b; ++i)
			s += x[k * b + i];
		means[k] = s / double(b);
	}
	MeanEstimate e = iid_mean(means);
	e.n = b * batches;
	e.batches = batches;
	return e;
}

double integrated_autocorr_time(const std::vector<double> &x)
{
	const std::size_t n = x.size();
	if (n < 4)
		throw DomainError("autocorrelation time needs at least four values");
	double m = 0;
	for (double v : x)
		m += v;
	m /= double(n);
	auto cov = [&](std::size_t t) {
		double s = 0;
		for (std::size_t i = 0; i + t < n; ++i)
			s += (x[i] - m) * (x[i + t] - m);
		return s / double(n);
	};
	const double c0 = cov(0);
	if (c0 == 0)
		return 1;
	double tau = 1;
	for (std::size_t t = 1; t < n / 2; ++t)
	{
		tau += 2 * cov(t) / c0;
		if (double(t) >= 5 * tau)
			break;
	}
	return std::max(tau, 1e-3);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double kolmogorov_sf(double t)
{
	if (t <= 0)
		return 1;
	double s = 0;
	for (int k = 1; k < 200; ++k)
	{
		double term = 2 * ((k % 2) ? 1 : -1) * std::exp(-2.0 * k * k * t * t);
		s += term;
		if (std::abs(term) < 1e-16)
			break;
	}
	return std::clamp(s, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)> &cdf)
{
	if (sample.empty())
		throw DomainError("KS test needs a sample");
	std::sort(sample.begin(), sample.end());
	const double n = double(sample.size());
	double d = 0;
	for (std::size_t i = 0; i < sample.size(); ++i)
	{
		double F = cdf(sample[i]);
		d = std::max({d, F - double(i) / n, double(i + 1) / n - F});
	}
	const double sn = std::sqrt(n);
	return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

} // namespace villain
