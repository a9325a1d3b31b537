#pragma once

#include <functional>
#include <vector>

namespace villain {

struct MeanEstimate
{
	double mean = 0;
	double stderr_ = 0;
	std::size_t n = 0;
	int batches = 0;
};

// Plain mean with the i.i.d. standard error.
MeanEstimate iid_mean(const std::vector<double> &x);

// Batch-means estimate for a correlated series; at least `batches` batches.
MeanEstimate batch_means(const std::vector<double> &x, int batches = 32);

// Integrated autocorrelation time with Sokal's automatic window (c = 5).
double integrated_autocorr_time(const std::vector<double> &x);

double normal_cdf(double x);
double normal_sf(double x);

// Two-sided one-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult
{
	double statistic = 0;
	double p_value = 1;
};
KsResult ks_test(std::vector<double> sample, const std::function<double(double)> &cdf);
double kolmogorov_sf(double t);

} // namespace villain
