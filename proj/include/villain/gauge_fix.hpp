#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "villain/gauge.hpp"
#include "villain/norms.hpp"

namespace villain {

// Summed-area table of plaquette log-holonomies.
class PlaquetteSums
{
public:
	explicit PlaquetteSums(const GaugeField &g);

	// sum of log g(dp) over the plaquettes of r
	double sum(const Rect &r) const;

private:
	int n_;
	std::vector<double> s_;
};

struct FlatnessReport
{
	double alpha = 0;
	double value = 0;
	Rect argmax;
};

// [g]_alpha = sup over rectangles r of |r|^{-alpha/2} |sum_{p in r} log g(dp)|
FlatnessReport flatness(const GaugeField &g, double alpha);

// Field at level m whose bonds are the ordered products of the fine bonds
// along each coarse bond.
GaugeField coarse_restrict(const GaugeField &g, int m);

// sup over thin rectangles of the field's own level of |r|^{-alpha/2} |log g(dr)|
double thin_rectangle_sup(const GaugeField &g, double alpha);

// Transform bringing g into axial gauge with respect to the maximal tree.
GaugeTransform axial_fix(const GaugeField &g);

// Landau coefficients for one cell centre: alpha_i - alpha_{i+1} = beta_i
// and sum alpha_i = 0 whenever sum beta_i = 0.
template <class T> std::array<T, 4> landau_alphas(const std::array<T, 4> &beta)
{
	std::array<T, 4> a;
	for (int i = 0; i < 4; ++i)
	{
		const T &b0 = beta[i], &bm = beta[(i + 3) % 4], &b1 = beta[(i + 1) % 4], &b2 = beta[(i + 2) % 4];
		a[i] = T(3) / T(8) * (b0 - bm) + T(1) / T(8) * (b1 - b2);
	}
	return a;
}

inline constexpr double smallness_tolerance = 1e-9;

struct LandauScale
{
	int n = 0;
	int centres = 0;
	int violations = 0;
	double max_bond_log = 0;      // max |log g^u_b| over bonds of this level, after the extension
	double beta_sum_residual = 0; // max |sum beta_i mod 2 pi|
	double alpha_residual = 0;    // max mismatch between realised and assigned alpha_i
};

struct LandauOptions
{
	int threads = 1;
	bool record_betas = false;
};

struct LandauResult
{
	GaugeTransform u;
	std::vector<LandauScale> scales; // levels m..N; entry 0 holds level m itself
	int violations = 0;
	std::vector<std::array<double, 4>> betas; // every small centre, when recorded
};

// Extends a transform given on the level-m sublattice to the full lattice,
// halving logs at bond midpoints and solving the centre equations with the
// Landau condition. Centres that are not small get u = 1 and are counted.
LandauResult landau_extend(const GaugeField &g, const GaugeTransform &u_coarse, int m, const LandauOptions &opt = {});

// Smallest m >= 4 with 2^m > (8 / pi * flat)^{2 / alpha}.
int select_scale(double flat, double alpha);

struct GaugeFixOptions
{
	double alpha = 0.5;
	std::vector<double> betas{0.5};
	double kappa = 0.25;
	int threads = 1;
	bool record_betas = false;
};

struct NormCheck
{
	double beta = 0;
	double kappa = 0;
	FullNorm norm;
	double flat_beta_kappa = 0; // [g]_{beta + kappa}
	double landau_bound = 0;    // c 2^{m+1} + 4 [g]_{beta+kappa} 2^{-(m+1) kappa} / (1 - 2^{-kappa})
	double theorem_scale = 0;   // 2^m + 2^{-m kappa} [g]_{beta+kappa} / (1 - 2^{-kappa})
	double trivial_bound = 0;
};

struct HypothesisCheck
{
	double c = 0;
	double simple = 0;    // [g]_alpha 2^{-(m+1) alpha / 2}, must be < pi
	double flat_term = 0; // [g]_alpha 2^{-(m+1) alpha}, must be < c
	double bond_term = 0; // max over level-m bonds of |log g^u_b| / 2, must be < c
	bool holds = false;
};

struct GaugeFixReport
{
	int N = 0;
	double alpha = 0;
	FlatnessReport flat;
	int m_rule = 0;        // scale from the selection rule
	int m = 0;             // scale the pipeline ran at, 0 on fallback
	bool fallback = false; // m_rule > N
	double thin_sup = 0;
	double axial_max = 0;
	double axial_bound = 0; // thin_sup 2^{-alpha m / 2}
	HypothesisCheck hypothesis;
	std::vector<LandauScale> scales;
	int violations = 0;
	std::vector<NormCheck> norms;
};

struct GaugeFixResult
{
	GaugeTransform u;
	GaugeField fixed;
	GaugeFixReport report;
	std::vector<std::array<double, 4>> betas;
};

inline constexpr double landau_c = 0.39269908169872414; // pi / 8

// Scale selection, then coarse restriction, axial gauge and Landau extension;
// u = 1 when the selected scale exceeds N.
GaugeFixResult gauge_fix(const GaugeField &g, const GaugeFixOptions &opt = {});

// The same pipeline forced to run at level m.
GaugeFixResult gauge_fix_at(const GaugeField &g, int m, const GaugeFixOptions &opt = {});

nlohmann::json report_json(const GaugeFixReport &r);

} // namespace villain
