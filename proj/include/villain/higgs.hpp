#pragma once

#include <complex>
#include <vector>

#include "villain/gauge.hpp"
#include "villain/loops.hpp"

namespace villain {

// Interior nodes as vertices, one edge per oriented interior-interior bond.
struct HiggsGraph
{
	MultiGraph graph;
	std::vector<Step> steps; // edge -> oriented bond
};

HiggsGraph higgs_graph(const Lattice &lat);

// M_e = g along the oriented bond of each edge.
OperatorAssignment<std::complex<double>> higgs_couplings(const HiggsGraph &hg, const GaugeField &g);

// Truncated loop expansion of the Higgs weight, grouped by total winding:
// D(g) ~ sum_W c_W prod_p g(dp)^{W_p}.
struct HiggsCoefficients
{
	int N = 1;
	int max_len = 0;
	std::vector<std::vector<int>> windings;
	std::vector<double> coeffs;
	std::size_t multisets = 0;
	double tail_bound = 0; // majorant of all neglected orders, uniform in g

	double evaluate(const GaugeField &g) const;
	double coefficient(const std::vector<int> &winding) const;
};

HiggsCoefficients higgs_loop_coefficients(const Lattice &lat, const Potential &V, int max_len,
                                          int guard = default_loop_length_guard);

std::vector<RadialMeasure> higgs_site_measures(const Lattice &lat, const Potential &V);

} // namespace villain
