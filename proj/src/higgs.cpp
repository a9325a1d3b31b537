#include "villain/higgs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace villain {

HiggsGraph higgs_graph(const Lattice &lat)
{
	HiggsGraph hg;
	hg.graph.num_vertices = lat.num_interior();
	for (int a = 0; a < lat.num_interior(); ++a)
	{
		Node x = lat.interior_node(a);
		for (Node y : lat.neighbours(x))
			if (lat.is_interior(y))
			{
				hg.graph.edges.push_back({a, lat.interior_index(y)});
				hg.steps.push_back(lat.step(x, y));
			}
	}
	return hg;
}

OperatorAssignment<std::complex<double>> higgs_couplings(const HiggsGraph &hg, const GaugeField &g)
{
	OperatorAssignment<std::complex<double>> M;
	for (Step s : hg.steps)
		M.M.push_back(Operator<std::complex<double>>::Constant(1, 1, g.value(s)));
	return M;
}

std::vector<RadialMeasure> higgs_site_measures(const Lattice &lat, const Potential &V)
{
	return std::vector<RadialMeasure>(lat.num_interior(), RadialMeasure::higgs(V));
}

double HiggsCoefficients::evaluate(const GaugeField &g) const
{
	if (g.lattice().N() != N)
		throw DomainError("coefficients were computed for a different lattice");
	auto X = g.plaquette_logs();
	double s = 0;
	for (std::size_t i = 0; i < coeffs.size(); ++i)
	{
		double phase = 0;
		for (std::size_t p = 0; p < X.size(); ++p)
			phase += windings[i][p] * X[p];
		s += coeffs[i] * std::cos(phase);
	}
	return s;
}

double HiggsCoefficients::coefficient(const std::vector<int> &winding) const
{
	auto it = std::lower_bound(windings.begin(), windings.end(), winding);
	return it != windings.end() && *it == winding ? coeffs[it - windings.begin()] : 0.0;
}

HiggsCoefficients higgs_loop_coefficients(const Lattice &lat, const Potential &V, int max_len, int guard)
{
	using cd = std::complex<double>;
	HiggsGraph hg = higgs_graph(lat);
	auto classes = enumerate_loop_classes<cd>(hg.graph, max_len, guard);
	auto measures = higgs_site_measures(lat, V);
	std::vector<Piece> pieces;
	std::vector<std::vector<int>> wind;
	for (const auto &c : classes)
	{
		pieces.push_back({int(c.length()), c.symmetry, c.incidence});
		LatticeLoop loop;
		loop.nodes.push_back(lat.interior_node(word_from(hg.graph, c.seq.front())));
		for (SignedEdge s : c.seq)
			loop.nodes.push_back(lat.interior_node(word_to(hg.graph, s)));
		wind.push_back(winding_vector(lat, loop));
	}
	auto C = c_table<cd>(1, measures, max_len);
	std::map<std::vector<int>, double> acc;
	HiggsCoefficients out;
	out.N = lat.N();
	out.max_len = max_len;
	const std::vector<int> zero(lat.num_plaquettes(), 0);
	visit_multisets(
	    pieces, C, max_len, zero,
	    [&](const std::vector<int> &w, int j) {
		    std::vector<int> n = w;
		    for (std::size_t p = 0; p < n.size(); ++p)
			    n[p] += wind[j][p];
		    return n;
	    },
	    [&](const std::vector<int> &, double weight, const std::vector<int> &w) {
		    acc[w] += weight;
		    ++out.multisets;
	    });
	for (auto &[w, c] : acc)
	{
		out.windings.push_back(w);
		out.coeffs.push_back(c);
	}
	OperatorAssignment<cd> unit;
	for (std::size_t e = 0; e < hg.graph.edges.size(); ++e)
		unit.M.push_back(Operator<cd>::Ones(1, 1));
	out.tail_bound = expansion_tail_bound(hg.graph, unit, measures, max_len);
	return out;
}

} // namespace villain
