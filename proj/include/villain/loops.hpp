#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <tuple>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "villain/errors.hpp"
#include "villain/radial.hpp"

namespace villain {

struct MultiGraph
{
	int num_vertices = 0;
	std::vector<std::pair<int, int>> edges; // (start, end)

	bool self_loop(int e) const { return edges[e].first == edges[e].second; }
	void validate() const;
};

template <class Scalar> inline constexpr bool is_complex_scalar = Eigen::NumTraits<Scalar>::IsComplex;

template <class Scalar> using Operator = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar> using SiteVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// One d x d matrix per edge. Scalar = double selects the real expansion,
// std::complex<double> the complex one.
template <class Scalar> struct OperatorAssignment
{
	int dim = 1;
	std::vector<Operator<Scalar>> M;

	void validate(const MultiGraph &G) const
	{
		if (int(M.size()) != int(G.edges.size()))
			throw DomainError(fmt::format("{} operators for {} edges", M.size(), G.edges.size()));
		for (std::size_t e = 0; e < M.size(); ++e)
		{
			if (M[e].rows() != dim || M[e].cols() != dim)
				throw DomainError(fmt::format("operator {} is not {}x{}", e, dim, dim));
			if (!M[e].allFinite())
				throw DomainError("operator has non-finite entries");
			if constexpr (!is_complex_scalar<Scalar>)
				if (G.self_loop(int(e)) && (M[e] - M[e].transpose()).norm() > 1e-14 * (1 + M[e].norm()))
					throw DomainError("real self-loop operators must be symmetric");
		}
	}
};

// Surface area constants of the unit sphere in C^d and R^d, generalised to the
// moments of the sphere: K_N in the spherical moment identities.
double k_complex(int N, int d);
double k_real(int N, int d);

template <class Scalar> double k_const(int N, int d)
{
	if constexpr (is_complex_scalar<Scalar>)
		return k_complex(N, d);
	else
		return k_real(N, d);
}

template <class Scalar> double c_coeff(int N, int d, const RadialMeasure &lam)
{
	return k_const<Scalar>(N, d) * lam.moment(N);
}

struct SignedEdge
{
	int edge = 0;
	int sign = 1;
	auto operator<=>(const SignedEdge &) const = default;
};

using EdgeWord = std::vector<SignedEdge>;

struct LoopClass
{
	EdgeWord seq;               // canonical representative
	int symmetry = 1;           // size of the stabiliser of seq
	std::vector<int> incidence; // end-point incidences per vertex, self-loops twice
	std::size_t length() const { return seq.size(); }
};

inline int word_from(const MultiGraph &G, SignedEdge s)
{
	return s.sign > 0 ? G.edges[s.edge].first : G.edges[s.edge].second;
}
inline int word_to(const MultiGraph &G, SignedEdge s)
{
	return s.sign > 0 ? G.edges[s.edge].second : G.edges[s.edge].first;
}

// Reversal of a word: reversed order, flipped signs, self-loops keep sign +1.
EdgeWord reverse_word(const MultiGraph &G, const EdgeWord &w);
EdgeWord rotate_word(const EdgeWord &w, std::size_t r);

// Lexicographically smallest image under rotations (and reversals when real).
EdgeWord canonical_loop(const MultiGraph &G, const EdgeWord &w, bool real);
int loop_symmetry(const MultiGraph &G, const EdgeWord &w, bool real);

std::string word_signature(const EdgeWord &w, bool real);

inline constexpr int default_loop_length_guard = 16;

std::vector<LoopClass> enumerate_loop_classes_impl(const MultiGraph &G, int max_len, bool real, int guard);

template <class Scalar>
std::vector<LoopClass> enumerate_loop_classes(const MultiGraph &G, int max_len, int guard = default_loop_length_guard)
{
	return enumerate_loop_classes_impl(G, max_len, !is_complex_scalar<Scalar>, guard);
}

// Product of the operators along a word; sign -1 uses the transpose.
template <class Scalar> Operator<Scalar> word_product(const EdgeWord &w, const OperatorAssignment<Scalar> &M)
{
	Operator<Scalar> P = Operator<Scalar>::Identity(M.dim, M.dim);
	for (SignedEdge s : w)
		P = s.sign > 0 ? Operator<Scalar>(P * M.M[s.edge]) : Operator<Scalar>(P * M.M[s.edge].transpose());
	return P;
}

template <class Scalar> Scalar loop_value(const EdgeWord &w, const OperatorAssignment<Scalar> &M)
{
	return word_product(w, M).trace();
}

struct LedgerEntry
{
	std::string signature;
	int total_length = 0;
	std::complex<double> contribution;
};

template <class Scalar> struct ExpansionResult
{
	Scalar value = 0;
	double abs_sum = 0;
	int max_total = 0;
	std::size_t terms = 0;
	std::vector<LedgerEntry> ledger;
};

struct ExpansionOptions
{
	int max_total = 8;
	bool keep_ledger = true;
	int guard = default_loop_length_guard;
};

// C_x(j) = K_j moment_x(j) for j <= jmax on each vertex.
template <class Scalar>
std::vector<std::vector<double>> c_table(int dim, const std::vector<RadialMeasure> &measures, int jmax)
{
	std::vector<std::vector<double>> C(measures.size(), std::vector<double>(jmax + 1));
	for (std::size_t x = 0; x < measures.size(); ++x)
		for (int j = 0; j <= jmax; ++j)
			C[x][j] = c_coeff<Scalar>(j, dim, measures[x]);
	return C;
}

// A building block of a multiset: a loop, or (inside partial expansions) a path.
struct Piece
{
	int length = 0;
	int symmetry = 1;
	std::vector<int> incidence;
};

// Depth-first walk over all multisets of pieces with total length <= max_total.
// Pieces must be sorted by length. `visit` receives the current stack of piece
// indices, the weight prod_x C_x(L_x / 2) / (multiplicities! * prod S) and the
// payload folded with `extend`.
template <class Payload, class Extend, class Visit>
void visit_multisets(const std::vector<Piece> &pieces, const std::vector<std::vector<double>> &C, int max_total,
                     Payload init, Extend extend, Visit visit)
{
	const std::size_t V = C.size();
	std::vector<int> inc(V, 0), stack;
	auto weight_of = [&]() {
		double w = 1;
		for (std::size_t x = 0; x < V; ++x)
			w *= C[x][inc[x] / 2];
		return w;
	};
	auto rec = [&](auto &&self, std::size_t start, int used, double comb, int mult, const Payload &pay) -> void {
		visit(stack, comb * weight_of(), pay);
		for (std::size_t j = start; j < pieces.size(); ++j)
		{
			const Piece &p = pieces[j];
			if (used + p.length > max_total)
				break;
			int m = (!stack.empty() && stack.back() == int(j)) ? mult + 1 : 1;
			for (std::size_t x = 0; x < V; ++x)
				inc[x] += p.incidence[x];
			stack.push_back(int(j));
			self(self, j, used + p.length, comb / (double(m) * p.symmetry), m, extend(pay, int(j)));
			stack.pop_back();
			for (std::size_t x = 0; x < V; ++x)
				inc[x] -= p.incidence[x];
		}
	};
	rec(rec, 0, 0, 1.0, 0, init);
}

std::string multiset_signature(const std::vector<int> &stack, const std::vector<std::string> &names);

template <class Scalar>
ExpansionResult<Scalar> expansion_value(const MultiGraph &G, const OperatorAssignment<Scalar> &M,
                                        const std::vector<RadialMeasure> &measures, const ExpansionOptions &opt)
{
	G.validate();
	M.validate(G);
	if (int(measures.size()) != G.num_vertices)
		throw DomainError("one radial measure per vertex is required");
	constexpr bool real = !is_complex_scalar<Scalar>;
	auto classes = enumerate_loop_classes<Scalar>(G, opt.max_total, opt.guard);
	std::vector<Piece> pieces;
	std::vector<Scalar> values;
	std::vector<std::string> names;
	for (const auto &c : classes)
	{
		pieces.push_back({int(c.length()), c.symmetry, c.incidence});
		values.push_back(loop_value(c.seq, M));
		if (opt.keep_ledger)
			names.push_back(word_signature(c.seq, real));
	}
	auto C = c_table<Scalar>(M.dim, measures, opt.max_total);
	ExpansionResult<Scalar> res;
	res.max_total = opt.max_total;
	visit_multisets(
	    pieces, C, opt.max_total, Scalar(1), [&](const Scalar &p, int j) { return Scalar(p * values[j]); },
	    [&](const std::vector<int> &stack, double w, const Scalar &p) {
		    Scalar term = w * p;
		    res.value += term;
		    res.abs_sum += std::abs(term);
		    ++res.terms;
		    if (opt.keep_ledger)
		    {
			    int len = 0;
			    for (int j : stack)
				    len += pieces[j].length;
			    res.ledger.push_back({multiset_signature(stack, names), len, std::complex<double>(term)});
		    }
	    });
	return res;
}

// Upper bound on the sum over total lengths > max_total of the absolute
// contributions, from |(phi_s, M phi_t)| <= |M| (|phi_s|^2 + |phi_t|^2) / 2.
// Returns +inf when the majorant diverges.
double majorant_tail(const std::vector<double> &a, int dim, bool real, const std::vector<RadialMeasure> &measures,
                     int max_total);

template <class Scalar> std::vector<double> majorant_rates(const MultiGraph &G, const OperatorAssignment<Scalar> &M)
{
	std::vector<double> a(G.num_vertices, 0.0);
	for (std::size_t e = 0; e < G.edges.size(); ++e)
	{
		double nrm = M.M[e].operatorNorm();
		auto [s, t] = G.edges[e];
		if (s == t)
			a[s] += is_complex_scalar<Scalar> ? nrm : 0.5 * nrm;
		else
		{
			a[s] += 0.5 * nrm;
			a[t] += 0.5 * nrm;
		}
	}
	return a;
}

template <class Scalar>
double expansion_tail_bound(const MultiGraph &G, const OperatorAssignment<Scalar> &M,
                            const std::vector<RadialMeasure> &measures, int max_total)
{
	return majorant_tail(majorant_rates(G, M), M.dim, !is_complex_scalar<Scalar>, measures, max_total);
}

struct QuadSpec
{
	int radial_panels = 6;
	int radial_order = 12;
	int angular = 24;
	double rel_tol = 1e-7;
};

template <class Scalar> struct SitePoints
{
	std::vector<SiteVector<Scalar>> phi;
	std::vector<double> w;
};

// Tensor-product rule for the site measure dphi-hat x dlambda on H = C^d or R^d.
// With fix_phase the first complex angle is pinned to 0 and weighted by 2 pi.
template <class Scalar>
SitePoints<Scalar> site_points(const RadialMeasure &lam, int dim, const QuadSpec &q, double growth, bool fix_phase)
{
	SitePoints<Scalar> out;
	if (lam.kind() == RadialMeasure::Kind::dirac0)
	{
		// every direction collapses onto phi = 0, carrying the full sphere area
		out.phi.push_back(SiteVector<Scalar>::Zero(dim));
		out.w.push_back(k_const<Scalar>(0, dim));
		return out;
	}
	QuadratureRule r = lam.rule(q.radial_panels, q.radial_order, growth);
	auto add = [&](const SiteVector<Scalar> &dir, double wdir) {
		for (Eigen::Index i = 0; i < r.nodes.size(); ++i)
		{
			out.phi.push_back(r.nodes(i) * dir);
			out.w.push_back(wdir * r.weights(i));
		}
	};
	const double two_pi = 2 * std::numbers::pi;
	if constexpr (is_complex_scalar<Scalar>)
	{
		QuadratureRule th = periodic_trapezoid(q.angular);
		if (fix_phase)
		{
			th.nodes = Eigen::VectorXd::Zero(1);
			th.weights = Eigen::VectorXd::Constant(1, two_pi);
		}
		if (dim == 1)
		{
			for (Eigen::Index i = 0; i < th.nodes.size(); ++i)
				add(SiteVector<Scalar>::Constant(1, std::polar(1.0, th.nodes(i))), th.weights(i));
		}
		else if (dim == 2)
		{
			QuadratureRule chi = gauss_legendre(std::max(4, q.angular / 2), 0, std::numbers::pi / 2);
			QuadratureRule th2 = periodic_trapezoid(q.angular);
			for (Eigen::Index a = 0; a < chi.nodes.size(); ++a)
				for (Eigen::Index i = 0; i < th.nodes.size(); ++i)
					for (Eigen::Index k = 0; k < th2.nodes.size(); ++k)
					{
						SiteVector<Scalar> v(2);
						v(0) = std::cos(chi.nodes(a)) * std::polar(1.0, th.nodes(i));
						v(1) = std::sin(chi.nodes(a)) * std::polar(1.0, th2.nodes(k));
						add(v, chi.weights(a) * std::sin(chi.nodes(a)) * std::cos(chi.nodes(a)) * th.weights(i) *
						           th2.weights(k));
					}
		}
		else
			throw ResourceError("brute-force quadrature supports complex dimension 1 or 2");
	}
	else
	{
		if (dim == 1)
		{
			add(SiteVector<Scalar>::Constant(1, 1.0), 1.0);
			add(SiteVector<Scalar>::Constant(1, -1.0), 1.0);
		}
		else if (dim == 2)
		{
			QuadratureRule th = periodic_trapezoid(q.angular);
			for (Eigen::Index i = 0; i < th.nodes.size(); ++i)
			{
				SiteVector<Scalar> v(2);
				v << std::cos(th.nodes(i)), std::sin(th.nodes(i));
				add(v, th.weights(i));
			}
		}
		else
			throw ResourceError("brute-force quadrature supports real dimension 1 or 2");
	}
	return out;
}

template <class Scalar> struct BruteForceResult
{
	Scalar value = 0;
	double error_estimate = 0;
	std::size_t points = 0;
};

template <class Scalar>
Scalar brute_force_once(const MultiGraph &G, const OperatorAssignment<Scalar> &M,
                        const std::vector<RadialMeasure> &measures, const QuadSpec &q, std::size_t &points)
{
	const int V = G.num_vertices;
	auto a = majorant_rates(G, M);
	std::vector<SitePoints<Scalar>> sites;
	bool phase_fixed = false;
	for (int x = 0; x < V; ++x)
	{
		bool fix = is_complex_scalar<Scalar> && !phase_fixed && measures[x].kind() != RadialMeasure::Kind::dirac0;
		sites.push_back(site_points<Scalar>(measures[x], M.dim, q, a[x], fix));
		phase_fixed = phase_fixed || fix;
	}
	std::size_t total = 1;
	for (auto &s : sites)
	{
		total *= s.phi.size();
		if (total > std::size_t(400) * 1000 * 1000)
			throw ResourceError("brute-force quadrature grid exceeds 4e8 points");
	}
	points = total;
	std::vector<double> coef(G.edges.size());
	for (std::size_t e = 0; e < G.edges.size(); ++e)
		coef[e] = (!is_complex_scalar<Scalar> && G.self_loop(int(e))) ? 0.5 : 1.0;
	std::vector<std::size_t> idx(V, 0);
	Scalar sum = 0;
	for (std::size_t n = 0; n < total; ++n)
	{
		Scalar ex = 0;
		double w = 1;
		for (int x = 0; x < V; ++x)
			w *= sites[x].w[idx[x]];
		for (std::size_t e = 0; e < G.edges.size(); ++e)
		{
			auto [s, t] = G.edges[e];
			ex += coef[e] * sites[s].phi[idx[s]].dot(M.M[e] * sites[t].phi[idx[t]]);
		}
		sum += w * std::exp(ex);
		for (int x = V - 1; x >= 0; --x)
		{
			if (++idx[x] < sites[x].phi.size())
				break;
			idx[x] = 0;
		}
	}
	return sum;
}

// Direct quadrature of int exp(sum_e (phi_s, M_e phi_t)) prod_x drho_x, with
// real self-loops weighted by 1/2. The rule is refined once by a factor 3/2 and
// the difference is reported as the error estimate.
template <class Scalar>
BruteForceResult<Scalar> brute_force_integral(const MultiGraph &G, const OperatorAssignment<Scalar> &M,
                                              const std::vector<RadialMeasure> &measures, const QuadSpec &q = {})
{
	G.validate();
	M.validate(G);
	if (int(measures.size()) != G.num_vertices)
		throw DomainError("one radial measure per vertex is required");
	int real_dims = 0;
	for (const auto &m : measures)
		if (m.kind() != RadialMeasure::Kind::dirac0)
			real_dims += is_complex_scalar<Scalar> ? 2 * M.dim : M.dim;
	if (real_dims > 6)
		throw ResourceError("brute-force quadrature is limited to 6 real dimensions");
	QuadSpec fine = q;
	fine.radial_panels = q.radial_panels * 3 / 2;
	fine.angular = q.angular * 3 / 2;
	std::size_t p0 = 0, p1 = 0;
	Scalar coarse = brute_force_once(G, M, measures, q, p0);
	Scalar refined = brute_force_once(G, M, measures, fine, p1);
	BruteForceResult<Scalar> r{refined, std::abs(refined - coarse), p1};
	if (!std::isfinite(std::abs(refined)))
		throw NumericalError("brute-force quadrature produced a non-finite value");
	if (r.error_estimate > q.rel_tol * std::abs(refined))
		throw NumericalError(fmt::format("brute-force refinement check failed: |diff| = {:.3e}", r.error_estimate));
	return r;
}

// Integral of conj(phi)^a phi^b (complex) or phi^(a+b) (real) against the
// scalar site measure: numerical radial integral times a trapezoid angular sum.
template <class Scalar> Scalar site_monomial(const RadialMeasure &lam, int a, int b, const QuadSpec &q)
{
	const int k = a + b;
	const double radial = lam.radial_integral(k);
	if constexpr (is_complex_scalar<Scalar>)
	{
		QuadratureRule th = periodic_trapezoid(std::max(q.angular, k + 1));
		Scalar ang = 0;
		for (Eigen::Index i = 0; i < th.nodes.size(); ++i)
			ang += th.weights(i) * std::polar(1.0, (b - a) * th.nodes(i));
		return radial * ang;
	}
	else
		return radial * (1.0 + (k % 2 ? -1.0 : 1.0));
}

// Mid-induction form of the expansion: loops and paths whose intermediate
// vertices lie in vbar, paths ending on the remaining vertices W, with the
// path factors integrated numerically over H^W. Scalar couplings only.
template <class Scalar>
ExpansionResult<Scalar> partial_expansion(const MultiGraph &G, const OperatorAssignment<Scalar> &M,
                                          const std::vector<RadialMeasure> &measures, const std::vector<int> &vbar,
                                          const ExpansionOptions &opt, const QuadSpec &q = {})
{
	G.validate();
	M.validate(G);
	if (M.dim != 1)
		throw ResourceError("partial expansion is implemented for scalar couplings");
	if (int(measures.size()) != G.num_vertices)
		throw DomainError("one radial measure per vertex is required");
	constexpr bool real = !is_complex_scalar<Scalar>;
	const int V = G.num_vertices;
	std::vector<char> in_bar(V, 0);
	for (int x : vbar)
	{
		if (x < 0 || x >= V || in_bar[x])
			throw DomainError("vbar must list distinct vertices");
		in_bar[x] = 1;
	}

	struct PieceData
	{
		Piece piece;
		Scalar value;
		int from = -1, to = -1; // path end points, -1 for loops
		std::string name;
	};
	std::vector<PieceData> data;
	auto incidence_of = [&](const EdgeWord &w) {
		std::vector<int> inc(V, 0);
		for (SignedEdge st : w)
		{
			int u = word_from(G, st), v = word_to(G, st);
			if (in_bar[u])
				inc[u]++;
			if (in_bar[v])
				inc[v]++;
		}
		return inc;
	};
	for (const auto &c : enumerate_loop_classes<Scalar>(G, opt.max_total, opt.guard))
	{
		bool inside = std::all_of(c.seq.begin(), c.seq.end(), [&](SignedEdge st) { return in_bar[word_from(G, st)]; });
		if (!inside)
			continue;
		data.push_back({{int(c.length()), c.symmetry, incidence_of(c.seq)}, loop_value(c.seq, M), -1, -1,
		                word_signature(c.seq, real)});
	}

	std::vector<SignedEdge> letters;
	for (std::size_t e = 0; e < G.edges.size(); ++e)
	{
		letters.push_back({int(e), 1});
		if (real && !G.self_loop(int(e)))
			letters.push_back({int(e), -1});
	}
	EdgeWord path;
	auto record_path = [&]() {
		int sym = 1;
		if constexpr (real)
		{
			EdgeWord r = reverse_word(G, path);
			if (r < path)
				return;
			sym = r == path ? 2 : 1;
		}
		Scalar m = 1;
		for (SignedEdge st : path)
			m *= M.M[st.edge](0, 0);
		data.push_back({{int(path.size()), sym, incidence_of(path)}, m, word_from(G, path.front()),
		                word_to(G, path.back()), "path " + word_signature(path, real)});
	};
	auto grow = [&](auto &&self, int cur) -> void {
		if (!in_bar[cur])
		{
			record_path();
			return;
		}
		if (int(path.size()) >= opt.max_total)
			return;
		for (SignedEdge st : letters)
			if (word_from(G, st) == cur)
			{
				path.push_back(st);
				self(self, word_to(G, st));
				path.pop_back();
			}
	};
	for (int w = 0; w < V; ++w)
		if (!in_bar[w])
			for (SignedEdge st : letters)
				if (word_from(G, st) == w)
				{
					path.assign(1, st);
					grow(grow, word_to(G, st));
				}

	std::stable_sort(data.begin(), data.end(),
	                 [](const PieceData &a, const PieceData &b) { return a.piece.length < b.piece.length; });
	std::vector<Piece> pieces;
	std::vector<std::string> names;
	for (const auto &d : data)
	{
		pieces.push_back(d.piece);
		names.push_back(d.name);
	}

	auto C = c_table<Scalar>(1, measures, opt.max_total);
	for (int x = 0; x < V; ++x)
		if (!in_bar[x])
			std::fill(C[x].begin(), C[x].end(), 1.0);

	std::map<std::tuple<int, int, int>, Scalar> monomials;
	auto monomial = [&](int x, int a, int b) {
		auto key = std::tuple{x, a, b};
		auto it = monomials.find(key);
		if (it == monomials.end())
			it = monomials.emplace(key, site_monomial<Scalar>(measures[x], a, b, q)).first;
		return it->second;
	};

	struct Payload
	{
		Scalar prod = 1;
		std::vector<int> conj_deg, deg;
	};
	Payload init{Scalar(1), std::vector<int>(V, 0), std::vector<int>(V, 0)};
	ExpansionResult<Scalar> res;
	res.max_total = opt.max_total;
	visit_multisets(
	    pieces, C, opt.max_total, init,
	    [&](const Payload &p, int j) {
		    Payload n = p;
		    n.prod *= data[j].value;
		    if (data[j].from >= 0)
		    {
			    (real ? n.deg : n.conj_deg)[data[j].from]++;
			    n.deg[data[j].to]++;
		    }
		    return n;
	    },
	    [&](const std::vector<int> &stack, double w, const Payload &p) {
		    Scalar term = w * p.prod;
		    for (int x = 0; x < V; ++x)
			    if (!in_bar[x])
				    term *= monomial(x, p.conj_deg[x], p.deg[x]);
		    res.value += term;
		    res.abs_sum += std::abs(term);
		    ++res.terms;
		    if (opt.keep_ledger)
		    {
			    int len = 0;
			    for (int j : stack)
				    len += pieces[j].length;
			    res.ledger.push_back({multiset_signature(stack, names), len, std::complex<double>(term)});
		    }
	    });
	return res;
}

// A multigraph expansion problem read from JSON:
// {"vertices": V, "edges": [[s, t], ...], "field": "real" | "complex", "dim": d,
//  "matrices": [[row-major entries], ...], "measure": {...} or "measures": [{...}, ...],
//  "max_total": L}. Complex entries are [re, im] pairs.
struct LoopProblem
{
	MultiGraph graph;
	bool complex = true;
	OperatorAssignment<double> real_ops;
	OperatorAssignment<std::complex<double>> complex_ops;
	std::vector<RadialMeasure> measures;
	ExpansionOptions options;
};

LoopProblem loop_problem_from_json(const nlohmann::json &j);

} // namespace villain
