#include "villain/loops.hpp"

#include "villain/json_util.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace villain {

void MultiGraph::validate() const
{
	if (num_vertices < 1)
		throw DomainError("graph needs at least one vertex");
	for (auto [s, t] : edges)
		if (s < 0 || t < 0 || s >= num_vertices || t >= num_vertices)
			throw DomainError(fmt::format("edge ({}, {}) refers to a missing vertex", s, t));
}

double k_complex(int N, int d)
{
	if (N < 0 || d < 1)
		throw DomainError("K needs N >= 0 and d >= 1");
	return std::exp(std::log(2.0) + d * std::log(std::numbers::pi) - std::lgamma(N + d));
}

double k_real(int N, int d)
{
	if (N < 0 || d < 1)
		throw DomainError("K needs N >= 0 and d >= 1");
	return std::exp(0.5 * d * std::log(std::numbers::pi) - (N - 1) * std::log(2.0) - std::lgamma(N + 0.5 * d));
}

EdgeWord reverse_word(const MultiGraph &G, const EdgeWord &w)
{
	EdgeWord r(w.rbegin(), w.rend());
	for (auto &s : r)
		s.sign = G.self_loop(s.edge) ? 1 : -s.sign;
	return r;
}

EdgeWord rotate_word(const EdgeWord &w, std::size_t r)
{
	EdgeWord out(w.size());
	for (std::size_t i = 0; i < w.size(); ++i)
		out[i] = w[(i + r) % w.size()];
	return out;
}

EdgeWord canonical_loop(const MultiGraph &G, const EdgeWord &w, bool real)
{
	EdgeWord best = w;
	auto consider = [&](const EdgeWord &v) {
		for (std::size_t r = 0; r < v.size(); ++r)
		{
			EdgeWord c = rotate_word(v, r);
			if (c < best)
				best = std::move(c);
		}
	};
	consider(w);
	if (real)
		consider(reverse_word(G, w));
	return best;
}

int loop_symmetry(const MultiGraph &G, const EdgeWord &w, bool real)
{
	int count = 0;
	for (std::size_t r = 0; r < w.size(); ++r)
		count += rotate_word(w, r) == w;
	if (real)
	{
		EdgeWord rev = reverse_word(G, w);
		for (std::size_t r = 0; r < w.size(); ++r)
			count += rotate_word(rev, r) == w;
	}
	return count;
}

std::string word_signature(const EdgeWord &w, bool real)
{
	std::string out;
	for (std::size_t i = 0; i < w.size(); ++i)
	{
		if (i)
			out += ' ';
		out += fmt::format("e{}", w[i].edge);
		if (real && w[i].sign < 0)
			out += '\'';
	}
	return out;
}

std::string multiset_signature(const std::vector<int> &stack, const std::vector<std::string> &names)
{
	if (stack.empty())
		return "{}";
	std::string out;
	for (std::size_t i = 0; i < stack.size();)
	{
		std::size_t j = i;
		while (j < stack.size() && stack[j] == stack[i])
			++j;
		if (!out.empty())
			out += " ";
		out += "[" + names[stack[i]] + "]";
		if (j - i > 1)
			out += fmt::format("^{}", j - i);
		i = j;
	}
	return out;
}

std::vector<LoopClass> enumerate_loop_classes_impl(const MultiGraph &G, int max_len, bool real, int guard)
{
	G.validate();
	if (max_len < 0)
		throw ConfigError("max_len must be non-negative");
	if (max_len > guard)
		throw ResourceError(fmt::format("max_len {} exceeds the loop enumeration guard {}", max_len, guard));
	std::vector<SignedEdge> letters;
	for (std::size_t e = 0; e < G.edges.size(); ++e)
	{
		letters.push_back({int(e), 1});
		if (real && !G.self_loop(int(e)))
			letters.push_back({int(e), -1});
	}
	std::sort(letters.begin(), letters.end());
	std::vector<std::vector<std::size_t>> out_of(G.num_vertices);
	for (std::size_t i = 0; i < letters.size(); ++i)
		out_of[word_from(G, letters[i])].push_back(i);

	const std::size_t limit = 20'000'000;
	std::vector<LoopClass> classes;
	EdgeWord seq;
	for (std::size_t f = 0; f < letters.size(); ++f)
	{
		const int v0 = word_from(G, letters[f]);
		auto rec = [&](auto &&self, int cur) -> void {
			if (cur == v0 && canonical_loop(G, seq, real) == seq)
			{
				LoopClass c;
				c.seq = seq;
				c.symmetry = loop_symmetry(G, seq, real);
				c.incidence.assign(G.num_vertices, 0);
				for (SignedEdge s : seq)
				{
					c.incidence[word_from(G, s)]++;
					c.incidence[word_to(G, s)]++;
				}
				classes.push_back(std::move(c));
				if (classes.size() > limit)
					throw ResourceError("loop enumeration exceeds 2e7 classes");
			}
			if (int(seq.size()) >= max_len)
				return;
			for (std::size_t i : out_of[cur])
			{
				if (i < f)
					continue;
				seq.push_back(letters[i]);
				self(self, word_to(G, letters[i]));
				seq.pop_back();
			}
		};
		seq.assign(1, letters[f]);
		if (max_len >= 1)
			rec(rec, word_to(G, letters[f]));
	}
	std::sort(classes.begin(), classes.end(), [](const LoopClass &a, const LoopClass &b) {
		return a.seq.size() != b.seq.size() ? a.seq.size() < b.seq.size() : a.seq < b.seq;
	});
	return classes;
}

double majorant_tail(const std::vector<double> &a, int dim, bool real, const std::vector<RadialMeasure> &measures,
                     int max_total)
{
	const double inf = std::numeric_limits<double>::infinity();
	const int jcap = 800;
	std::vector<double> prod{1.0};
	for (std::size_t x = 0; x < a.size(); ++x)
	{
		const double logk0 = std::log(real ? k_real(0, dim) : k_complex(0, dim));
		std::vector<double> f;
		if (a[x] == 0)
			f.push_back(std::exp(logk0 + measures[x].log_radial_integral(0)));
		else
		{
			double total = 0;
			bool done = false;
			for (int j = 0; j <= jcap; ++j)
			{
				double lf = j * std::log(a[x]) + logk0 + measures[x].log_radial_integral(2 * j) - std::lgamma(j + 1.0);
				double v = std::exp(lf);
				if (!std::isfinite(v))
					return inf;
				f.push_back(v);
				total += v;
				if (v == 0 || (j > 8 && v < 1e-22 * total && v < f[j - 1]))
				{
					done = true;
					break;
				}
			}
			if (!done)
				return inf;
		}
		std::vector<double> next(prod.size() + f.size() - 1, 0.0);
		for (std::size_t i = 0; i < prod.size(); ++i)
			for (std::size_t j = 0; j < f.size(); ++j)
				next[i + j] += prod[i] * f[j];
		prod = std::move(next);
	}
	double tail = 0;
	for (std::size_t T = std::size_t(std::max(0, max_total + 1)); T < prod.size(); ++T)
		tail += prod[T];
	return tail;
}

LoopProblem loop_problem_from_json(const nlohmann::json &j)
{
	require_keys(j, {"vertices", "edges", "field", "dim", "matrices", "measure", "measures", "max_total", "guard"},
	             "loop expansion problem");
	LoopProblem p;
	try
	{
		p.graph.num_vertices = j.at("vertices").get<int>();
		for (const auto &e : j.at("edges"))
			p.graph.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
		const std::string field = j.value("field", std::string("complex"));
		if (field != "real" && field != "complex")
			throw ConfigError("field must be real or complex");
		p.complex = field == "complex";
		const int d = j.value("dim", 1);
		if (d < 1)
			throw ConfigError("dim must be positive");
		const auto &mats = j.at("matrices");
		if (mats.size() != p.graph.edges.size())
			throw ConfigError(fmt::format("{} matrices for {} edges", mats.size(), p.graph.edges.size()));
		p.real_ops.dim = p.complex_ops.dim = d;
		for (const auto &m : mats)
		{
			if (int(m.size()) != d * d)
				throw ConfigError(fmt::format("matrix needs {} entries", d * d));
			Operator<double> R(d, d);
			Operator<std::complex<double>> C(d, d);
			for (int k = 0; k < d * d; ++k)
			{
				const auto &v = m[k];
				std::complex<double> z = v.is_array() ? std::complex<double>(v.at(0).get<double>(), v.at(1).get<double>())
				                                      : std::complex<double>(v.get<double>(), 0.0);
				if (!p.complex && z.imag() != 0)
					throw ConfigError("real problem has a complex matrix entry");
				R(k / d, k % d) = z.real();
				C(k / d, k % d) = z;
			}
			p.real_ops.M.push_back(R);
			p.complex_ops.M.push_back(C);
		}
		if (j.contains("measures"))
		{
			for (const auto &m : j.at("measures"))
				p.measures.push_back(RadialMeasure::from_json(m));
		}
		else
			p.measures.assign(std::max(0, p.graph.num_vertices),
			                  RadialMeasure::from_json(j.value("measure", nlohmann::json{{"kind", "gamma"}, {"k", 1}})));
		p.options.max_total = j.value("max_total", p.options.max_total);
		p.options.guard = j.value("guard", p.options.guard);
	}
	catch (const nlohmann::json::exception &e)
	{
		throw ConfigError(std::string("malformed loop expansion problem: ") + e.what());
	}
	p.graph.validate();
	if (p.complex)
		p.complex_ops.validate(p.graph);
	else
		p.real_ops.validate(p.graph);
	if (int(p.measures.size()) != p.graph.num_vertices)
		throw ConfigError("one radial measure per vertex is required");
	return p;
}

} // namespace villain
