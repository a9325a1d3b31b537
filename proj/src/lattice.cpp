#include "villain/lattice.hpp"

#include <bit>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "villain/errors.hpp"

namespace villain {

Lattice::Lattice(int N) : N_(N)
{
	if (N < 1 || N > max_lattice_level)
		throw ConfigError(fmt::format("lattice level N={} outside [1, {}]", N, max_lattice_level));
	n_ = 1 << N;
	h_ = std::ldexp(1.0, -N);
}

int Lattice::bond_index(Node x, int dir) const
{
	if (dir == 1)
	{
		if (x.k1 < 0 || x.k1 >= n_ || x.k2 < 0 || x.k2 > n_)
			throw DomainError("horizontal bond outside the lattice");
		return x.k1 + n_ * x.k2;
	}
	if (dir == 2)
	{
		if (x.k1 < 0 || x.k1 > n_ || x.k2 < 0 || x.k2 >= n_)
			throw DomainError("vertical bond outside the lattice");
		return num_horizontal() + x.k1 + (n_ + 1) * x.k2;
	}
	throw DomainError(fmt::format("bond direction {} is not 1 or 2", dir));
}

Bond Lattice::bond(int idx) const
{
	if (idx < num_horizontal())
		return {{idx % n_, idx / n_}, 1};
	idx -= num_horizontal();
	return {{idx % (n_ + 1), idx / (n_ + 1)}, 2};
}

Node Lattice::bond_end(int idx) const
{
	Bond b = bond(idx);
	return b.dir == 1 ? Node{b.x.k1 + 1, b.x.k2} : Node{b.x.k1, b.x.k2 + 1};
}

Step Lattice::step(Node a, Node b) const
{
	int d1 = b.k1 - a.k1, d2 = b.k2 - a.k2;
	if (d2 == 0 && d1 == 1)
		return {bond_index(a, 1), 1};
	if (d2 == 0 && d1 == -1)
		return {bond_index(b, 1), -1};
	if (d1 == 0 && d2 == 1)
		return {bond_index(a, 2), 1};
	if (d1 == 0 && d2 == -1)
		return {bond_index(b, 2), -1};
	throw DomainError(fmt::format("({},{}) and ({},{}) are not nearest neighbours", a.k1, a.k2, b.k1, b.k2));
}

std::array<Step, 4> Lattice::plaquette_boundary(int i, int j) const
{
	return {Step{bond_index({i, j}, 1), 1}, Step{bond_index({i + 1, j}, 2), 1},
	        Step{bond_index({i, j + 1}, 1), -1}, Step{bond_index({i, j}, 2), -1}};
}

bool Lattice::in_tree(int bond_idx) const
{
	Bond b = bond(bond_idx);
	return b.dir == 1 || b.x.k1 == 0;
}

std::vector<Node> Lattice::neighbours(Node x) const
{
	std::vector<Node> out;
	const Node cand[4] = {{x.k1 + 1, x.k2}, {x.k1, x.k2 + 1}, {x.k1 - 1, x.k2}, {x.k1, x.k2 - 1}};
	for (Node y : cand)
		if (contains(y))
			out.push_back(y);
	return out;
}

double segment_length(const Lattice &lat, const Segment &s) { return s.len * lat.spacing(); }

bool parallel(const Segment &a, const Segment &b)
{
	if (a.dir != b.dir || a.len != b.len)
		return false;
	return a.dir == 1 ? a.x.k1 == b.x.k1 : a.x.k2 == b.x.k2;
}

int transverse_offset(const Segment &a, const Segment &b)
{
	if (!parallel(a, b))
		throw DomainError("segments are not parallel");
	return a.dir == 1 ? std::abs(a.x.k2 - b.x.k2) : std::abs(a.x.k1 - b.x.k1);
}

double rho(const Lattice &lat, const Segment &a, const Segment &b)
{
	int d = transverse_offset(a, b);
	return std::sqrt(double(a.len) * d) * lat.spacing();
}

std::vector<Segment> all_segments(const Lattice &lat)
{
	std::vector<Segment> out;
	for_each_segment(lat, [&](const Segment &s) { out.push_back(s); });
	return out;
}

std::vector<Step> segment_steps(const Lattice &lat, const Segment &s)
{
	std::vector<Step> out;
	out.reserve(s.len);
	Node x = s.x;
	for (int i = 0; i < s.len; ++i)
	{
		out.push_back({lat.bond_index(x, s.dir), 1});
		(s.dir == 1 ? x.k1 : x.k2) += 1;
	}
	return out;
}

std::pair<int, int> dyadic_anchor(int a, int b, int N)
{
	if (a >= b || a < 0 || b > (1 << N))
		throw DomainError(fmt::format("interval [{}, {}] is not a proper interval at level {}", a, b, N));
	for (int s = 0; s <= N; ++s)
	{
		const int step = 1 << (N - s);
		int first = ((a + step - 1) / step) * step;
		if (first > b)
			continue;
		if (first + step <= b)
			throw DomainError(fmt::format("interval [{}, {}] has two anchor candidates at scale {}", a, b, s));
		return {first, s};
	}
	throw DomainError("no dyadic anchor found");
}

std::vector<std::pair<int, int>> dyadic_intervals(int a, int b, int N)
{
	auto [z, s] = dyadic_anchor(a, b, N);
	std::vector<std::pair<int, int>> left, out;
	auto largest_aligned = [](int h, int room) {
		int p = int(std::bit_floor(unsigned(room)));
		while (h % p != 0)
			p >>= 1;
		return p;
	};
	for (int h = z; h > a;)
	{
		int p = largest_aligned(h, h - a);
		left.push_back({h - p, h});
		h -= p;
	}
	out.assign(left.rbegin(), left.rend());
	for (int h = z; h < b;)
	{
		int p = largest_aligned(h, b - h);
		out.push_back({h, h + p});
		h += p;
	}
	return out;
}

std::vector<ThinRect> decompose_rectangle(const Lattice &lat, const Rect &r)
{
	const int n = lat.side();
	if (r.w <= 0 || r.h <= 0 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > n || r.y0 + r.h > n)
		throw DomainError("rectangle is empty or leaves the unit square");
	auto side = [&](int a, int len) {
		std::vector<std::pair<int, int>> pieces;
		auto add = [&](int lo, int hi) {
			auto part = dyadic_intervals(lo, hi, lat.N());
			pieces.insert(pieces.end(), part.begin(), part.end());
		};
		if (2 * len > n)
		{
			add(a, n / 2);
			add(n / 2, a + len);
		}
		else
			add(a, a + len);
		return pieces;
	};
	auto xs = side(r.x0, r.w);
	auto ys = side(r.y0, r.h);
	std::vector<ThinRect> out;
	out.reserve(xs.size() * ys.size());
	for (auto [ya, yb] : ys)
		for (auto [xa, xb] : xs)
		{
			Rect piece{xa, ya, xb - xa, yb - ya};
			int shortest = std::min(piece.w, piece.h);
			int scale = lat.N() - std::countr_zero(unsigned(shortest));
			out.push_back({piece, scale});
		}
	return out;
}

double thin_constant(double alpha)
{
	if (!(alpha > 0))
		throw ConfigError("thin-rectangle constant needs alpha > 0");
	double q = std::exp2(-alpha);
	return 4.0 / ((1 - q) * (1 - q));
}

bool is_thin(const Lattice &lat, const ThinRect &t)
{
	if (t.scale < 1 || t.scale > lat.N())
		return false;
	const int unit = 1 << (lat.N() - t.scale);
	const Rect &r = t.r;
	if (r.x0 % unit || r.y0 % unit || r.w % unit || r.h % unit)
		return false;
	if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > lat.side() || r.y0 + r.h > lat.side())
		return false;
	return std::min(r.w, r.h) == unit && std::max(r.w, r.h) >= unit;
}

nlohmann::json lattice_json(const Lattice &lat)
{
	nlohmann::json j;
	j["N"] = lat.N();
	j["side"] = lat.side();
	j["spacing"] = lat.spacing();
	j["num_nodes"] = lat.num_nodes();
	j["num_interior"] = lat.num_interior();
	j["num_bonds"] = lat.num_bonds();
	j["num_plaquettes"] = lat.num_plaquettes();
	auto &bonds = j["bonds"] = nlohmann::json::array();
	for (int b = 0; b < lat.num_bonds(); ++b)
	{
		Bond bd = lat.bond(b);
		bonds.push_back({{"index", b}, {"x", {bd.x.k1, bd.x.k2}}, {"dir", bd.dir}, {"tree", lat.in_tree(b)}});
	}
	auto &plaq = j["plaquettes"] = nlohmann::json::array();
	for (int p = 0; p < lat.num_plaquettes(); ++p)
	{
		Node c = lat.plaquette_corner(p);
		nlohmann::json steps = nlohmann::json::array();
		for (Step s : lat.plaquette_boundary(c.k1, c.k2))
			steps.push_back({s.bond, s.sign});
		plaq.push_back({{"index", p}, {"corner", {c.k1, c.k2}}, {"boundary", steps}});
	}
	return j;
}

} // namespace villain
