#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

namespace villain {

// Integer coordinates of a point k * 2^-N in the unit square.
struct Node
{
	int k1 = 0;
	int k2 = 0;
	auto operator<=>(const Node &) const = default;
};

// Positively oriented bond from x to x + 2^-N e_dir, dir in {1, 2}.
struct Bond
{
	Node x;
	int dir = 1;
	auto operator<=>(const Bond &) const = default;
};

// Straight segment starting at x, pointing along e_dir, made of len bonds.
struct Segment
{
	Node x;
	int dir = 1;
	int len = 0;
	auto operator<=>(const Segment &) const = default;
};

// Axis-aligned rectangle [x0, x0+w] x [y0, y0+h] in lattice units.
struct Rect
{
	int x0 = 0;
	int y0 = 0;
	int w = 0;
	int h = 0;
	std::int64_t area() const { return std::int64_t(w) * h; }
	auto operator<=>(const Rect &) const = default;
};

// A rectangle whose corners lie on the scale-n sublattice and whose short side
// has length exactly 2^-n.
struct ThinRect
{
	Rect r;
	int scale = 0;
	auto operator<=>(const ThinRect &) const = default;
};

// Oriented step along a bond: sign +1 follows the bond, -1 runs against it.
struct Step
{
	int bond = 0;
	int sign = 1;
};

inline constexpr int max_lattice_level = 12;

class Lattice
{
public:
	explicit Lattice(int N);

	int N() const { return N_; }
	int side() const { return n_; }
	double spacing() const { return h_; }

	int num_nodes() const { return (n_ + 1) * (n_ + 1); }
	int num_interior() const { return (n_ - 1) * (n_ - 1); }
	int num_bonds() const { return 2 * n_ * (n_ + 1); }
	int num_horizontal() const { return n_ * (n_ + 1); }
	int num_plaquettes() const { return n_ * n_; }

	bool contains(Node x) const { return x.k1 >= 0 && x.k2 >= 0 && x.k1 <= n_ && x.k2 <= n_; }
	bool is_interior(Node x) const { return x.k1 > 0 && x.k2 > 0 && x.k1 < n_ && x.k2 < n_; }

	int node_index(Node x) const { return x.k1 + (n_ + 1) * x.k2; }
	Node node(int idx) const { return {idx % (n_ + 1), idx / (n_ + 1)}; }

	// Interior nodes are numbered row-major, k1 fastest.
	int interior_index(Node x) const { return (x.k1 - 1) + (n_ - 1) * (x.k2 - 1); }
	Node interior_node(int idx) const { return {idx % (n_ - 1) + 1, idx / (n_ - 1) + 1}; }

	// Horizontal bonds first (k1 fastest), then vertical bonds (k1 fastest).
	int bond_index(Node x, int dir) const;
	int bond_index(Bond b) const { return bond_index(b.x, b.dir); }
	Bond bond(int idx) const;
	Node bond_end(int idx) const;

	// Plaquettes are numbered row-major by their lower-left corner.
	int plaquette_index(int i, int j) const { return i + n_ * j; }
	Node plaquette_corner(int idx) const { return {idx % n_, idx / n_}; }

	// Step between two nearest neighbours. Throws DomainError otherwise.
	Step step(Node a, Node b) const;

	// Counter-clockwise boundary x, x+e1, x+e1+e2, x+e2 of plaquette (i, j).
	std::array<Step, 4> plaquette_boundary(int i, int j) const;

	// Maximal tree: all horizontal bonds and the vertical bonds on the left edge.
	bool in_tree(int bond_idx) const;

	std::vector<Node> neighbours(Node x) const;

private:
	int N_;
	int n_;
	double h_;
};

double segment_length(const Lattice &lat, const Segment &s);

// Same direction and same projection onto that direction.
bool parallel(const Segment &a, const Segment &b);

// Transverse offset between two parallel segments, in lattice units.
int transverse_offset(const Segment &a, const Segment &b);

// rho(a, b) = |a|^{1/2} d(a, b)^{1/2} for parallel segments.
double rho(const Lattice &lat, const Segment &a, const Segment &b);

// Visits every positive-length segment. Order: direction, row, base, length.
template <class F> void for_each_segment(const Lattice &lat, F &&f)
{
	const int n = lat.side();
	for (int dir = 1; dir <= 2; ++dir)
		for (int row = 0; row <= n; ++row)
			for (int base = 0; base < n; ++base)
				for (int len = 1; base + len <= n; ++len)
				{
					Node x = dir == 1 ? Node{base, row} : Node{row, base};
					f(Segment{x, dir, len});
				}
}

std::vector<Segment> all_segments(const Lattice &lat);

// Steps of a segment, in order.
std::vector<Step> segment_steps(const Lattice &lat, const Segment &s);

// Coarsest dyadic point of the integer interval [a, b] on a lattice of level N.
// Returns the point and its scale.
std::pair<int, int> dyadic_anchor(int a, int b, int N);

// Decomposes [a, b] into dyadic intervals, anchored at the coarsest point.
std::vector<std::pair<int, int>> dyadic_intervals(int a, int b, int N);

// Partition of a rectangle into thin rectangles. Sides longer than 1/2 are
// first split at 1/2.
std::vector<ThinRect> decompose_rectangle(const Lattice &lat, const Rect &r);

// sum_{m >= 0} 4 (m + 1) 2^{-alpha m}
double thin_constant(double alpha);

bool is_thin(const Lattice &lat, const ThinRect &t);

nlohmann::json lattice_json(const Lattice &lat);

} // namespace villain
