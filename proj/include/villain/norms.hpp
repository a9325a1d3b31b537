#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "villain/gauge.hpp"

namespace villain {

// Real value on every positively oriented bond.
class OneForm
{
public:
	OneForm(const Lattice &lat, std::vector<double> values);
	explicit OneForm(const Lattice &lat) : OneForm(lat, std::vector<double>(lat.num_bonds(), 0.0)) {}

	const Lattice &lattice() const { return lat_; }
	const std::vector<double> &values() const { return values_; }
	double operator[](int bond) const { return values_[bond]; }

	// A(l) in O(1). Up to level 7 every segment sum is tabulated, accumulated
	// bond by bond from the base, so it matches eval_segment_naive bit for bit.
	// Above that prefix differences are used.
	double eval(const Segment &l) const;

private:
	Lattice lat_;
	std::vector<double> values_;
	std::vector<double> table_;
	bool tabulated_ = false;

	std::size_t line_offset(int dir, int row) const;
};

inline constexpr int max_tabulated_level = 7;

OneForm log_oneform(const GaugeField &g);

// Left-to-right sum over the bonds of l; 0 for an empty segment.
double eval_segment_naive(const OneForm &A, const Segment &l);

OneForm operator+(const OneForm &a, const OneForm &b);
OneForm operator*(double c, const OneForm &a);

struct NormOptions
{
	int threads = 1;
	// Above max_exhaustive_level the rho seminorm needs the sampled mode.
	bool sampled = false;
	std::uint64_t sample_pairs = 1u << 22;
	std::uint64_t seed = 1;
};

inline constexpr int max_exhaustive_level = 7;

struct NormValue
{
	double value = 0;
	std::optional<Segment> argmax;
	std::optional<Segment> argmax_pair; // second segment, rho seminorm only
	bool exact = true;                   // false: a lower bound from sampled pairs
	std::uint64_t evaluated = 0;
};

// sup over positive-length l of |A(l)| / |l|^alpha
NormValue norm_gr(const OneForm &A, double alpha, const NormOptions &opt = {});

// sup over distinct parallel l, l2 of |A(l) - A(l2)| / rho(l, l2)^alpha
NormValue seminorm_rho(const OneForm &A, double alpha, const NormOptions &opt = {});

struct FullNorm
{
	double value = 0;
	NormValue gr;
	NormValue rho;
};

FullNorm norm_full(const OneForm &A, double alpha, const NormOptions &opt = {});

// Bound on |log g|_beta valid for every gauge field: 2 pi 2^{N (1 + beta / 2)}.
double trivial_norm_bound(int N, double beta);

nlohmann::json segment_json(const Segment &s);
nlohmann::json norm_json(const NormValue &v);
nlohmann::json norm_json(const FullNorm &v, double alpha);

} // namespace villain
