#include "villain/norms.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "villain/errors.hpp"
#include "villain/parallel.hpp"
#include "villain/rng.hpp"

namespace villain {

namespace {

// Bond at position pos along line `row` of direction dir.
int line_bond(int n, int dir, int row, int pos)
{
	return dir == 1 ? pos + n * row : n * (n + 1) + row + (n + 1) * pos;
}

int seg_row(const Segment &l) { return l.dir == 1 ? l.x.k2 : l.x.k1; }
int seg_base(const Segment &l) { return l.dir == 1 ? l.x.k1 : l.x.k2; }

Segment make_segment(int dir, int row, int base, int len)
{
	return {dir == 1 ? Node{base, row} : Node{row, base}, dir, len};
}

void check_segment(const Lattice &lat, const Segment &l)
{
	const int n = lat.side();
	if ((l.dir != 1 && l.dir != 2) || l.len < 0 || seg_row(l) < 0 || seg_row(l) > n || seg_base(l) < 0 ||
	    seg_base(l) + l.len > n)
		throw DomainError("segment does not lie in the lattice");
}

// Running maximum with a lexicographic tie-break on the enumeration key, so
// the reported maximiser is the first one in (direction, row, base, length)
// order whatever the traversal or thread partition.
struct Best
{
	double value = -1;
	std::array<int, 5> key{};

	void offer(double v, const std::array<int, 5> &k)
	{
		if (v > value || (v == value && k < key))
		{
			value = v;
			key = k;
		}
	}
};

void check_alpha(double alpha)
{
	if (!(alpha >= 0 && alpha <= 1))
		throw DomainError(fmt::format("alpha = {} is outside [0, 1]", alpha));
}

} // namespace

OneForm::OneForm(const Lattice &lat, std::vector<double> values) : lat_(lat), values_(std::move(values))
{
	if (int(values_.size()) != lat_.num_bonds())
		throw DomainError(fmt::format("one-form needs {} bond values, got {}", lat_.num_bonds(), values_.size()));
	for (double v : values_)
		if (!std::isfinite(v))
			throw DomainError("one-form value is not finite");
	const int n = lat_.side();
	tabulated_ = lat_.N() <= max_tabulated_level;
	table_.assign(2 * std::size_t(n + 1) * (tabulated_ ? std::size_t(n) * n : std::size_t(n + 1)), 0.0);
	for (int dir = 1; dir <= 2; ++dir)
		for (int row = 0; row <= n; ++row)
		{
			double *t = table_.data() + line_offset(dir, row);
			if (tabulated_)
			{
				for (int base = 0; base < n; ++base)
				{
					double s = 0;
					for (int len = 1; base + len <= n; ++len)
					{
						s += values_[line_bond(n, dir, row, base + len - 1)];
						t[base * n + len - 1] = s;
					}
				}
			}
			else
			{
				t[0] = 0;
				for (int pos = 0; pos < n; ++pos)
					t[pos + 1] = t[pos] + values_[line_bond(n, dir, row, pos)];
			}
		}
}

std::size_t OneForm::line_offset(int dir, int row) const
{
	const std::size_t n = lat_.side();
	const std::size_t per_line = tabulated_ ? n * n : n + 1;
	return (std::size_t(dir - 1) * (n + 1) + std::size_t(row)) * per_line;
}

double OneForm::eval(const Segment &l) const
{
	check_segment(lat_, l);
	if (l.len == 0)
		return 0;
	const double *t = table_.data() + line_offset(l.dir, seg_row(l));
	const int base = seg_base(l);
	if (tabulated_)
		return t[base * lat_.side() + l.len - 1];
	return t[base + l.len] - t[base];
}

OneForm log_oneform(const GaugeField &g) { return OneForm(g.lattice(), g.bond_logs()); }

double eval_segment_naive(const OneForm &A, const Segment &l)
{
	check_segment(A.lattice(), l);
	double s = 0;
	for (Step st : segment_steps(A.lattice(), l))
		s += A[st.bond];
	return s;
}

OneForm operator+(const OneForm &a, const OneForm &b)
{
	if (a.lattice().N() != b.lattice().N())
		throw DomainError("one-forms live on different lattices");
	std::vector<double> v(a.values());
	for (std::size_t i = 0; i < v.size(); ++i)
		v[i] += b.values()[i];
	return OneForm(a.lattice(), std::move(v));
}

OneForm operator*(double c, const OneForm &a)
{
	std::vector<double> v(a.values());
	for (double &x : v)
		x *= c;
	return OneForm(a.lattice(), std::move(v));
}

NormValue norm_gr(const OneForm &A, double alpha, const NormOptions &opt)
{
	check_alpha(alpha);
	const Lattice &lat = A.lattice();
	const int n = lat.side();
	std::vector<double> pw(n + 1);
	for (int len = 1; len <= n; ++len)
		pw[len] = std::pow(len * lat.spacing(), alpha);

	std::vector<Best> best(2 * (n + 1));
	parallel_for(best.size(), opt.threads, [&](std::size_t task) {
		const int dir = int(task) / (n + 1) + 1, row = int(task) % (n + 1);
		Best b;
		for (int base = 0; base < n; ++base)
		{
			double s = 0;
			for (int len = 1; base + len <= n; ++len)
			{
				s += A[line_bond(n, dir, row, base + len - 1)];
				b.offer(std::abs(s) / pw[len], {dir, row, base, len, 0});
			}
		}
		best[task] = b;
	});
	Best total;
	for (const Best &b : best)
		total.offer(b.value, b.key);
	NormValue out;
	out.value = total.value;
	out.argmax = make_segment(total.key[0], total.key[1], total.key[2], total.key[3]);
	out.evaluated = std::uint64_t(n) * (n + 1) * (n + 1);
	return out;
}

NormValue seminorm_rho(const OneForm &A, double alpha, const NormOptions &opt)
{
	check_alpha(alpha);
	const Lattice &lat = A.lattice();
	const int n = lat.side();
	const double h2 = lat.spacing() * lat.spacing();
	NormValue out;

	if (opt.sampled)
	{
		// Random parallel pairs; the maximum is only a lower bound.
		Philox rng(opt.seed, 0x20000000u, 0);
		auto below = [&](int m) { return int(rng() % std::uint64_t(m)); };
		Best b;
		for (std::uint64_t k = 0; k < opt.sample_pairs; ++k)
		{
			int dir = below(2) + 1;
			int base = below(n);
			int len = below(n - base) + 1;
			int r = below(n + 1), r2 = below(n);
			if (r2 >= r)
				++r2;
			else
				std::swap(r, r2);
			double d = A.eval(make_segment(dir, r, base, len)) - A.eval(make_segment(dir, r2, base, len));
			b.offer(std::abs(d) / std::pow(double(len) * (r2 - r) * h2, alpha / 2), {dir, r, base, len, r2});
		}
		out.value = b.value;
		out.argmax = make_segment(b.key[0], b.key[1], b.key[2], b.key[3]);
		out.argmax_pair = make_segment(b.key[0], b.key[4], b.key[2], b.key[3]);
		out.exact = false;
		out.evaluated = opt.sample_pairs;
		return out;
	}

	if (lat.N() > max_exhaustive_level)
		throw ResourceError(fmt::format("exhaustive rho seminorm at level {} exceeds the pair budget (level <= {}); "
		                                "use the sampled mode",
		                                lat.N(), max_exhaustive_level));

	std::vector<double> pw(std::size_t(n) * n + 1);
	for (std::size_t k = 1; k < pw.size(); ++k)
		pw[k] = std::pow(double(k) * h2, alpha / 2);

	std::vector<Best> best(2 * n);
	parallel_for(best.size(), opt.threads, [&](std::size_t task) {
		const int dir = int(task) / n + 1, base = int(task) % n;
		std::vector<double> cur(n + 1, 0.0);
		Best b;
		for (int len = 1; base + len <= n; ++len)
		{
			for (int row = 0; row <= n; ++row)
				cur[row] += A[line_bond(n, dir, row, base + len - 1)];
			for (int r = 0; r < n; ++r)
				for (int r2 = r + 1; r2 <= n; ++r2)
					b.offer(std::abs(cur[r] - cur[r2]) / pw[std::size_t(len) * (r2 - r)], {dir, r, base, len, r2});
		}
		best[task] = b;
	});
	Best total;
	for (const Best &b : best)
		total.offer(b.value, b.key);
	out.value = total.value;
	out.argmax = make_segment(total.key[0], total.key[1], total.key[2], total.key[3]);
	out.argmax_pair = make_segment(total.key[0], total.key[4], total.key[2], total.key[3]);
	out.evaluated = std::uint64_t(n) * (n + 1) / 2 * std::uint64_t(n) * (n + 1);
	return out;
}

FullNorm norm_full(const OneForm &A, double alpha, const NormOptions &opt)
{
	FullNorm f;
	f.gr = norm_gr(A, alpha, opt);
	f.rho = seminorm_rho(A, alpha, opt);
	f.value = f.gr.value + f.rho.value;
	return f;
}

double trivial_norm_bound(int N, double beta) { return 2 * std::numbers::pi * std::exp2(N * (1 + beta / 2)); }

nlohmann::json segment_json(const Segment &s) { return {{"x", {s.x.k1, s.x.k2}}, {"dir", s.dir}, {"len", s.len}}; }

nlohmann::json norm_json(const NormValue &v)
{
	nlohmann::json j{{"value", v.value}, {"exact", v.exact}, {"evaluated", v.evaluated}};
	if (v.argmax)
		j["argmax"] = segment_json(*v.argmax);
	if (v.argmax_pair)
		j["argmax_pair"] = segment_json(*v.argmax_pair);
	return j;
}

nlohmann::json norm_json(const FullNorm &v, double alpha)
{
	return {{"alpha", alpha},
	        {"norm_gr", v.gr.value},
	        {"seminorm_rho", v.rho.value},
	        {"norm_full", v.value},
	        {"gr", norm_json(v.gr)},
	        {"rho", norm_json(v.rho)}};
}

} // namespace villain
