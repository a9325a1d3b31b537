#include "villain/gauge_fix.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "villain/errors.hpp"
#include "villain/parallel.hpp"

namespace villain {

namespace {

constexpr double pi = std::numbers::pi;

// Cumulative bond angles along every horizontal and vertical line, so the
// path angle between two points on a line is one difference.
class LineAngles
{
public:
	explicit LineAngles(const GaugeField &g) : n_(g.lattice().side()), h_((n_ + 1) * (n_ + 1)), v_((n_ + 1) * (n_ + 1))
	{
		const Lattice &lat = g.lattice();
		for (int row = 0; row <= n_; ++row)
			for (int k = 0; k < n_; ++k)
			{
				h_[row * (n_ + 1) + k + 1] = h_[row * (n_ + 1) + k] + g.angle(lat.bond_index({k, row}, 1));
				v_[row * (n_ + 1) + k + 1] = v_[row * (n_ + 1) + k] + g.angle(lat.bond_index({row, k}, 2));
			}
	}

	// Signed angle sum of the straight path from a to b.
	double angle(Node a, Node b) const
	{
		if (a.k2 == b.k2)
			return h_[a.k2 * (n_ + 1) + b.k1] - h_[a.k2 * (n_ + 1) + a.k1];
		return v_[a.k1 * (n_ + 1) + b.k2] - v_[a.k1 * (n_ + 1) + a.k2];
	}

private:
	int n_;
	std::vector<double> h_, v_;
};

void check_level(const Lattice &lat, int m)
{
	if (m < 1 || m > lat.N())
		throw DomainError(fmt::format("level {} is outside 1..{}", m, lat.N()));
}

double max_abs_log(const GaugeField &g)
{
	double mx = 0;
	for (double v : g.bond_logs())
		mx = std::max(mx, std::abs(v));
	return mx;
}

} // namespace

PlaquetteSums::PlaquetteSums(const GaugeField &g) : n_(g.lattice().side()), s_((n_ + 1) * (n_ + 1), 0.0)
{
	const Lattice &lat = g.lattice();
	for (int j = 0; j < n_; ++j)
		for (int i = 0; i < n_; ++i)
			s_[(i + 1) + (n_ + 1) * (j + 1)] = g.plaquette_log(lat.plaquette_index(i, j)) + s_[i + (n_ + 1) * (j + 1)] +
			                                   s_[(i + 1) + (n_ + 1) * j] - s_[i + (n_ + 1) * j];
}

double PlaquetteSums::sum(const Rect &r) const
{
	if (r.x0 < 0 || r.y0 < 0 || r.w < 0 || r.h < 0 || r.x0 + r.w > n_ || r.y0 + r.h > n_)
		throw DomainError("rectangle does not lie in the lattice");
	auto at = [&](int i, int j) { return s_[i + (n_ + 1) * j]; };
	return at(r.x0 + r.w, r.y0 + r.h) - at(r.x0, r.y0 + r.h) - at(r.x0 + r.w, r.y0) + at(r.x0, r.y0);
}

FlatnessReport flatness(const GaugeField &g, double alpha)
{
	if (!(alpha >= 0) || !std::isfinite(alpha))
		throw DomainError(fmt::format("flatness exponent {} must be >= 0", alpha));
	const Lattice &lat = g.lattice();
	const int n = lat.side();
	PlaquetteSums ps(g);
	std::vector<double> inv(std::size_t(n) * n + 1);
	for (std::size_t k = 1; k < inv.size(); ++k)
		inv[k] = std::pow(double(k) * lat.spacing() * lat.spacing(), -alpha / 2);
	FlatnessReport rep{alpha, -1, {}};
	for (int x0 = 0; x0 < n; ++x0)
		for (int y0 = 0; y0 < n; ++y0)
			for (int w = 1; x0 + w <= n; ++w)
				for (int h = 1; y0 + h <= n; ++h)
				{
					Rect r{x0, y0, w, h};
					double v = std::abs(ps.sum(r)) * inv[std::size_t(w) * h];
					if (v > rep.value)
					{
						rep.value = v;
						rep.argmax = r;
					}
				}
	return rep;
}

GaugeField coarse_restrict(const GaugeField &g, int m)
{
	const Lattice &fine = g.lattice();
	check_level(fine, m);
	if (m == fine.N())
		return g;
	Lattice coarse(m);
	const int s = 1 << (fine.N() - m);
	LineAngles la(g);
	std::vector<double> theta(coarse.num_bonds());
	for (int b = 0; b < coarse.num_bonds(); ++b)
	{
		Bond cb = coarse.bond(b);
		Node a{cb.x.k1 * s, cb.x.k2 * s};
		Node e = a;
		(cb.dir == 1 ? e.k1 : e.k2) += s;
		theta[b] = la.angle(a, e);
	}
	return GaugeField(coarse, std::move(theta));
}

double thin_rectangle_sup(const GaugeField &g, double alpha)
{
	const Lattice &lat = g.lattice();
	const int n = lat.side();
	PlaquetteSums ps(g);
	double best = 0;
	for (int row = 0; row < n; ++row)
		for (int x0 = 0; x0 < n; ++x0)
			for (int k = 1; x0 + k <= n; ++k)
			{
				const double scale = std::pow(double(k) * lat.spacing() * lat.spacing(), -alpha / 2);
				best = std::max(best, std::abs(wrap_angle(ps.sum({x0, row, k, 1}))) * scale);
				best = std::max(best, std::abs(wrap_angle(ps.sum({row, x0, 1, k}))) * scale);
			}
	return best;
}

GaugeTransform axial_fix(const GaugeField &g) { return to_axial(g); }

LandauResult landau_extend(const GaugeField &g, const GaugeTransform &u_coarse, int m, const LandauOptions &opt)
{
	const Lattice &lat = g.lattice();
	check_level(lat, m);
	const int N = lat.N();
	const int cs = 1 << m;
	if (int(u_coarse.angle.size()) != (cs + 1) * (cs + 1))
		throw DomainError("coarse transform does not match the level-m lattice");

	LandauResult res;
	std::vector<double> &u = res.u.angle;
	u.assign(lat.num_nodes(), 0.0);
	{
		const int s = 1 << (N - m);
		for (int j = 0; j <= cs; ++j)
			for (int i = 0; i <= cs; ++i)
				u[lat.node_index({i * s, j * s})] = u_coarse.angle[i + (cs + 1) * j];
	}

	LineAngles la(g);
	PlaquetteSums ps(g);
	auto uat = [&](Node x) { return u[lat.node_index(x)]; };
	auto bond_log = [&](Node a, Node b) { return wrap_angle(uat(a) + la.angle(a, b) - uat(b)); };

	struct CentreOut
	{
		bool small = true;
		double beta_residual = 0;
		double alpha_residual = 0;
		std::array<double, 4> beta{};
	};

	for (int n = m + 1; n <= N; ++n)
	{
		const int s = 1 << (N - n);
		const int M = 1 << n;

		std::vector<Node> mids, centres;
		for (int J = 0; J <= M; ++J)
			for (int I = 0; I <= M; ++I)
			{
				if ((I % 2) != (J % 2))
					mids.push_back({I * s, J * s});
				else if (I % 2 == 1)
					centres.push_back({I * s, J * s});
			}

		// midpoints split the coarse log evenly
		parallel_for(mids.size(), opt.threads, [&](std::size_t k) {
			Node x = mids[k];
			bool horizontal = (x.k1 / s) % 2 == 1;
			Node a = x, b = x;
			(horizontal ? a.k1 : a.k2) -= s;
			(horizontal ? b.k1 : b.k2) += s;
			double L = bond_log(a, b);
			u[lat.node_index(x)] = wrap_bond_angle(uat(a) + la.angle(a, x) - L / 2);
		});

		std::vector<CentreOut> out(centres.size());
		parallel_for(centres.size(), opt.threads, [&](std::size_t k) {
			Node x = centres[k];
			const Node y[4] = {{x.k1 + s, x.k2}, {x.k1, x.k2 + s}, {x.k1 - s, x.k2}, {x.k1, x.k2 - s}};
			const Node c22{x.k1 + s, x.k2 + s}, c02{x.k1 - s, x.k2 + s}, c00{x.k1 - s, x.k2 - s},
			    c20{x.k1 + s, x.k2 - s};
			// eight half bonds around x, counter-clockwise from the right midpoint
			const double b[8] = {bond_log(y[0], c22), bond_log(c22, y[1]), bond_log(y[1], c02), bond_log(c02, y[2]),
			                     bond_log(y[2], c00), bond_log(c00, y[3]), bond_log(y[3], c20), bond_log(c20, y[0])};
			// plaquettes top-right, top-left, bottom-left, bottom-right
			const Rect p[4] = {{x.k1, x.k2, s, s}, {x.k1 - s, x.k2, s, s}, {x.k1 - s, x.k2 - s, s, s}, {x.k1, x.k2 - s, s, s}};
			CentreOut &o = out[k];
			double sum = 0;
			for (int i = 0; i < 4; ++i)
			{
				o.beta[i] = wrap_angle(ps.sum(p[i])) - b[2 * i] - b[2 * i + 1];
				sum += o.beta[i];
			}
			o.beta_residual = std::abs(wrap_angle(sum));
			o.small = std::abs(sum) <= smallness_tolerance;
			if (!o.small)
			{
				u[lat.node_index(x)] = 0;
				return;
			}
			auto alpha = landau_alphas(o.beta);
			u[lat.node_index(x)] = wrap_bond_angle(uat(y[0]) + alpha[0] - la.angle(x, y[0]));
			for (int i = 0; i < 4; ++i)
				o.alpha_residual = std::max(o.alpha_residual, std::abs(wrap_angle(bond_log(x, y[i]) - alpha[i])));
		});

		LandauScale sc;
		sc.n = n;
		sc.centres = int(centres.size());
		for (const auto &o : out)
		{
			sc.violations += !o.small;
			sc.beta_sum_residual = std::max(sc.beta_sum_residual, o.beta_residual);
			sc.alpha_residual = std::max(sc.alpha_residual, o.alpha_residual);
			if (opt.record_betas && o.small)
				res.betas.push_back(o.beta);
		}
		res.violations += sc.violations;
		res.scales.push_back(sc);
	}

	// bond sizes at every level once u is complete
	res.scales.insert(res.scales.begin(), LandauScale{m, 0, 0, 0, 0, 0});
	for (auto &sc : res.scales)
	{
		const int s = 1 << (N - sc.n);
		const int M = 1 << sc.n;
		double mx = 0;
		for (int J = 0; J <= M; ++J)
			for (int I = 0; I < M; ++I)
			{
				mx = std::max(mx, std::abs(bond_log({I * s, J * s}, {(I + 1) * s, J * s})));
				mx = std::max(mx, std::abs(bond_log({J * s, I * s}, {J * s, (I + 1) * s})));
			}
		sc.max_bond_log = mx;
	}
	return res;
}

int select_scale(double flat, double alpha)
{
	if (!(alpha > 0))
		throw DomainError("scale selection needs alpha > 0");
	if (flat <= 0)
		return 4;
	const double L = 2 / alpha * std::log2(8 / pi * flat);
	if (L < 4)
		return 4;
	if (L > 1e6)
		return 1000000;
	int m = int(std::floor(L)) + 1;
	// settle rounding near integer thresholds with the direct comparison
	while (m > 4 && std::exp2(m - 1) > std::pow(8 / pi * flat, 2 / alpha))
		--m;
	while (!(std::exp2(m) > std::pow(8 / pi * flat, 2 / alpha)))
		++m;
	return m;
}

namespace {

std::vector<NormCheck> norm_checks(const GaugeField &g, const GaugeField &fixed, int m, const GaugeFixOptions &opt)
{
	std::vector<NormCheck> out;
	const OneForm A = log_oneform(fixed);
	NormOptions nopt;
	nopt.threads = opt.threads;
	const double geo = 1 / (1 - std::exp2(-opt.kappa));
	for (double beta : opt.betas)
	{
		NormCheck c;
		c.beta = beta;
		c.kappa = opt.kappa;
		c.norm = norm_full(A, beta, nopt);
		c.flat_beta_kappa = flatness(g, beta + opt.kappa).value;
		c.trivial_bound = trivial_norm_bound(g.lattice().N(), beta);
		if (m > 0)
		{
			c.landau_bound = landau_c * std::exp2(m + 1) + 4 * c.flat_beta_kappa * std::exp2(-(m + 1) * opt.kappa) * geo;
			c.theorem_scale = std::exp2(m) + std::exp2(-m * opt.kappa) * c.flat_beta_kappa * geo;
		}
		out.push_back(c);
	}
	return out;
}

GaugeFixResult run_pipeline(const GaugeField &g, int m, const FlatnessReport &flat, const GaugeFixOptions &opt)
{
	const Lattice &lat = g.lattice();
	check_level(lat, m);
	GaugeFixResult res{GaugeTransform::identity(lat), g, {}, {}};
	GaugeFixReport &rep = res.report;
	rep.N = lat.N();
	rep.alpha = opt.alpha;
	rep.flat = flat;
	rep.m = m;

	GaugeField gm = coarse_restrict(g, m);
	GaugeTransform um = axial_fix(gm);
	rep.thin_sup = thin_rectangle_sup(gm, opt.alpha);
	rep.axial_max = max_abs_log(apply_gauge(gm, um));
	rep.axial_bound = rep.thin_sup * std::exp2(-opt.alpha * m / 2);

	HypothesisCheck &h = rep.hypothesis;
	h.c = landau_c;
	h.simple = flat.value * std::exp2(-(m + 1) * opt.alpha / 2);
	h.flat_term = flat.value * std::exp2(-(m + 1) * opt.alpha);
	h.bond_term = rep.axial_max / 2;
	h.holds = h.simple < pi && h.flat_term < h.c && h.bond_term < h.c;

	LandauOptions lopt;
	lopt.threads = opt.threads;
	lopt.record_betas = opt.record_betas;
	LandauResult land = landau_extend(g, um, m, lopt);
	rep.scales = land.scales;
	rep.violations = land.violations;
	res.betas = std::move(land.betas);
	res.u = std::move(land.u);
	res.fixed = apply_gauge(g, res.u);
	rep.norms = norm_checks(g, res.fixed, m, opt);
	return res;
}

} // namespace

GaugeFixResult gauge_fix(const GaugeField &g, const GaugeFixOptions &opt)
{
	const Lattice &lat = g.lattice();
	FlatnessReport flat = flatness(g, opt.alpha);
	const int m = select_scale(flat.value, opt.alpha);
	if (m <= lat.N())
	{
		GaugeFixResult res = run_pipeline(g, m, flat, opt);
		res.report.m_rule = m;
		return res;
	}
	GaugeFixResult res{GaugeTransform::identity(lat), g, {}, {}};
	GaugeFixReport &rep = res.report;
	rep.N = lat.N();
	rep.alpha = opt.alpha;
	rep.flat = flat;
	rep.m_rule = m;
	rep.fallback = true;
	rep.norms = norm_checks(g, g, 0, opt);
	return res;
}

GaugeFixResult gauge_fix_at(const GaugeField &g, int m, const GaugeFixOptions &opt)
{
	FlatnessReport flat = flatness(g, opt.alpha);
	GaugeFixResult res = run_pipeline(g, m, flat, opt);
	res.report.m_rule = select_scale(flat.value, opt.alpha);
	return res;
}

nlohmann::json report_json(const GaugeFixReport &r)
{
	nlohmann::json j;
	j["N"] = r.N;
	j["alpha"] = r.alpha;
	j["flatness"] = {{"value", r.flat.value},
	                 {"argmax", {{"x0", r.flat.argmax.x0}, {"y0", r.flat.argmax.y0}, {"w", r.flat.argmax.w}, {"h", r.flat.argmax.h}}}};
	j["m_rule"] = r.m_rule;
	j["m"] = r.m;
	j["fallback"] = r.fallback;
	if (!r.fallback)
	{
		j["thin_sup"] = r.thin_sup;
		j["axial_max"] = r.axial_max;
		j["axial_bound"] = r.axial_bound;
		j["hypothesis"] = {{"c", r.hypothesis.c},
		                   {"simple", r.hypothesis.simple},
		                   {"flat_term", r.hypothesis.flat_term},
		                   {"bond_term", r.hypothesis.bond_term},
		                   {"holds", r.hypothesis.holds}};
		j["violations"] = r.violations;
		nlohmann::json sc = nlohmann::json::array();
		for (const auto &s : r.scales)
			sc.push_back({{"n", s.n},
			              {"centres", s.centres},
			              {"violations", s.violations},
			              {"max_bond_log", s.max_bond_log},
			              {"beta_sum_residual", s.beta_sum_residual},
			              {"alpha_residual", s.alpha_residual}});
		j["scales"] = sc;
	}
	nlohmann::json ns = nlohmann::json::array();
	for (const auto &c : r.norms)
	{
		nlohmann::json e = norm_json(c.norm, c.beta);
		e["kappa"] = c.kappa;
		e["flatness_beta_kappa"] = c.flat_beta_kappa;
		e["trivial_bound"] = c.trivial_bound;
		if (!r.fallback)
		{
			e["landau_bound"] = c.landau_bound;
			e["theorem_scale"] = c.theorem_scale;
		}
		ns.push_back(e);
	}
	j["norms"] = ns;
	return j;
}

} // namespace villain
