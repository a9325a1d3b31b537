#include "villain/gauge.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "villain/errors.hpp"

namespace villain {

namespace {
constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2 * std::numbers::pi;
} // namespace

double log_u1(std::complex<double> z)
{
	double a = std::arg(z);
	return a >= pi ? a - two_pi : a;
}

double wrap_angle(double theta)
{
	double r = std::remainder(theta, two_pi);
	if (r >= pi)
		r -= two_pi;
	if (r < -pi)
		r += two_pi;
	return r;
}

double wrap_bond_angle(double theta)
{
	double r = std::remainder(theta, two_pi);
	if (r > pi)
		r -= two_pi;
	if (r <= -pi)
		r += two_pi;
	return r;
}

std::vector<Step> LatticeLoop::steps(const Lattice &lat) const
{
	validate(lat);
	std::vector<Step> out;
	out.reserve(length());
	for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
		out.push_back(lat.step(nodes[i], nodes[i + 1]));
	return out;
}

void LatticeLoop::validate(const Lattice &lat) const
{
	if (nodes.size() < 2)
		throw DomainError("loop needs at least one step");
	if (nodes.front() != nodes.back())
		throw DomainError("loop is not closed");
	for (Node x : nodes)
		if (!lat.contains(x))
			throw DomainError(fmt::format("loop node ({},{}) outside the lattice", x.k1, x.k2));
	for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
		lat.step(nodes[i], nodes[i + 1]);
}

LatticeLoop rectangle_loop(const Lattice &lat, const Rect &r)
{
	if (r.w <= 0 || r.h <= 0 || r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > lat.side() || r.y0 + r.h > lat.side())
		throw DomainError("rectangle is empty or leaves the unit square");
	LatticeLoop loop;
	for (int i = 0; i < r.w; ++i)
		loop.nodes.push_back({r.x0 + i, r.y0});
	for (int j = 0; j < r.h; ++j)
		loop.nodes.push_back({r.x0 + r.w, r.y0 + j});
	for (int i = r.w; i > 0; --i)
		loop.nodes.push_back({r.x0 + i, r.y0 + r.h});
	for (int j = r.h; j > 0; --j)
		loop.nodes.push_back({r.x0, r.y0 + j});
	loop.nodes.push_back({r.x0, r.y0});
	return loop;
}

LatticeLoop plaquette_loop(const Lattice &lat, int i, int j) { return rectangle_loop(lat, {i, j, 1, 1}); }

GaugeField::GaugeField(const Lattice &lat) : lat_(lat), theta_(lat.num_bonds(), 0.0) {}

GaugeField::GaugeField(const Lattice &lat, std::vector<double> theta) : lat_(lat), theta_(std::move(theta))
{
	if (int(theta_.size()) != lat_.num_bonds())
		throw DomainError(fmt::format("gauge field has {} angles, lattice has {} bonds", theta_.size(), lat_.num_bonds()));
	for (double &t : theta_)
	{
		if (!std::isfinite(t))
			throw DomainError("gauge field angle is not finite");
		t = wrap_bond_angle(t);
	}
}

double GaugeField::plaquette_log(int p) const
{
	Node c = lat_.plaquette_corner(p);
	auto b = lat_.plaquette_boundary(c.k1, c.k2);
	double s = 0;
	for (Step st : b)
		s += st.sign * theta_[st.bond];
	return wrap_angle(s);
}

std::vector<double> GaugeField::plaquette_logs() const
{
	std::vector<double> out(lat_.num_plaquettes());
	for (int p = 0; p < lat_.num_plaquettes(); ++p)
		out[p] = plaquette_log(p);
	return out;
}

std::vector<double> GaugeField::bond_logs() const
{
	std::vector<double> out(theta_.size());
	for (std::size_t b = 0; b < theta_.size(); ++b)
		out[b] = theta_[b] == pi ? -pi : theta_[b];
	return out;
}

GaugeTransform GaugeTransform::inverse() const
{
	GaugeTransform v{angle};
	for (double &a : v.angle)
		a = wrap_bond_angle(-a);
	return v;
}

GaugeField apply_gauge(const GaugeField &g, const GaugeTransform &u)
{
	const Lattice &lat = g.lattice();
	if (int(u.angle.size()) != lat.num_nodes())
		throw DomainError("gauge transform size does not match the lattice");
	std::vector<double> theta(lat.num_bonds());
	for (int b = 0; b < lat.num_bonds(); ++b)
	{
		int x = lat.node_index(lat.bond(b).x), y = lat.node_index(lat.bond_end(b));
		theta[b] = u.angle[x] + g.angle(b) - u.angle[y];
	}
	return GaugeField(lat, std::move(theta));
}

double loop_angle_sum(const GaugeField &g, const std::vector<Step> &steps)
{
	double s = 0;
	for (Step st : steps)
		s += st.sign * g.angle(st.bond);
	return s;
}

std::complex<double> holonomy(const GaugeField &g, const LatticeLoop &loop)
{
	return std::polar(1.0, loop_angle_sum(g, loop.steps(g.lattice())));
}

std::vector<int> winding_vector(const Lattice &lat, const LatticeLoop &loop)
{
	loop.validate(lat);
	const int n = lat.side();
	// diff[j][x]: net upward vertical steps at column x in row j
	std::vector<int> diff(n * (n + 1), 0);
	for (std::size_t i = 0; i + 1 < loop.nodes.size(); ++i)
	{
		Node a = loop.nodes[i], b = loop.nodes[i + 1];
		if (a.k1 != b.k1)
			continue;
		if (b.k2 == a.k2 + 1)
			diff[a.k2 * (n + 1) + a.k1] += 1;
		else
			diff[b.k2 * (n + 1) + a.k1] -= 1;
	}
	std::vector<int> w(lat.num_plaquettes(), 0);
	for (int j = 0; j < n; ++j)
	{
		int acc = 0;
		for (int i = n - 1; i >= 0; --i)
		{
			acc += diff[j * (n + 1) + i + 1];
			w[lat.plaquette_index(i, j)] = acc;
		}
	}
	return w;
}

std::int64_t omega_units(const std::vector<int> &winding)
{
	std::int64_t s = 0;
	for (int l : winding)
		s += std::int64_t(l) * l;
	return s;
}

double omega(const Lattice &lat, const std::vector<int> &winding)
{
	if (int(winding.size()) != lat.num_plaquettes())
		throw DomainError("winding vector size does not match the lattice");
	return std::ldexp(double(omega_units(winding)), -2 * lat.N());
}

GaugeField psi(const Lattice &lat, const std::vector<double> &X)
{
	if (int(X.size()) != lat.num_plaquettes())
		throw DomainError(fmt::format("psi needs {} plaquette angles, got {}", lat.num_plaquettes(), X.size()));
	std::vector<double> theta(lat.num_bonds(), 0.0);
	const int n = lat.side();
	for (int j = 0; j < n; ++j)
	{
		double cum = 0;
		for (int i = 0; i < n; ++i)
		{
			double x = X[lat.plaquette_index(i, j)];
			if (!std::isfinite(x))
				throw DomainError("plaquette angle is not finite");
			cum += x;
			theta[lat.bond_index({i + 1, j}, 2)] = cum;
		}
	}
	return GaugeField(lat, std::move(theta));
}

GaugeTransform to_axial(const GaugeField &g)
{
	const Lattice &lat = g.lattice();
	const int n = lat.side();
	std::vector<double> u(lat.num_nodes(), 0.0);
	for (int j = 0; j < n; ++j)
		u[lat.node_index({0, j + 1})] = wrap_bond_angle(u[lat.node_index({0, j})] + g.angle(lat.bond_index({0, j}, 2)));
	for (int j = 0; j <= n; ++j)
		for (int i = 0; i < n; ++i)
			u[lat.node_index({i + 1, j})] =
			    wrap_bond_angle(u[lat.node_index({i, j})] + g.angle(lat.bond_index({i, j}, 1)));
	return {std::move(u)};
}

Eigen::MatrixXcd covariant_laplacian(const GaugeField &g)
{
	const Lattice &lat = g.lattice();
	const int m = lat.num_interior();
	const double scale = std::ldexp(1.0, 2 * lat.N());
	Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(m, m);
	for (int a = 0; a < m; ++a)
	{
		Node x = lat.interior_node(a);
		L(a, a) = -4 * scale;
		for (Node y : lat.neighbours(x))
			if (lat.is_interior(y))
				L(a, lat.interior_index(y)) += scale * g.value(lat.step(x, y));
	}
	return L;
}

Eigen::VectorXcd covariant_derivative(const GaugeField &g, const Eigen::VectorXcd &phi)
{
	const Lattice &lat = g.lattice();
	if (phi.size() != lat.num_interior())
		throw DomainError("field size does not match the interior");
	auto at = [&](Node x) -> std::complex<double> {
		return lat.is_interior(x) ? phi(lat.interior_index(x)) : std::complex<double>(0);
	};
	const double scale = std::ldexp(1.0, lat.N());
	Eigen::VectorXcd d(2 * lat.num_bonds());
	for (int b = 0; b < lat.num_bonds(); ++b)
	{
		Node x = lat.bond(b).x, y = lat.bond_end(b);
		std::complex<double> gxy = g.value(b);
		d(2 * b) = scale * (gxy * at(y) - at(x));
		d(2 * b + 1) = scale * (std::conj(gxy) * at(x) - at(y));
	}
	return d;
}

std::complex<double> lattice_inner(const Lattice &lat, const Eigen::VectorXcd &a, const Eigen::VectorXcd &b)
{
	return std::ldexp(1.0, -2 * lat.N()) * b.dot(a);
}

nlohmann::json field_to_json(const GaugeField &g)
{
	const Lattice &lat = g.lattice();
	nlohmann::json j;
	j["N"] = lat.N();
	auto &bonds = j["bonds"] = nlohmann::json::array();
	for (int b = 0; b < lat.num_bonds(); ++b)
	{
		Bond bd = lat.bond(b);
		bonds.push_back({{"x", {bd.x.k1, bd.x.k2}}, {"dir", bd.dir}, {"theta", g.angle(b)}});
	}
	return j;
}

GaugeField field_from_json(const nlohmann::json &j)
{
	try
	{
		Lattice lat(j.at("N").get<int>());
		const auto &bonds = j.at("bonds");
		if (!bonds.is_array() || int(bonds.size()) != lat.num_bonds())
			throw ConfigError(fmt::format("field JSON must list all {} bonds", lat.num_bonds()));
		std::vector<double> theta(lat.num_bonds(), 0.0);
		std::vector<char> seen(lat.num_bonds(), 0);
		for (const auto &e : bonds)
		{
			const auto &x = e.at("x");
			Node node{x.at(0).get<int>(), x.at(1).get<int>()};
			int b = lat.bond_index(node, e.at("dir").get<int>());
			double t = e.at("theta").get<double>();
			if (!std::isfinite(t) || t <= -pi || t > pi)
				throw ConfigError(fmt::format("bond angle {} outside (-pi, pi]", t));
			if (seen[b]++)
				throw ConfigError("bond listed twice in field JSON");
			theta[b] = t;
		}
		return GaugeField(lat, std::move(theta));
	}
	catch (const nlohmann::json::exception &e)
	{
		throw ConfigError(std::string("malformed field JSON: ") + e.what());
	}
	catch (const DomainError &e)
	{
		throw ConfigError(std::string("malformed field JSON: ") + e.what());
	}
}

void write_field(const GaugeField &g, const std::string &path)
{
	std::ofstream os(path);
	if (!os)
		throw ConfigError("cannot write " + path);
	os << field_to_json(g).dump(1) << '\n';
}

GaugeField read_field(const std::string &path)
{
	std::ifstream is(path);
	if (!is)
		throw ConfigError("cannot read " + path);
	nlohmann::json j;
	try
	{
		is >> j;
	}
	catch (const nlohmann::json::exception &e)
	{
		throw ConfigError(path + ": " + e.what());
	}
	return field_from_json(j);
}

nlohmann::json transform_to_json(const Lattice &lat, const GaugeTransform &u)
{
	nlohmann::json j;
	j["N"] = lat.N();
	auto &nodes = j["nodes"] = nlohmann::json::array();
	for (int x = 0; x < lat.num_nodes(); ++x)
	{
		Node nd = lat.node(x);
		nodes.push_back({{"x", {nd.k1, nd.k2}}, {"angle", u.angle[x]}});
	}
	return j;
}

} // namespace villain
