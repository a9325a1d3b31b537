#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "villain/lattice.hpp"

namespace villain {

// Principal logarithm of a U(1) element, with values in [-pi, pi).
double log_u1(std::complex<double> z);

// Reduces an angle to [-pi, pi).
double wrap_angle(double theta);

// Reduces an angle to (-pi, pi], the storage convention for bond angles.
double wrap_bond_angle(double theta);

// Closed nearest-neighbour path, first node repeated at the end.
struct LatticeLoop
{
	std::vector<Node> nodes;

	std::size_t length() const { return nodes.empty() ? 0 : nodes.size() - 1; }
	std::vector<Step> steps(const Lattice &lat) const;
	void validate(const Lattice &lat) const;
};

LatticeLoop rectangle_loop(const Lattice &lat, const Rect &r);
LatticeLoop plaquette_loop(const Lattice &lat, int i, int j);

class GaugeField
{
public:
	explicit GaugeField(const Lattice &lat);
	GaugeField(const Lattice &lat, std::vector<double> theta);

	const Lattice &lattice() const { return lat_; }
	const std::vector<double> &angles() const { return theta_; }

	double angle(int bond) const { return theta_[bond]; }
	void set_angle(int bond, double theta) { theta_[bond] = wrap_bond_angle(theta); }
	std::complex<double> value(int bond) const { return std::polar(1.0, theta_[bond]); }
	std::complex<double> value(Step s) const { return std::polar(1.0, s.sign * theta_[s.bond]); }

	// log g(dp) for plaquette index p.
	double plaquette_log(int p) const;
	std::vector<double> plaquette_logs() const;

	// log g_b for every bond, in [-pi, pi).
	std::vector<double> bond_logs() const;

private:
	Lattice lat_;
	std::vector<double> theta_;
};

// u_x = exp(i angle_x) on every node.
struct GaugeTransform
{
	std::vector<double> angle;

	static GaugeTransform identity(const Lattice &lat) { return {std::vector<double>(lat.num_nodes(), 0.0)}; }
	GaugeTransform inverse() const;
};

// g^u_xy = u_x g_xy u_y^{-1}
GaugeField apply_gauge(const GaugeField &g, const GaugeTransform &u);

// Ordered product of bond values along the loop.
std::complex<double> holonomy(const GaugeField &g, const LatticeLoop &loop);

// Sum of signed angles along the steps, no reduction mod 2 pi.
double loop_angle_sum(const GaugeField &g, const std::vector<Step> &steps);

// Signed crossings of a rightward ray from each plaquette centre.
std::vector<int> winding_vector(const Lattice &lat, const LatticeLoop &loop);

// sum of squared winding numbers, in units of 2^-2N
std::int64_t omega_units(const std::vector<int> &winding);
double omega(const Lattice &lat, const std::vector<int> &winding);

// Axial-gauge field whose plaquette holonomies are exp(i X_p).
GaugeField psi(const Lattice &lat, const std::vector<double> &X);

// Gauge transform with u at the origin equal to 1 making g trivial on the tree.
GaugeTransform to_axial(const GaugeField &g);

// Covariant Laplacian on interior nodes (Dirichlet boundary), ordered by
// Lattice::interior_index.
Eigen::MatrixXcd covariant_laplacian(const GaugeField &g);

// Covariant derivative on every oriented bond: for positive bond b at
// positions 2b (x to y) and 2b+1 (y to x). phi lives on interior nodes.
Eigen::VectorXcd covariant_derivative(const GaugeField &g, const Eigen::VectorXcd &phi);

// 2^-2N sum a conj(b) for node or bond functions.
std::complex<double> lattice_inner(const Lattice &lat, const Eigen::VectorXcd &a, const Eigen::VectorXcd &b);

nlohmann::json field_to_json(const GaugeField &g);
GaugeField field_from_json(const nlohmann::json &j);
void write_field(const GaugeField &g, const std::string &path);
GaugeField read_field(const std::string &path);

nlohmann::json transform_to_json(const Lattice &lat, const GaugeTransform &u);

} // namespace villain
