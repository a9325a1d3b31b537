#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "villain/sampler.hpp"

namespace villain {

enum class Verdict { pass, fail, informational };
std::string to_string(Verdict v);

// How a row is judged against its reference.
enum class Check
{
	equal_3se,   // |estimate - reference| <= 3 stderr
	upper_3se,   // estimate <= reference + 3 stderr
	relative,    // |estimate - reference| <= tolerance |reference|
	upper_exact, // estimate <= reference
	none
};
std::string to_string(Check c);

struct ExperimentResult
{
	std::string name;
	nlohmann::json parameters = nlohmann::json::object();
	double estimate = 0;
	double stderr_ = 0;
	std::optional<double> reference;
	Check check = Check::none;
	double tolerance = 0;
	Verdict verdict = Verdict::informational;
	std::uint64_t samples = 0;
	std::uint64_t seed = 0;
};

// Sets the verdict from the check; none gives informational.
void judge(ExperimentResult &r);

struct ExperimentReport
{
	std::string experiment;
	std::vector<ExperimentResult> rows;
	nlohmann::json info = nlohmann::json::object();

	bool passed() const;
};

// identity forces X = 0 on every draw, a zero-variance debug corpus
enum class Ensemble { pure, interacting, identity };

struct VerifyConfig
{
	int N = 2;
	Ensemble ensemble = Ensemble::pure;
	std::array<int, 4> loop_rect{0, 0, 1, 1}; // x0, y0, x1, y1 in units of 2^-loop_level
	int loop_level = 1;
	double eta = -1; // < 0 selects 1 / (4 omega)
	std::vector<double> x_grid;  // tail points in units of sqrt(omega); empty selects a default grid
	std::vector<double> q_list{2, 4};
	std::vector<int> N_list{2, 3, 4, 5};
	double alpha = 0.5;
	double beta = 0.5;
	double kappa = 0.25;
	double q = 2;
	double moment_constant = 1; // C in the (C q sqrt(omega))^q plaquette-sum bound
	std::vector<std::array<double, 4>> decorrelation_grid; // sigma_A, sigma_B, sigma_AB, eta
	int quadrature_nodes = 64;
	int samples = 100000; // pure-gauge draws
	bool compare_interacting = false;
	std::uint64_t seed = 1;
	int threads = 1;
	ChainConfig chain;
};

nlohmann::json to_json(const VerifyConfig &c);
// Missing keys keep their defaults; unknown keys are a ConfigError.
VerifyConfig verify_config_from_json(const nlohmann::json &j, VerifyConfig base = {});

// Pure-gauge closed-form check, then the one-sided interacting bound when
// the ensemble is interacting.
ExperimentReport verify_mgf(const VerifyConfig &cfg);
ExperimentReport verify_tail(const VerifyConfig &cfg);
ExperimentReport verify_plaquette_sum_moments(const VerifyConfig &cfg);
ExperimentReport verify_decorrelation(const VerifyConfig &cfg);
ExperimentReport verify_flatness_moments(const VerifyConfig &cfg);
ExperimentReport verify_uv_stability(const VerifyConfig &cfg);

struct DecorrelationSides
{
	double lhs = 0;
	double rhs = 0;
};

// Both sides of E[e^{eta A^2} cos B] = exp[...] E[e^{eta A^2}] E[cos B] by
// tensor Gauss-Hermite quadrature.
DecorrelationSides decorrelation_sides(double sigma_a, double sigma_b, double sigma_ab, double eta, int nodes);

const std::vector<std::string> &experiment_names();
ExperimentReport run_experiment(const std::string &name, const VerifyConfig &cfg);

nlohmann::json report_json(const ExperimentReport &r);
void write_csv_header(std::ostream &os);
void write_csv_rows(std::ostream &os, const ExperimentReport &r);

} // namespace villain
