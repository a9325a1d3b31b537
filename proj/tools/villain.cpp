#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "villain/errors.hpp"
#include "villain/gauge_fix.hpp"
#include "villain/json_util.hpp"
#include "villain/loops.hpp"
#include "villain/norms.hpp"
#include "villain/sampler.hpp"
#include "villain/verify.hpp"

using namespace villain;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char *version = VILLAIN_VERSION;

// Flags mirrored by keys of an optional JSON config file. Only flags given on
// the command line override the file.
class Flags
{
public:
	explicit Flags(CLI::App *app) : app_(app) {}

	template <class T> CLI::Option *add(const std::string &flag, const std::string &pointer, T &var, const std::string &help)
	{
		auto *o = app_->add_option(flag, var, help);
		given_.push_back([o, pointer, &var](json &j) {
			if (o->count())
				j[json::json_pointer(pointer)] = var;
		});
		return o;
	}

	CLI::Option *add_flag(const std::string &flag, const std::string &pointer, bool &var, const std::string &help)
	{
		auto *o = app_->add_flag(flag, var, help);
		given_.push_back([o, pointer, &var](json &j) {
			if (o->count())
				j[json::json_pointer(pointer)] = var;
		});
		return o;
	}

	void overlay(json &j) const
	{
		for (const auto &f : given_)
			f(j);
	}

private:
	CLI::App *app_;
	std::vector<std::function<void(json &)>> given_;
};

struct Common
{
	std::string config;
	std::string out;
	std::uint64_t seed = 0;
	int threads = 0;
};

json load_config(const std::string &path)
{
	if (path.empty())
		return json::object();
	std::ifstream in(path);
	if (!in)
		throw ConfigError("cannot read config " + path);
	try
	{
		json j = json::parse(in);
		if (!j.is_object())
			throw ConfigError("config must be a JSON object");
		return j;
	}
	catch (const json::parse_error &e)
	{
		throw ConfigError(path + ": " + e.what());
	}
}

fs::path out_dir(const Common &c)
{
	std::string d = c.out;
	if (d.empty())
		if (const char *env = std::getenv("VILLAIN_OUT"))
			d = env;
	if (d.empty())
		d = ".";
	fs::create_directories(d);
	return d;
}

void write_text(const fs::path &p, const std::string &text)
{
	std::ofstream os(p, std::ios::binary);
	if (!os)
		throw ConfigError("cannot write " + p.string());
	os << text;
}

void write_json(const fs::path &p, const json &j) { write_text(p, j.dump(2) + "\n"); }

// Fills seed and threads from the merged config, generating a seed when none is given.
void resolve_common(json &cfg)
{
	if (!cfg.contains("seed"))
	{
		std::random_device rd;
		std::uint64_t s = (std::uint64_t(rd()) << 32) | rd();
		cfg["seed"] = s;
		std::cerr << "generated seed " << s << "\n";
	}
	if (!cfg.contains("threads") || cfg["threads"].get<int>() <= 0)
		cfg["threads"] = int(std::max(1u, std::thread::hardware_concurrency()));
}

void write_manifest(const fs::path &dir, const std::string &command, const json &cfg, const std::vector<std::string> &outputs,
                    json extra = json::object())
{
	json m{{"command", command}, {"version", version}, {"config", cfg}, {"outputs", outputs}};
	for (auto &[k, v] : extra.items())
		m[k] = v;
	write_json(dir / (command + "_manifest.json"), m);
}

void add_common(CLI::App *sub, Flags &flags, Common &c)
{
	sub->add_option("--config", c.config, "JSON config; flags given on the command line take precedence");
	sub->add_option("--out", c.out, "output directory (default $VILLAIN_OUT, else .)");
	flags.add("--seed", "/seed", c.seed, "master seed");
	flags.add("--threads", "/threads", c.threads, "worker threads (default: available cores)");
}

// lattice --------------------------------------------------------------------

int run_lattice(const json &cfg, const fs::path &dir, bool dump)
{
	require_keys(cfg, {"N", "seed", "threads"}, "lattice config");
	Lattice lat(cfg.value("N", 2));
	json g = lattice_json(lat);
	if (dump)
		std::cout << g.dump(2) << "\n";
	write_json(dir / "lattice.json", g);
	write_manifest(dir, "lattice", cfg, {"lattice.json"});
	return 0;
}

// sample ---------------------------------------------------------------------

std::string csv_row(std::size_t chain, std::size_t step, const std::vector<double> &X, bool with_x)
{
	double sum = 0, sq = 0, mx = 0;
	int wraps = 0;
	for (double x : X)
	{
		sum += x;
		sq += x * x;
		mx = std::max(mx, std::abs(x));
		wraps += std::abs(x) >= std::numbers::pi;
	}
	std::string s = fmt::format("{},{},{},{},{},{}", chain, step, sum, sq, mx, wraps);
	if (with_x)
		for (double x : X)
			s += fmt::format(",{}", x);
	return s + "\n";
}

std::string csv_header(int P, bool with_x)
{
	std::string s = "chain,step,plaquette_sum,plaquette_sq_sum,max_abs_plaquette,wraps";
	if (with_x)
		for (int p = 0; p < P; ++p)
			s += fmt::format(",x{}", p);
	return s + "\n";
}

int run_sample(const std::string &mode, json cfg, const fs::path &dir)
{
	require_keys(cfg, {"N", "samples", "seed", "threads", "x", "fields", "chain"}, "sample config");
	const int N = cfg.value("N", 2);
	const bool with_x = cfg.value("x", false), fields = cfg.value("fields", false);
	Lattice lat(N);
	std::vector<std::vector<double>> draws;
	std::vector<std::size_t> chain_of;
	json extra = json::object();
	const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
	if (mode == "pure")
	{
		const int n = cfg.value("samples", 10);
		if (n < 1)
			throw ConfigError("samples must be positive");
		for (int k = 0; k < n; ++k)
		{
			Philox rng(seed, pure_sample_stream, std::uint32_t(k));
			draws.push_back(sample_pure_plaquettes(lat, rng));
			chain_of.push_back(0);
		}
		extra["sampler"] = "independent heat-kernel plaquettes";
	}
	else
	{
		ChainConfig cc = chain_config_from_json(cfg.value("chain", json::object()));
		if (cfg.contains("samples"))
			cc.samples = cfg["samples"].get<int>();
		cc.seed = seed;
		cc.threads = cfg["threads"].get<int>();
		ChainResult res = sample_interacting(lat, cc);
		draws = std::move(res.X);
		for (std::size_t k = 0; k < draws.size(); ++k)
			chain_of.push_back(k / res.per_chain);
		json chain = to_json(cc);
		chain.erase("threads");
		cfg["chain"] = chain;
		extra["estimator"] = to_string(cc.weight);
		extra["acceptance"] = res.acceptance;
		extra["proposal_sd"] = res.proposal_sd;
		for (double a : res.acceptance)
			if (a < 0.05 || a > 0.95)
				std::cerr << fmt::format("warning: acceptance rate {} outside [0.05, 0.95]\n", a);
	}
	std::string csv = csv_header(lat.num_plaquettes(), with_x);
	std::vector<std::string> outputs{"samples.csv"};
	std::vector<std::size_t> step_in_chain(draws.size());
	for (std::size_t k = 0, last = 0, s = 0; k < draws.size(); ++k)
	{
		if (chain_of[k] != last)
		{
			last = chain_of[k];
			s = 0;
		}
		step_in_chain[k] = s++;
		csv += csv_row(chain_of[k], step_in_chain[k], draws[k], with_x);
	}
	write_text(dir / "samples.csv", csv);
	if (fields)
		for (std::size_t k = 0; k < draws.size(); ++k)
		{
			std::string name = fmt::format("field_{}_{}.json", chain_of[k], step_in_chain[k]);
			write_field(psi(lat, draws[k]), (dir / name).string());
			outputs.push_back(name);
		}
	write_manifest(dir, "sample_" + mode, cfg, outputs, extra);
	return 0;
}

// gaugefix -------------------------------------------------------------------

int run_gaugefix(const json &cfg, const fs::path &dir)
{
	require_keys(cfg, {"field", "alpha", "betas", "kappa", "m", "seed", "threads"}, "gaugefix config");
	if (!cfg.contains("field"))
		throw ConfigError("gaugefix needs --field");
	GaugeField g = read_field(cfg["field"].get<std::string>());
	GaugeFixOptions opt;
	opt.alpha = cfg.value("alpha", opt.alpha);
	opt.betas = cfg.value("betas", opt.betas);
	opt.kappa = cfg.value("kappa", opt.kappa);
	opt.threads = cfg["threads"].get<int>();
	const int m = cfg.value("m", 0);
	GaugeFixResult r = m > 0 ? gauge_fix_at(g, m, opt) : gauge_fix(g, opt);
	write_json(dir / "transform.json", transform_to_json(g.lattice(), r.u));
	write_field(r.fixed, (dir / "fixed_field.json").string());
	write_json(dir / "gaugefix_report.json", report_json(r.report));
	write_manifest(dir, "gaugefix", cfg, {"transform.json", "fixed_field.json", "gaugefix_report.json"});
	return 0;
}

// norms ----------------------------------------------------------------------

int run_norms(const json &cfg, const fs::path &dir)
{
	require_keys(cfg, {"field", "alpha", "sampled", "pairs", "seed", "threads"}, "norms config");
	if (!cfg.contains("field"))
		throw ConfigError("norms needs --field");
	GaugeField g = read_field(cfg["field"].get<std::string>());
	NormOptions opt;
	opt.threads = cfg["threads"].get<int>();
	opt.sampled = cfg.value("sampled", false);
	opt.sample_pairs = cfg.value("pairs", opt.sample_pairs);
	opt.seed = cfg["seed"].get<std::uint64_t>();
	const double alpha = cfg.value("alpha", 0.5);
	FullNorm f = norm_full(log_oneform(g), alpha, opt);
	json j = norm_json(f, alpha);
	std::cout << j.dump(2) << "\n";
	write_json(dir / "norms.json", j);
	write_manifest(dir, "norms", cfg, {"norms.json"});
	return 0;
}

// loopexp --------------------------------------------------------------------

int run_loopexp(const json &cfg, const fs::path &dir)
{
	require_keys(cfg, {"graph", "max_total", "guard", "seed", "threads"}, "loopexp config");
	if (!cfg.contains("graph"))
		throw ConfigError("loopexp needs --graph");
	std::ifstream in(cfg["graph"].get<std::string>());
	if (!in)
		throw ConfigError("cannot read " + cfg["graph"].get<std::string>());
	json gj;
	try
	{
		gj = json::parse(in);
	}
	catch (const json::parse_error &e)
	{
		throw ConfigError(std::string("graph JSON: ") + e.what());
	}
	for (const char *k : {"max_total", "guard"})
		if (cfg.contains(k))
			gj[k] = cfg[k];
	LoopProblem p = loop_problem_from_json(gj);
	std::string csv = "signature,total_length,contribution_re,contribution_im\n";
	json summary;
	auto emit = [&](const auto &res, double tail) {
		for (const auto &e : res.ledger)
			csv += fmt::format("\"{}\",{},{},{}\n", e.signature, e.total_length, e.contribution.real(), e.contribution.imag());
		std::complex<double> v(res.value);
		summary = {{"value", {v.real(), v.imag()}}, {"abs_sum", res.abs_sum}, {"terms", res.terms},
		           {"max_total", res.max_total}, {"tail_bound", tail}};
	};
	if (p.complex)
		emit(expansion_value(p.graph, p.complex_ops, p.measures, p.options),
		     expansion_tail_bound(p.graph, p.complex_ops, p.measures, p.options.max_total));
	else
		emit(expansion_value(p.graph, p.real_ops, p.measures, p.options),
		     expansion_tail_bound(p.graph, p.real_ops, p.measures, p.options.max_total));
	write_text(dir / "loopexp.csv", csv);
	write_json(dir / "loopexp_summary.json", summary);
	std::cout << summary.dump(2) << "\n";
	write_manifest(dir, "loopexp", cfg, {"loopexp.csv", "loopexp_summary.json"}, {{"problem", gj}});
	return 0;
}

// verify ---------------------------------------------------------------------

int run_verify(const std::string &name, const json &cfg, const fs::path &dir)
{
	VerifyConfig vc = verify_config_from_json(cfg);
	ExperimentReport rep = run_experiment(name, vc);
	json effective = to_json(vc);
	effective.erase("threads");
	const fs::path ledger = dir / "verify_ledger.csv";
	const bool fresh = !fs::exists(ledger);
	{
		std::ofstream os(ledger, std::ios::app | std::ios::binary);
		if (!os)
			throw ConfigError("cannot write " + ledger.string());
		if (fresh)
			write_csv_header(os);
		write_csv_rows(os, rep);
	}
	const std::string report = "verify_" + name + ".json";
	json rj = report_json(rep);
	rj["config"] = effective;
	write_json(dir / report, rj);
	for (const auto &r : rep.rows)
		std::cout << fmt::format("{:<14} {:<13} {:<32} estimate {:<12.6g} stderr {:<10.3g} reference {}\n",
		                         to_string(r.verdict), name, r.name, r.estimate, r.stderr_,
		                         r.reference ? fmt::format("{:.6g}", *r.reference) : std::string("-"));
	write_manifest(dir, "verify_" + name, cfg, {"verify_ledger.csv", report});
	return rep.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"Villain lattice gauge theory toolkit"};
	app.require_subcommand(1);
	app.set_version_flag("--version", version);

	// lattice
	Common lc;
	auto *lat = app.add_subcommand("lattice", "lattice geometry");
	Flags lf(lat);
	add_common(lat, lf, lc);
	int lN = 2;
	bool dump = false;
	lf.add("--N", "/N", lN, "dyadic level");
	lat->add_flag("--dump", dump, "print the geometry JSON");

	// sample
	Common sc;
	auto *smp = app.add_subcommand("sample", "sample plaquette angles");
	Flags sf(smp);
	add_common(smp, sf, sc);
	std::string mode;
	smp->add_option("mode", mode, "pure | interacting")->required()->check(CLI::IsMember({"pure", "interacting"}));
	int sN = 2, ssamples = 10, chains = 4, burn = 2000, wsamples = 256, thin = 1;
	double coupling = 0, psd = -1;
	std::string potential = "quartic", weight = "monte_carlo";
	bool with_x = false, fields = false;
	sf.add("--N", "/N", sN, "dyadic level");
	sf.add("--samples", "/samples", ssamples, "draws (pure) or retained samples per chain (interacting)");
	sf.add_flag("--x", "/x", with_x, "include plaquette angles in the CSV");
	sf.add_flag("--fields", "/fields", fields, "write one gauge-field JSON per sample");
	auto chain_flags = [&](Flags &f) {
		f.add("--potential", "/chain/potential/kind", potential, "quartic | zero");
		f.add("--coupling", "/chain/potential/c", coupling, "c in V(x) = x^4 - c x^2");
		f.add("--weight", "/chain/weight", weight, "monte_carlo | coefficients | constant");
		f.add("--weight-samples", "/chain/weight_samples", wsamples, "draws per Higgs weight estimate");
		f.add("--chains", "/chain/chains", chains, "independent chains");
		f.add("--burn-in", "/chain/burn_in", burn, "burn-in steps per chain");
		f.add("--thin", "/chain/thin", thin, "thinning");
		f.add("--proposal-sd", "/chain/proposal_sd", psd, "random-walk step, < 0 selects the default");
	};
	chain_flags(sf);

	// gaugefix
	Common gc;
	auto *gfx = app.add_subcommand("gaugefix", "multiscale gauge fixing of a field");
	Flags gf(gfx);
	add_common(gfx, gf, gc);
	std::string gfield;
	double galpha = 0.5, gkappa = 0.25;
	std::vector<double> gbetas{0.5};
	int gm = 0;
	gf.add("--field", "/field", gfield, "gauge-field JSON");
	gf.add("--alpha", "/alpha", galpha, "flatness exponent");
	gf.add("--beta", "/betas", gbetas, "norm exponents to report");
	gf.add("--kappa", "/kappa", gkappa, "kappa in the norm bound");
	gf.add("--m", "/m", gm, "force the pipeline at this scale");

	// norms
	Common nc;
	auto *nrm = app.add_subcommand("norms", "Holder-type norms of log g");
	Flags nf(nrm);
	add_common(nrm, nf, nc);
	std::string nfield;
	double nalpha = 0.5;
	bool sampled = false;
	std::uint64_t pairs = 1u << 22;
	nf.add("--field", "/field", nfield, "gauge-field JSON");
	nf.add("--alpha", "/alpha", nalpha, "exponent in [0, 1]");
	nf.add_flag("--sampled", "/sampled", sampled, "random pairs for the rho seminorm (lower bound)");
	nf.add("--pairs", "/pairs", pairs, "pairs in sampled mode");

	// loopexp
	Common xc;
	auto *lex = app.add_subcommand("loopexp", "loop expansion of a multigraph integral");
	Flags xf(lex);
	add_common(lex, xf, xc);
	std::string graph;
	int max_total = 8, guard = default_loop_length_guard;
	xf.add("--graph", "/graph", graph, "multigraph JSON");
	xf.add("--guard", "/guard", guard, "largest loop length the enumeration accepts");
	xf.add("--max-total", "/max_total", max_total, "truncation in total loop length");

	// verify
	Common vc;
	auto *ver = app.add_subcommand("verify", "run a verification experiment");
	Flags vf(ver);
	add_common(ver, vf, vc);
	std::string exp;
	ver->add_option("experiment", exp, "experiment name")->required()->check(CLI::IsMember(experiment_names()));
	int vN = 2, vsamples = 100000, vel = 1;
	double eta = -1, valpha = 0.5, vbeta = 0.5, vkappa = 0.25, vq = 2;
	std::string ensemble = "pure";
	std::vector<int> N_list;
	std::vector<double> q_list, x_grid;
	std::array<int, 4> rect{0, 0, 1, 1};
	bool compare = false;
	vf.add("--N", "/N", vN, "dyadic level");
	vf.add("--ensemble", "/ensemble", ensemble, "pure | interacting | identity");
	vf.add("--samples", "/samples", vsamples, "pure-gauge draws");
	vf.add("--eta", "/eta", eta, "exponential moment parameter, < 0 selects 1 / (4 omega)");
	vf.add("--loop-rect", "/loop_rect", rect, "x0 y0 x1 y1 of the loop rectangle")->expected(4);
	vf.add("--loop-level", "/loop_level", vel, "level of the loop rectangle coordinates");
	vf.add("--x-grid", "/x_grid", x_grid, "tail grid in units of sqrt(omega)");
	vf.add("--q-list", "/q_list", q_list, "moment orders");
	vf.add("--N-list", "/N_list", N_list, "levels for the trend experiments");
	vf.add("--alpha", "/alpha", valpha, "flatness exponent");
	vf.add("--beta", "/beta", vbeta, "norm exponent");
	vf.add("--kappa", "/kappa", vkappa, "kappa");
	vf.add("--q", "/q", vq, "moment order for flatness and uv");
	vf.add_flag("--compare-interacting", "/compare_interacting", compare, "add the interacting run");
	chain_flags(vf);
	int vchain_samples = 10000;
	vf.add("--chain-samples", "/chain/samples", vchain_samples, "retained samples per chain");

	try
	{
		app.parse(argc, argv);
	}
	catch (const CLI::ParseError &e)
	{
		int code = app.exit(e);
		return code == 0 ? 0 : 2;
	}

	try
	{
		auto prepare = [](const Common &c, const Flags &f) {
			json cfg = load_config(c.config);
			f.overlay(cfg);
			resolve_common(cfg);
			return std::pair{cfg, out_dir(c)};
		};
		if (lat->parsed())
		{
			auto [cfg, dir] = prepare(lc, lf);
			return run_lattice(cfg, dir, dump);
		}
		if (smp->parsed())
		{
			auto [cfg, dir] = prepare(sc, sf);
			return run_sample(mode, cfg, dir);
		}
		if (gfx->parsed())
		{
			auto [cfg, dir] = prepare(gc, gf);
			return run_gaugefix(cfg, dir);
		}
		if (nrm->parsed())
		{
			auto [cfg, dir] = prepare(nc, nf);
			return run_norms(cfg, dir);
		}
		if (lex->parsed())
		{
			auto [cfg, dir] = prepare(xc, xf);
			return run_loopexp(cfg, dir);
		}
		if (ver->parsed())
		{
			auto [cfg, dir] = prepare(vc, vf);
			return run_verify(exp, cfg, dir);
		}
	}
	catch (const ConfigError &e)
	{
		std::cerr << "error: " << e.what() << "\n";
		return 2;
	}
	catch (const DomainError &e)
	{
		std::cerr << "error: " << e.what() << "\n";
		return 2;
	}
	catch (const std::exception &e)
	{
		std::cerr << "error: " << e.what() << "\n";
		return 3;
	}
	return 2;
}
