// phom: sampling, clustering, effective conductance, correctors, the
// preconditioned iterative solve, flux diagnostics and rendering.
//
// Exit codes: 0 ok, 2 usage, 3 numerical non-convergence, 4 bad input file.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "phom/phom.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace phom;

constexpr const char* kVersion = "phom 1.0.0";

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kNoConvergence = 3, kBadInput = 4 };

struct NonConvergence : Error {
  using Error::Error;
};

// -- manifests ------------------------------------------------------------------

struct Manifest {
  std::string command;
  const CLI::App* app = nullptr;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> inputs;

  json flags() const {
    json f = json::object();
    for (const CLI::Option* o : app->get_options()) {
      const std::string name = o->get_name(false, true);
      if (name.empty() || name == "--help" || name == "--config") continue;
      std::string key = o->get_single_name();
      if (o->count() > 0) {
        const auto& r = o->results();
        if (o->get_type_size() == 0 && r.size() == 1) f[key] = r.front();
        else {
          std::string joined;
          for (std::size_t i = 0; i < r.size(); ++i) joined += (i ? " " : "") + r[i];
          f[key] = joined;
        }
      } else if (!o->get_default_str().empty()) {
        f[key] = o->get_default_str();
      }
    }
    return f;
  }

  void write_for(const std::string& output) const {
    json j;
    j["command"] = command;
    j["flags"] = flags();
    j["seeds"] = seeds;
    json in = json::object();
    for (const auto& p : inputs) in[p] = hex64(file_hash(p));
    j["inputs"] = in;
    j["output"] = {{"path", output}, {"fnv1a", hex64(file_hash(output))}};
    j["version"] = kVersion;
    std::ofstream os(output + ".manifest.json");
    if (!os) throw Error("cannot write manifest for '" + output + "'");
    os << j.dump(2) << "\n";
  }
};

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::array<double, kMaxDim> parse_direction(const std::string& s, int dim) {
  if (s.size() == 2 && s[0] == 'e' && s[1] >= '1' && s[1] <= '3') {
    const int k = s[1] - '1';
    if (k >= dim) throw InvalidArgument("direction '" + s + "' exceeds the dimension");
    return unit_vector(k);
  }
  throw InvalidArgument("direction must be e1, e2 or e3");
}

json array_json(const std::array<double, kMaxDim>& v, int dim) {
  json a = json::array();
  for (int j = 0; j < dim; ++j) a.push_back(v[j]);
  return a;
}

ClusterLabels crossing_labels(const ConductanceField& a) {
  ClusterLabels labels = union_find_clusters(a);
  if (!labels.maximal_is_crossing)
    std::cerr << "warning: no crossing cluster; using the largest component\n";
  return labels;
}

// -- common options -----------------------------------------------------------------

struct Common {
  int threads = 0;
};

// Config files are read by the root app; unqualified keys go to the
// subcommand given on the command line.
class SubcommandConfig : public CLI::ConfigINI {
 public:
  explicit SubcommandConfig(const CLI::App& app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    const auto subs = app_.get_subcommands();
    if (subs.empty()) return items;
    for (auto& item : items)
      if (item.parents.empty()) item.parents = {subs.front()->get_name()};
    return items;
  }

 private:
  const CLI::App& app_;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& desc, Common& common) {
  CLI::App* sub = app.add_subcommand(name, desc);
  sub->fallthrough();
  sub->add_option("--threads", common.threads, "worker count (default: PH_THREADS, then cores)")
      ->check(CLI::NonNegativeNumber);
  return sub;
}

struct LawOptions {
  int dim = 2;
  int m = 4;
  double p = 0.6;
  std::string law = "bernoulli";
  double lambda_ell = 2.0;
  std::uint64_t seed = 1;

  void add(CLI::App* sub, bool with_seed = true) {
    sub->add_option("--dim", dim, "dimension")->check(CLI::IsMember({2, 3}))->capture_default_str();
    sub->add_option("--m", m, "level; the cube has side 3^m")->check(CLI::Range(1, 6))->capture_default_str();
    sub->add_option("--p", p, "open-edge probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    sub->add_option("--law", law, "conductance law")
        ->check(CLI::IsMember({"bernoulli", "uniform"}))
        ->capture_default_str();
    sub->add_option("--lambda-ell", lambda_ell, "ellipticity of the uniform law")->capture_default_str();
    if (with_seed) sub->add_option("--seed", seed, "sample seed")->capture_default_str();
  }

  PercolationLaw law_value() const {
    PercolationLaw l;
    l.p_open = p;
    l.lambda_ell = lambda_ell;
    l.kind = parse_law(law);
    l.validate();
    if (l.looks_subcritical(dim)) std::cerr << "warning: p = " << p << " looks subcritical in d = " << dim << "\n";
    return l;
  }
};

// -- sample ----------------------------------------------------------------------

struct SampleCmd {
  LawOptions law;
  std::string out;

  void setup(CLI::App* sub) {
    law.add(sub);
    sub->add_option("--out", out, "conductance file")->required();
  }

  int run(Manifest& man) {
    const ConductanceField a = sample(CubeDomain(law.dim, law.m), law.law_value(), law.seed);
    save_conductance(out, a);
    man.seeds = {law.seed};
    man.write_for(out);
    return kOk;
  }
};

// -- cluster ---------------------------------------------------------------------

struct ClusterCmd {
  std::string in, out;
  bool stats = false;

  void setup(CLI::App* sub) {
    sub->add_option("--in", in, "conductance file")->required();
    sub->add_flag("--stats", stats, "print |C_*|, component count and goodness of the cube");
    sub->add_option("--out", out, "labels file");
  }

  int run(Manifest& man) {
    const ConductanceField a = load_conductance(in);
    man.inputs = {in};
    man.seeds = {a.seed};
    const ClusterLabels labels = union_find_clusters(a);
    if (stats) {
      const TriadicCube top{a.domain.level(), Point{}};
      std::cout << "maximal_cluster_size " << labels.maximal_size() << "\n";
      std::cout << "maximal_is_crossing " << (labels.maximal_is_crossing ? "yes" : "no") << "\n";
      std::cout << "component_count " << labels.component_count << "\n";
      const Goodness g = good_cube(a, top);
      std::cout << "goodness " << (g == Goodness::good ? "good" : g == Goodness::bad ? "bad" : "unchecked") << "\n";
    }
    if (!out.empty()) {
      save_labels(out, labels);
      man.write_for(out);
    }
    return kOk;
  }
};

// -- abar ------------------------------------------------------------------------

struct AbarCmd {
  LawOptions law;
  int samples = 4;
  double tol = 1e-10;
  std::string json_out;

  void setup(CLI::App* sub) {
    law.add(sub);
    sub->add_option("--samples", samples, "number of samples (seeds seed .. seed + N - 1)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--tol", tol, "corrector CG tolerance")->capture_default_str();
    sub->add_option("--json", json_out, "report file");
  }

  int run(Manifest& man) {
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < samples; ++s) seeds.push_back(law.seed + static_cast<std::uint64_t>(s));
    man.seeds = seeds;
    const EffectiveTensor t = effective_conductance(law.law_value(), law.dim, law.m, seeds, tol);
    std::cout << "abar " << detail::exact(t.abar) << " stderr " << detail::exact(t.stderr_) << "\n";
    if (!json_out.empty()) {
      json j;
      j["abar"] = t.abar;
      j["stderr"] = t.stderr_;
      j["abar_flux"] = t.abar_flux;
      j["energy"] = array_json(t.energy, t.dim);
      j["flux"] = array_json(t.flux, t.dim);
      j["isotropy_gap"] = t.isotropy_gap;
      j["dim"] = t.dim;
      j["m"] = t.m_used;
      j["p"] = law.p;
      j["law"] = law.law;
      j["samples_used"] = t.samples_used;
      j["seeds_used"] = t.seeds_used;
      write_json(json_out, j);
      man.write_for(json_out);
    }
    return kOk;
  }
};

// -- corrector -------------------------------------------------------------------

struct CorrectorCmd {
  LawOptions law;
  std::string in, dir = "e1", out;
  double tol = 1e-10;

  void setup(CLI::App* sub) {
    law.add(sub);
    sub->add_option("--in", in, "conductance file (instead of sampling)");
    sub->add_option("--dir", dir, "direction e1|e2|e3")->capture_default_str();
    sub->add_option("--tol", tol, "CG tolerance")->capture_default_str();
    sub->add_option("--out", out, "corrector field")->required();
  }

  int run(Manifest& man) {
    ConductanceField a = in.empty() ? sample(CubeDomain(law.dim, law.m), law.law_value(), law.seed)
                                    : load_conductance(in);
    if (!in.empty()) man.inputs = {in};
    man.seeds = {a.seed};
    const ClusterLabels labels = crossing_labels(a);
    const auto p = parse_direction(dir, a.domain.dim());
    ScalarField phi;
    try {
      phi = localized_corrector(mask_to_cluster(a, labels), p, tol).first;
    } catch (const NumericalError& e) {
      throw NonConvergence(e.what());
    }
    save_field(out, phi);
    man.write_for(out);
    return kOk;
  }
};

// -- flux ------------------------------------------------------------------------

struct FluxCmd {
  std::string in, corrector, dir = "e1", json_out;
  double abar = 0.0;
  int grid = 3;
  std::vector<double> radii{3.0, 9.0};

  void setup(CLI::App* sub) {
    sub->add_option("--in", in, "conductance file")->required();
    sub->add_option("--corrector", corrector, "corrector field")->required();
    sub->add_option("--dir", dir, "direction of the corrector")->capture_default_str();
    sub->add_option("--abar", abar, "effective conductance")->required();
    sub->add_option("--probe-grid", grid, "G x G probes")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--radius", radii, "heat-kernel scales R")->capture_default_str();
    sub->add_option("--json", json_out, "report file")->required();
  }

  int run(Manifest& man) {
    const ConductanceField a = load_conductance(in);
    ScalarField phi;
    {
      auto is = detail::open_in(corrector);
      phi = read_scalar_field(is);
    }
    require_same_domain(a.domain, phi.domain);
    man.inputs = {in, corrector};
    man.seeds = {a.seed};
    const int d = a.domain.dim();
    const auto p = parse_direction(dir, d);
    const ClusterLabels labels = union_find_clusters(a);
    const VectorField g = centered_flux(a, labels, phi, abar, p);

    json j;
    j["abar"] = abar;
    j["direction"] = dir;
    j["cube_average"] = array_json(vector_average(g), d);
    j["cluster_average"] = array_json(vector_average(g, labels.maximal_mask()), d);
    const ScalarField div = divergence_adjoint(g);
    double deep = 0.0;
    for (std::size_t x = 0; x < div.size(); ++x)
      if (a.domain.dist_to_boundary(x) >= 2) deep = std::max(deep, std::abs(div[x]));
    j["divergence_max_interior"] = deep;
    json avgs = json::array();
    for (double R : radii) {
      const SpatialKernel k = SpatialKernel::heat(R, d);
      const auto probes = probe_grid(a.domain, k.radius, grid);
      const auto vals = flux_spatial_average(g, k, probes);
      json pr = json::array();
      double worst = 0.0;
      for (std::size_t i = 0; i < probes.size(); ++i) {
        json c = json::array();
        for (int q = 0; q < d; ++q) c.push_back(probes[i][q]);
        double mag = 0.0;
        for (int q = 0; q < d; ++q) mag += vals[i][q] * vals[i][q];
        worst = std::max(worst, std::sqrt(mag));
        pr.push_back({{"at", c}, {"value", array_json(vals[i], d)}});
      }
      avgs.push_back({{"R", R}, {"max_norm", worst}, {"probes", pr}});
    }
    j["spatial_averages"] = avgs;
    write_json(json_out, j);
    man.write_for(json_out);
    return kOk;
  }
};

// -- solve -----------------------------------------------------------------------

struct SolveCmd {
  std::string in, f_file, corrector_dir, g_spec = "zero", lambda_spec = "auto", abar_spec = "auto", out, trace;
  int rounds = 8;
  double tol = 1e-8;
  int abar_samples = 4;
  std::uint64_t abar_seed = 1000;

  void setup(CLI::App* sub) {
    sub->add_option("--in", in, "conductance file")->required();
    auto* f = sub->add_option("--f", f_file, "right-hand side field");
    auto* c = sub->add_option("--corrector-dir", corrector_dir, "solve the corrector problem for e1|e2|e3");
    f->excludes(c);
    sub->add_option("--g", g_spec, "boundary field file, or 'zero'")->capture_default_str();
    sub->add_option("--lambda", lambda_spec, "regularization, or 'auto'")->capture_default_str();
    sub->add_option("--abar", abar_spec, "effective conductance, or 'auto'")->capture_default_str();
    sub->add_option("--abar-samples", abar_samples, "samples for --abar auto")->capture_default_str();
    sub->add_option("--abar-seed", abar_seed, "first seed for --abar auto")->capture_default_str();
    sub->add_option("--rounds", rounds, "rounds")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tol", tol, "inner solver tolerance")->capture_default_str();
    sub->add_option("--out", out, "solution field")->required();
    sub->add_option("--trace", trace, "trace file");
  }

  static double number(const std::string& s, const char* what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::logic_error&) {
      throw InvalidArgument(std::string("--") + what + " must be a number or 'auto'");
    }
  }

  int run(Manifest& man) {
    if (f_file.empty() && corrector_dir.empty()) throw InvalidArgument("one of --f or --corrector-dir is required");
    const ConductanceField a = load_conductance(in);
    man.inputs = {in};
    man.seeds = {a.seed};
    const CubeDomain& dom = a.domain;
    const ClusterLabels labels = crossing_labels(a);

    std::array<double, kMaxDim> p{};
    SchemeProblem problem;
    if (!corrector_dir.empty()) {
      if (g_spec != "zero") throw InvalidArgument("--g applies to --f problems; the corrector problem has zero boundary data");
      p = parse_direction(corrector_dir, dom.dim());
      problem = SchemeProblem::corrector(a, labels, p);
    } else {
      const ScalarField f = load_scalar_field(f_file);
      man.inputs.push_back(f_file);
      ScalarField g(dom);
      if (g_spec != "zero") {
        g = load_scalar_field(g_spec);
        man.inputs.push_back(g_spec);
      }
      problem = SchemeProblem::general(a, labels, f, g);
    }

    IterationConfig cfg;
    cfg.lambda = lambda_spec == "auto" ? default_lambda(dom.level(), dom.dim()) : number(lambda_spec, "lambda");
    if (abar_spec == "auto") {
      std::vector<std::uint64_t> seeds;
      for (int s = 0; s < abar_samples; ++s) seeds.push_back(abar_seed + static_cast<std::uint64_t>(s));
      man.seeds.insert(man.seeds.end(), seeds.begin(), seeds.end());
      cfg.abar = effective_conductance(a.law, dom.dim(), dom.level(), seeds).abar;
    } else {
      cfg.abar = number(abar_spec, "abar");
    }
    if (!(cfg.abar > 0.0)) throw InvalidArgument("abar must be positive");
    cfg.rounds = rounds;
    cfg.cg_tol = tol;
    cfg.mg_tol = tol;

    const Scheme scheme(problem, cfg);
    if (!(cfg.lambda > std::pow(3.0, -dom.level()) && cfg.lambda < 0.5))
      std::cerr << "warning: lambda outside (3^-m, 1/2)\n";
    const auto [u, tr] = scheme.run(problem.initial_guess());
    save_field(out, u);
    man.write_for(out);

    bool flagged = false;
    json rows = json::array();
    for (const auto& r : tr.rounds) {
      flagged = flagged || r.flagged;
      rows.push_back({{"res", r.res},
                      {"ratio", finite_or_null(r.ratio)},
                      {"cg1_iters", r.cg1_iters},
                      {"mg_cycles", r.mg_cycles},
                      {"cg2_iters", r.cg2_iters},
                      {"wall_ms", r.wall_ms}});
    }
    if (!trace.empty()) {
      json j;
      j["rounds"] = rows;
      j["lambda"] = cfg.lambda;
      j["abar"] = cfg.abar;
      j["seed"] = a.seed;
      j["m"] = dom.level();
      j["p"] = a.law.p_open;
      j["initial_res"] = tr.initial_res;
      j["diverged"] = tr.diverged;
      j["flagged"] = flagged;
      write_json(trace, j);
      man.write_for(trace);
    }
    for (std::size_t n = 0; n < tr.rounds.size(); ++n)
      std::cout << "round " << n + 1 << " res " << detail::exact(tr.rounds[n].res) << "\n";
    if (tr.diverged || flagged) {
      std::cerr << (tr.diverged ? "error: the iteration diverged\n" : "error: an inner solver did not converge\n");
      return kNoConvergence;
    }
    return kOk;
  }
};

// -- solve-raw -------------------------------------------------------------------

struct SolveRawCmd {
  std::string op = "het", in, rhs, out, report;
  double lambda = 0.0, abar = 1.0, tol = 1e-8;

  void setup(CLI::App* sub) {
    sub->add_option("--op", op, "operator")->check(CLI::IsMember({"het", "hom"}))->capture_default_str();
    sub->add_option("--in", in, "conductance file (het)");
    sub->add_option("--lambda", lambda, "regularization")->capture_default_str();
    sub->add_option("--abar", abar, "effective conductance (hom)")->capture_default_str();
    sub->add_option("--rhs", rhs, "right-hand side field")->required();
    sub->add_option("--tol", tol, "relative tolerance")->capture_default_str();
    sub->add_option("--out", out, "solution field")->required();
    sub->add_option("--report", report, "solve report");
  }

  int run(Manifest& man) {
    const ScalarField b = load_scalar_field(rhs);
    man.inputs = {rhs};
    ScalarField u;
    SolveReport rep;
    if (op == "het") {
      if (in.empty()) throw InvalidArgument("--op het needs --in");
      const ConductanceField a = load_conductance(in);
      man.inputs.push_back(in);
      man.seeds = {a.seed};
      require_same_domain(a.domain, b.domain);
      const ClusterLabels labels = crossing_labels(a);
      const ScalarField lf = field_lambda(labels, lambda);
      CgOptions opt;
      opt.tol = tol;
      std::tie(u, rep) = cg_solve(OperatorSpec::heterogeneous(mask_to_cluster(a, labels), &lf), b, opt);
    } else {
      ScalarField lf(b.domain);
      for (auto& v : lf.values) v = lambda;
      MultigridOptions opt;
      opt.tol = tol;
      std::tie(u, rep) = Multigrid(OperatorSpec::homogenized(b.domain, abar, &lf), opt).solve(b);
    }
    save_field(out, u);
    man.write_for(out);
    if (!report.empty()) {
      json j;
      j["op"] = op;
      j["iterations"] = rep.iterations;
      j["final_residual"] = rep.final_residual;
      j["converged"] = rep.converged;
      j["wall_time"] = rep.wall_time;
      write_json(report, j);
      man.write_for(report);
    }
    return rep.converged ? kOk : kNoConvergence;
  }
};

// -- render ----------------------------------------------------------------------

struct RenderCmd {
  std::string in, out, mask;

  void setup(CLI::App* sub) {
    sub->add_option("--in", in, "scalar field (PGM) or labels file (PPM)")->required();
    sub->add_option("--out", out, "image file")->required();
    sub->add_option("--mask", mask, "labels or conductance file; vertices off its maximal cluster render black");
  }

  static std::string magic(const std::string& path) {
    auto is = detail::open_in(path);
    std::string word;
    is >> word;
    return word;
  }

  int run(Manifest& man) {
    man.inputs = {in};
    const std::string kind = magic(in);
    auto os = detail::open_out(out);
    if (kind == "PHLBL") {
      write_label_ppm(os, load_labels(in));
    } else if (kind == "PHFIELD") {
      if (field_kind(in) != FieldKind::scalar) throw FormatError("only scalar fields can be rendered");
      const ScalarField u = load_scalar_field(in);
      VertexMask visible;
      if (!mask.empty()) {
        man.inputs.push_back(mask);
        const ClusterLabels labels =
            magic(mask) == "PHCOND" ? union_find_clusters(load_conductance(mask)) : load_labels(mask);
        require_same_domain(u.domain, labels.domain);
        visible = labels.maximal_mask();
      }
      write_pgm(os, u, visible);
    } else {
      throw FormatError("'" + in + "' is neither a field nor a labels file");
    }
    os.close();
    man.write_for(out);
    return kOk;
  }
};

// -- selftest --------------------------------------------------------------------

int selftest() {
  int failures = 0;
  const auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
    failures += ok ? 0 : 1;
  };
  const int m = 3;
  const CubeDomain dom(2, m);
  PercolationLaw law;
  law.p_open = 1.0;
  const ConductanceField a = sample(dom, law, 7);
  const ClusterLabels labels = union_find_clusters(a);
  report("full lattice is one crossing cluster", labels.maximal_is_crossing && labels.maximal_size() == dom.size(),
         std::to_string(labels.maximal_size()) + " vertices");

  const ScalarField phi = localized_corrector(mask_to_cluster(a, labels), unit_vector(0)).first;
  const double phi_max = norm_lp(phi, INFINITY);
  report("corrector vanishes", phi_max <= 1e-8, "max |phi| = " + detail::exact(phi_max));

  const EffectiveTensor t = effective_conductance(law, 2, m, {1, 2});
  report("abar = 1", std::abs(t.abar - 1.0) <= 3.0 * std::pow(3.0, -m), "abar = " + detail::exact(t.abar));

  ScalarField f(dom);
  for (std::size_t x = 0; x < dom.size(); ++x) {
    const Point c = dom.index_coords(x);
    const double s = static_cast<double>(dom.side() - 1);
    f[x] = std::sin(M_PI * c[0] / s) * std::sin(M_PI * c[1] / s);
  }
  const SchemeProblem prob = SchemeProblem::general(a, labels, f, ScalarField(dom));
  IterationConfig cfg;
  cfg.lambda = 0.1;
  cfg.abar = 1.0;
  cfg.cg_tol = 1e-12;
  cfg.mg_tol = 1e-12;
  const ScalarField truth = reference_solution(prob);
  const Scheme scheme(prob, cfg);
  ScalarField diff = scheme.iterate_once(truth).u_hat;
  for (std::size_t x = 0; x < diff.size(); ++x) diff[x] -= truth[x];
  const double fp = cluster_h1(prob.a_cluster, diff);
  report("fixed point", fp <= 1e-7, "H1 drift " + detail::exact(fp));

  const ScalarField u0 = prob.initial_guess();
  const double r0 = scheme.residual(u0);
  const double r1 = scheme.residual(scheme.iterate_once(u0).u_hat);
  report("one round reduces the residual 10x", r1 <= 0.1 * r0, "ratio " + detail::exact(r1 / r0));
  return failures == 0 ? kOk : kNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogenization-preconditioned solver on percolation clusters"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value file; keys are long flag names, command-line flags take precedence");
  app.config_formatter(std::make_shared<SubcommandConfig>(app));
  app.allow_config_extras(false);
  Common common;

  SampleCmd sample_cmd;
  ClusterCmd cluster_cmd;
  AbarCmd abar_cmd;
  CorrectorCmd corrector_cmd;
  FluxCmd flux_cmd;
  SolveCmd solve_cmd;
  SolveRawCmd raw_cmd;
  RenderCmd render_cmd;

  std::map<CLI::App*, std::function<int(Manifest&)>> handlers;
  const auto reg = [&](const std::string& name, const std::string& desc, auto& cmd) {
    CLI::App* sub = add_command(app, name, desc, common);
    cmd.setup(sub);
    handlers[sub] = [&cmd](Manifest& m) { return cmd.run(m); };
  };
  reg("sample", "sample a conductance field", sample_cmd);
  reg("cluster", "label open clusters", cluster_cmd);
  reg("abar", "estimate the effective conductance", abar_cmd);
  reg("corrector", "compute a localized corrector", corrector_cmd);
  reg("flux", "centered-flux diagnostics", flux_cmd);
  reg("solve", "run the preconditioned iteration", solve_cmd);
  reg("solve-raw", "single CG or multigrid solve", raw_cmd);
  reg("render", "write a PGM/PPM image", render_cmd);
  CLI::App* self = add_command(app, "selftest", "trivial-case checks", common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (common.threads > 0) set_thread_count(common.threads);
  CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == self) return selftest();
    Manifest man;
    man.command = sub->get_name();
    man.app = sub;
    return handlers.at(sub)(man);
  } catch (const NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const DomainMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
