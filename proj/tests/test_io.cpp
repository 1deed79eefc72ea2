#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

using namespace phom;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("phom_io_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

int cli(const std::string& args) {
  const std::string cmd = std::string(PHOM_CLI_PATH) + " " + args + " > " + path("stdout.txt") + " 2> " +
                          path("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST(Formats, ScalarFieldRoundTrip) {
  std::mt19937_64 rng(1);
  const ScalarField u = oracle::gaussian_field(CubeDomain(3, 2), rng);
  std::stringstream ss;
  write_field(ss, u);
  const ScalarField v = read_scalar_field(ss);
  EXPECT_EQ(v.domain, u.domain);
  EXPECT_EQ(v.values, u.values);
}

TEST(Formats, ConductanceAndLabelsRoundTrip) {
  PercolationLaw law;
  law.p_open = 0.63;
  law.kind = LawKind::uniform;
  law.lambda_ell = 3.0;
  const ConductanceField a = sample(CubeDomain(2, 3), law, 12345);
  save_conductance(path("a.phc"), a);
  const ConductanceField b = load_conductance(path("a.phc"));
  EXPECT_EQ(b.values, a.values);
  EXPECT_EQ(b.seed, 12345u);
  EXPECT_EQ(b.law.p_open, 0.63);
  EXPECT_EQ(b.law.kind, LawKind::uniform);

  const ClusterLabels l = union_find_clusters(a);
  save_labels(path("a.phl"), l);
  const ClusterLabels m = load_labels(path("a.phl"));
  EXPECT_EQ(m.label, l.label);
  EXPECT_EQ(m.maximal_id, l.maximal_id);
  EXPECT_EQ(m.maximal_is_crossing, l.maximal_is_crossing);
  EXPECT_EQ(m.component_count, l.component_count);
}

TEST(Formats, RejectsCorruptFiles) {
  const ScalarField u(CubeDomain(2, 1), 1.0);
  std::stringstream ok;
  write_field(ok, u);
  const std::string bytes = ok.str();

  std::stringstream trailing(bytes + "x");
  EXPECT_THROW(read_scalar_field(trailing), FormatError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_scalar_field(truncated), FormatError);
  std::stringstream magic("PHFELD v1 d=2 m=1 kind=scalar\n");
  EXPECT_THROW(read_scalar_field(magic), FormatError);
  std::stringstream version("PHFIELD v2 d=2 m=1 kind=scalar\n");
  EXPECT_THROW(read_scalar_field(version), FormatError);
  std::stringstream dim("PHFIELD v1 d=5 m=1 kind=scalar\n");
  EXPECT_THROW(read_scalar_field(dim), FormatError);
  std::stringstream empty;
  EXPECT_THROW(read_scalar_field(empty), FormatError);
  EXPECT_THROW(load_scalar_field(path("does-not-exist")), FormatError);

  std::stringstream cond;
  cond << "PHCOND v1 d=2 m=1 law=bernoulli p=1 lambda_ell=2 seed=0\n";
  for (int k = 0; k < 18; ++k) {
    const double v = k == 0 ? 2.0 : 1.0;
    cond.write(reinterpret_cast<const char*>(&v), 8);
  }
  EXPECT_THROW(read_conductance(cond), FormatError);
}

TEST(Render, PgmHeaderAndConstantField) {
  std::ostringstream os;
  write_pgm(os, ScalarField(CubeDomain(2, 2), 3.0));
  const std::string s = os.str();
  const std::string header = "P5\n9 9\n255\n";
  ASSERT_EQ(s.size(), header.size() + 81);
  EXPECT_EQ(s.substr(0, header.size()), header);
  for (std::size_t k = header.size(); k < s.size(); ++k) EXPECT_EQ(static_cast<unsigned char>(s[k]), 128);
}

TEST(Render, PgmRangeAndMask) {
  const CubeDomain dom(2, 1);
  const ScalarField u = linear_function(dom, unit_vector(0));
  VertexMask vis(dom.size(), 1);
  vis[dom.index({1, 1, 0})] = 0;
  std::ostringstream os;
  write_pgm(os, u, vis);
  const std::string s = os.str();
  const std::string px = s.substr(s.size() - 9);
  EXPECT_EQ(static_cast<unsigned char>(px[4]), 0);
  int maxima = 0;
  for (char c : px) maxima += static_cast<unsigned char>(c) == 255;
  EXPECT_EQ(maxima, 3);
}

TEST(Render, LabelPpmColours) {
  const ConductanceField a = oracle::bernoulli(CubeDomain(2, 1), 1.0, 1);
  std::ostringstream os;
  write_label_ppm(os, union_find_clusters(a));
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, 11), "P6\n3 3\n255\n");
  EXPECT_EQ(s.size(), 11u + 27u);
  EXPECT_EQ(static_cast<unsigned char>(s[13]), 255);
  EXPECT_EQ(static_cast<unsigned char>(s[11]), 0);
}

TEST(Cli, SampleClusterAndManifest) {
  ASSERT_EQ(cli("sample --dim 2 --m 2 --p 0.7 --seed 5 --out " + path("s.phc")), 0);
  const ConductanceField a = load_conductance(path("s.phc"));
  EXPECT_EQ(a.values, oracle::bernoulli(CubeDomain(2, 2), 0.7, 5).values);
  ASSERT_TRUE(fs::exists(path("s.phc.manifest.json")));
  const std::string manifest = slurp(path("s.phc.manifest.json"));
  EXPECT_NE(manifest.find("\"version\""), std::string::npos);
  EXPECT_NE(manifest.find(hex64(file_hash(path("s.phc")))), std::string::npos);

  ASSERT_EQ(cli("cluster --in " + path("s.phc") + " --stats --out " + path("s.phl")), 0);
  EXPECT_NE(slurp(path("stdout.txt")).find("maximal_cluster_size"), std::string::npos);
  EXPECT_EQ(load_labels(path("s.phl")).label, union_find_clusters(a).label);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("sample --dim 4 --m 2 --out " + path("x.phc")), 2);
  EXPECT_EQ(cli("no-such-command"), 2);
  EXPECT_EQ(cli("cluster --in " + path("missing.phc")), 4);
  {
    std::ofstream bad(path("bad.phc"));
    bad << "garbage\n";
  }
  EXPECT_EQ(cli("cluster --in " + path("bad.phc")), 4);
  ASSERT_EQ(cli("sample --dim 2 --m 2 --p 0.7 --seed 5 --out " + path("e.phc")), 0);
  EXPECT_EQ(cli("solve --in " + path("e.phc") + " --f " + path("missing.fld") + " --lambda 0.1 --abar 0.3 --out " +
                path("e.fld")),
            4);
  EXPECT_EQ(cli("solve --in " + path("e.phc") + " --corrector-dir e1 --g " + path("missing.fld") +
                " --lambda 0.1 --abar 0.3 --out " + path("e.fld")),
            2);
  EXPECT_EQ(cli("selftest"), 0);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  {
    std::ofstream cfg(path("c.ini"));
    cfg << "dim=2\nm=2\np=0.8\nseed=9\n";
  }
  ASSERT_EQ(cli("sample --config " + path("c.ini") + " --out " + path("c1.phc")), 0);
  EXPECT_EQ(load_conductance(path("c1.phc")).values, oracle::bernoulli(CubeDomain(2, 2), 0.8, 9).values);
  ASSERT_EQ(cli("sample --config " + path("c.ini") + " --seed 10 --out " + path("c2.phc")), 0);
  EXPECT_EQ(load_conductance(path("c2.phc")).values, oracle::bernoulli(CubeDomain(2, 2), 0.8, 10).values);
}

TEST(Cli, SolveWritesFieldAndTrace) {
  ASSERT_EQ(cli("sample --dim 2 --m 2 --p 1 --seed 1 --out " + path("f.phc")), 0);
  ASSERT_EQ(cli("solve --in " + path("f.phc") + " --corrector-dir e1 --lambda 0.2 --abar 0.9 --rounds 2 --out " +
                path("f.fld") + " --trace " + path("f.json")),
            0);
  const ScalarField u = load_scalar_field(path("f.fld"));
  EXPECT_LE(norm_lp(u, INFINITY), 1e-8);
  const std::string trace = slurp(path("f.json"));
  EXPECT_NE(trace.find("\"rounds\""), std::string::npos);
  EXPECT_NE(trace.find("\"wall_ms\""), std::string::npos);
}

TEST(Cli, RenderProducesImages) {
  ASSERT_EQ(cli("sample --dim 2 --m 2 --p 0.7 --seed 3 --out " + path("r.phc")), 0);
  ASSERT_EQ(cli("cluster --in " + path("r.phc") + " --out " + path("r.phl")), 0);
  ASSERT_EQ(cli("render --in " + path("r.phl") + " --out " + path("r.ppm")), 0);
  EXPECT_EQ(slurp(path("r.ppm")).substr(0, 2), "P6");
  save_field(path("r.fld"), ScalarField(CubeDomain(2, 2), 1.0));
  ASSERT_EQ(cli("render --in " + path("r.fld") + " --mask " + path("r.phl") + " --out " + path("r.pgm")), 0);
  EXPECT_EQ(slurp(path("r.pgm")).substr(0, 2), "P5");
}
