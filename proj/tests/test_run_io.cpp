#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "whipflow/errors.hpp"
#include "whipflow/run_io.hpp"

using namespace whipflow;
using whipflow::testing::hanging;
using whipflow::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

double wild(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-300, 300);
  std::uniform_int_distribution<int> pick(0, 9);
  switch (pick(rng)) {
    case 0: return 0.0;
    case 1: return -0.0;
    case 2: return std::numeric_limits<double>::denorm_min() * (1 + pick(rng));
    case 3: return std::ldexp(mant(rng), ex(rng));
    default: return mant(rng);
  }
}

RunRecord random_record(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 6), cells(1, 12), dim(2, 3);
  RunRecord r;
  r.config = {{"eps", wild(rng)}, {"cells", cells(rng)}, {"scenario", "quarter_circle"}};
  const int rows = count(rng);
  double t = 0.0;
  for (int k = 0; k < rows; ++k) {
    SeriesRow row;
    t += 1e-3 + std::abs(wild(rng));
    row.report.t = t;
    for (double* f : {&row.report.E, &row.report.E_alt, &row.report.E_rel, &row.report.E_rel_back, &row.report.E_eps,
                      &row.report.D, &row.report.cos_alpha, &row.report.max_stretch, &row.report.constraint_L1,
                      &row.report.sigma_at_1})
      *f = wild(rng);
    row.dt = std::abs(wild(rng));
    row.newton_iters = count(rng);
    r.rows.push_back(row);
  }
  const int d = dim(rng);
  const int snaps = count(rng) % 3;
  for (int k = 0; k < snaps; ++k) {
    const Grid grid(cells(rng));
    VecField p(grid.n_nodes(), Vec::Zero(d));
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
      for (int c = 0; c < d; ++c) p[i][c] = wild(rng);
    ScalarField sig(grid.n_nodes());
    for (double& x : sig) x = wild(rng);
    sig[0] = 0.0;
    r.snapshots.push_back({ArcState(grid, p, 0.5 * k + std::abs(wild(rng))), TensionProfile(grid, sig)});
  }
  r.stats.accepted = static_cast<std::size_t>(count(rng));
  r.stats.rejected = static_cast<std::size_t>(count(rng));
  for (std::size_t k = 0; k < r.stats.accepted; ++k) {
    r.stats.dt_history.push_back(std::abs(wild(rng)));
    r.stats.newton_history.push_back(count(rng));
  }
  r.stats.failed = count(rng) == 0;
  if (r.stats.failed) r.stats.failure_message = "dt below dt_min at t=0.3";
  r.summary = {{"final_time", t}, {"rate", wild(rng)}, {"decay_fit", "refused"}};
  return r;
}

}  // namespace

TEST(RunIo, Columns) {
  const std::vector<std::string> want = {"t",         "E",           "E_alt",        "E_rel", "E_rel_back",
                                         "E_eps",     "D",           "cos_alpha",    "max_stretch",
                                         "constraint_L1", "sigma_at_1", "dt",         "newton_iters"};
  EXPECT_EQ(timeseries_columns(), want);
}

TEST(RunIo, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(RunIo, EmptyReportListWritesHeaderOnly) {
  TempDir dir;
  RunRecord r;
  write_run(r, dir.path);
  std::string header;
  for (std::size_t i = 0; i < timeseries_columns().size(); ++i) header += (i ? "," : "") + timeseries_columns()[i];
  EXPECT_EQ(slurp(dir.path / "timeseries.csv"), header + "\n");
  EXPECT_TRUE(same_record(read_run(dir.path), r));
  const auto cfg = nlohmann::json::parse(slurp(dir.path / "config.json"));
  EXPECT_EQ(cfg.at("schema_version"), kSchemaVersion);
  const auto sum = nlohmann::json::parse(slurp(dir.path / "summary.json"));
  EXPECT_EQ(sum.at("schema_version"), kSchemaVersion);
}

TEST(RunIo, EquilibriumSnapshot) {
  TempDir dir;
  const Grid grid(4);
  const GravitySpec g = GravitySpec::down(2);
  RunRecord r;
  r.snapshots.push_back({hanging(grid, g, 1.0), TensionProfile(grid, grid.nodes())});
  write_run(r, dir.path);
  std::ifstream in(dir.path / snapshot_filename(0.0));
  ASSERT_TRUE(in.good());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines.front(), "s,x0,x1,sigma");
  EXPECT_EQ(lines.back(), "1,0,0,1");
  const RunRecord back = read_run(dir.path);
  EXPECT_TRUE(same_record(back, r));
}

TEST(RunIo, TruncatedCsvNamesLine) {
  TempDir dir;
  std::mt19937_64 rng(51);
  RunRecord r = random_record(rng);
  while (r.rows.size() < 3) r = random_record(rng);
  write_run(r, dir.path);
  std::string csv = slurp(dir.path / "timeseries.csv");
  csv.resize(csv.size() - 5);
  spit(dir.path / "timeseries.csv", csv);
  try {
    read_run(dir.path);
    FAIL() << "truncated file accepted";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("timeseries.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find(":" + std::to_string(r.rows.size() + 1) + ":"), std::string::npos) << msg;
  }
}

TEST(RunIo, CorruptValue) {
  TempDir dir;
  RunRecord r;
  r.rows.push_back({});
  write_run(r, dir.path);
  std::string csv = slurp(dir.path / "timeseries.csv");
  csv.replace(csv.find('\n') + 1, 1, "x");
  spit(dir.path / "timeseries.csv", csv);
  EXPECT_THROW(read_run(dir.path), ParseError);
}

TEST(RunIo, MissingFile) {
  TempDir dir;
  write_run(RunRecord{}, dir.path);
  std::filesystem::remove(dir.path / "summary.json");
  EXPECT_THROW(read_run(dir.path), ParseError);
}

TEST(RunIo, UnknownSchemaVersion) {
  TempDir dir;
  write_run(RunRecord{}, dir.path);
  auto cfg = nlohmann::json::parse(slurp(dir.path / "config.json"));
  cfg["schema_version"] = "7";
  spit(dir.path / "config.json", cfg.dump());
  try {
    read_run(dir.path);
    FAIL() << "schema 7 accepted";
  } catch (const SchemaVersionError& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
}

TEST(RunIo, UnwritablePath) {
  TempDir dir;
  spit(dir.path / "blocker", "x");
  try {
    write_run(RunRecord{}, dir.path / "blocker" / "run");
    FAIL() << "wrote below a regular file";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("blocker"), std::string::npos);
  }
}

TEST(RunIoProperty, RandomRoundTrips) {
  std::mt19937_64 rng(52);
  for (int k = 0; k < 100; ++k) {
    TempDir dir;
    const RunRecord r = random_record(rng);
    write_run(r, dir.path);
    ASSERT_TRUE(same_record(read_run(dir.path), r)) << "case " << k;
  }
}

TEST(RunIoProperty, RewriteIsByteIdentical) {
  std::mt19937_64 rng(53);
  TempDir a, b;
  const RunRecord r = random_record(rng);
  write_run(r, a.path);
  write_run(read_run(a.path), b.path);
  for (const auto& entry : std::filesystem::directory_iterator(a.path)) {
    EXPECT_EQ(slurp(entry.path()), slurp(b.path / entry.path().filename())) << entry.path();
  }
}
