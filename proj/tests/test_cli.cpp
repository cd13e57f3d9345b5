// Integration tests that drive the covf binary end to end. They run from the
// build directory, where ./covf lives.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "covf/analysis.hpp"
#include "covf/csv.hpp"
#include "covf/manifest.hpp"
#include "covf/pipeline.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace covf;

namespace {

int run(const std::string& args) {
  const std::string cmd = "./covf " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return (status >> 8) & 0xff;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fixture {
  std::string dir;

  explicit Fixture(const std::string& name, bool with_dip = false) : dir("cli_" + name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream ts(dir + "/timeseries.csv");
    ts << "fips,date,cases_cum,deaths_cum\n";
    const char* fips[3] = {"10001", "20002", "30003"};
    for (int c = 0; c < 3; ++c) {
      long long cases = 0, deaths = 0;
      for (int day = 0; day < 24; ++day) {
        cases += 3 + 2 * c + (day % 5);
        deaths += (day % 3 == 0) ? 1 : 0;
        if (with_dip && c == 2 && day == 12) cases -= 40;  // cumulative decrease
        char date[16];
        std::snprintf(date, sizeof(date), "2020-04-%02d", day + 1);
        ts << fips[c] << ',' << date << ',' << cases << ',' << deaths << "\n";
      }
    }
    std::ofstream cov(dir + "/covariates.csv");
    cov << "fips,PHLTH,Insurance\n";
    cov << "10001,11.5,61\n20002,14,72.5\n30003,17.25,55\n";
    std::ofstream metro(dir + "/metro.csv");
    metro << "metro_id,name,fips,population\n";
    metro << "M0,Alpha,10001,50000\nM1,Beta,20002,80000\nM2,Gamma,30003,65000\n";
  }

  std::string ingest_args(const std::string& out) const {
    return "ingest --input.timeseries " + dir + "/timeseries.csv --input.covariates " + dir +
           "/covariates.csv --input.metro " + dir + "/metro.csv --out " + out;
  }
};

}  // namespace

TEST_CASE("cli ingest produces a dataset, a report, and a manifest") {
  Fixture fx("ingest");
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  Dataset d = load_dataset(fx.dir + "/out/dataset.json");
  CHECK(d.cities.size() == 3);
  CHECK(d.factor_names == std::vector<std::string>{"PHLTH", "Insurance"});

  RunManifest man = load_manifest(fx.dir + "/out/manifest.json");
  CHECK(man.command == "ingest");
  CHECK(man.inputs.at(fx.dir + "/timeseries.csv") == file_digest(fx.dir + "/timeseries.csv"));
  CHECK(man.outputs.count(fx.dir + "/out/dataset.json") == 1);
  CHECK_FALSE(man.started_at.empty());
  fs::remove_all(fx.dir);
}

TEST_CASE("cli ingest rejects a dipping metro under the reject policy but still succeeds") {
  Fixture fx("dip", true);
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  Dataset d = load_dataset(fx.dir + "/out/dataset.json");
  CHECK(d.cities.size() == 2);
  const std::string report = slurp(fx.dir + "/out/ingest_report.json");
  CHECK(report.find("30003") != std::string::npos);
  fs::remove_all(fx.dir);
}

TEST_CASE("cli ingest exits 2 on schema errors naming the problem") {
  Fixture fx("schema");
  {
    std::ofstream cov(fx.dir + "/covariates.csv");  // drop the fips column
    cov << "PHLTH,Insurance\n11.5,61\n";
  }
  CHECK(run(fx.ingest_args(fx.dir + "/out")) == 2);
  CHECK(run("ingest --input.timeseries missing.csv --input.covariates x --input.metro y") == 2);
  fs::remove_all(fx.dir);
}

TEST_CASE("cli train is reproducible and divergence exits 4") {
  Fixture fx("train");
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  const std::string common = "train --dataset " + fx.dir +
                             "/out/dataset.json --seed 11 --model.epochs 2 "
                             "--model.factors PHLTH --out " +
                             fx.dir;
  REQUIRE(run(common + "/t1") == 0);
  REQUIRE(run(common + "/t2") == 0);
  CHECK(slurp(fx.dir + "/t1/model.covf") == slurp(fx.dir + "/t2/model.covf"));
  CHECK(slurp(fx.dir + "/t1/train_report.csv") == slurp(fx.dir + "/t2/train_report.csv"));

  CHECK(run("train --dataset " + fx.dir +
            "/out/dataset.json --model.epochs 4 --model.learning_rate 1e30 --out " + fx.dir +
            "/diverge") == 4);
  fs::remove_all(fx.dir);
}

TEST_CASE("cli predict writes a 15-day forecast") {
  Fixture fx("predict");
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  REQUIRE(run("train --dataset " + fx.dir + "/out/dataset.json --model.epochs 1 --out " + fx.dir +
              "/m") == 0);
  REQUIRE(run("predict --dataset " + fx.dir + "/out/dataset.json --predict.model " + fx.dir +
              "/m/model.covf --predict.city M1 --out " + fx.dir + "/p") == 0);
  CsvTable t = read_csv(fx.dir + "/p/predictions.csv");
  CHECK(t.header == std::vector<std::string>{"day", "cases", "deaths"});
  CHECK(t.rows.size() == 15);
  for (const auto& row : t.rows) {
    CHECK(std::stod(row[1]) >= 0.0);
    CHECK(std::stod(row[2]) >= 0.0);
  }
  CHECK(run("predict --dataset " + fx.dir + "/out/dataset.json --predict.model " + fx.dir +
            "/m/model.covf --predict.city NOPE --out " + fx.dir + "/p2") == 2);
  fs::remove_all(fx.dir);
}

TEST_CASE("cli sweep output is identical for serial and parallel execution") {
  Fixture fx("sweep");
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  const std::string common = "sweep --dataset " + fx.dir +
                             "/out/dataset.json --seed 5 --model.epochs 1 "
                             "--sweep.lengths 3 --sweep.reps 2 --sweep.factors PHLTH --out " +
                             fx.dir;
  REQUIRE(run(common + "/s1 --parallel 1") == 0);
  REQUIRE(run(common + "/s8 --parallel 8") == 0);
  CHECK(slurp(fx.dir + "/s1/sweep_results.csv") == slurp(fx.dir + "/s8/sweep_results.csv"));
  CHECK_FALSE(fs::exists(fx.dir + "/s1/sweep.incomplete"));

  CsvTable t = read_csv(fx.dir + "/s1/sweep_results.csv");
  CHECK(t.header == std::vector<std::string>{"factor", "input_len", "repetition", "seed",
                                             "rmse_cases", "rmse_death", "cum_error_cases",
                                             "cum_error_death", "wall_ms"});
  CHECK(t.rows.size() == 4);  // (None + PHLTH) x 1 length x 2 reps

  // staleness detection: rerunning with --sweep.if_changed true keeps the file
  const auto before = fs::last_write_time(fx.dir + "/s1/sweep_results.csv");
  REQUIRE(run(common + "/s1 --parallel 1 --sweep.if_changed true") == 0);
  CHECK(fs::last_write_time(fx.dir + "/s1/sweep_results.csv") == before);
  fs::remove_all(fx.dir);
}

TEST_CASE("cli rank emits the documented table") {
  Fixture fx("rank");
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  REQUIRE(run("sweep --dataset " + fx.dir +
              "/out/dataset.json --seed 5 --model.epochs 1 --sweep.lengths 3 --sweep.reps 1 "
              "--sweep.factors PHLTH,Insurance --out " +
              fx.dir + "/s") == 0);
  REQUIRE(run("rank --out " + fx.dir + "/s") == 0);
  CsvTable t = read_csv(fx.dir + "/s/rank_table.csv");
  CHECK(t.header == std::vector<std::string>{"rmse_cases", "rmse_death", "cum_error_cases",
                                             "cum_error_death", "days_in", "risk", "place"});
  REQUIRE(t.rows.size() == 3);
  for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(t.rows[i][6] == std::to_string(i));
  CHECK(run("rank --out " + fx.dir + "/s --rank.key bogus") == 2);
  fs::remove_all(fx.dir);
}

TEST_CASE("cli analyze matches the Pearson oracle") {
  Fixture fx("analyze");
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  REQUIRE(run("analyze --dataset " + fx.dir + "/out/dataset.json --out " + fx.dir + "/a") == 0);

  Dataset d = load_dataset(fx.dir + "/out/dataset.json");
  CsvTable corr = read_csv(fx.dir + "/a/correlation_matrix.csv");
  REQUIRE(corr.header == d.factor_names);
  std::vector<std::vector<double>> cols(d.factor_names.size(),
                                        std::vector<double>(d.cities.size()));
  for (std::size_t c = 0; c < d.cities.size(); ++c)
    for (std::size_t j = 0; j < d.factor_names.size(); ++j)
      cols[j][c] = d.covariates_raw(c, j);
  for (std::size_t i = 0; i < corr.rows.size(); ++i)
    for (std::size_t j = 0; j < corr.rows[i].size(); ++j)
      CHECK(std::stod(corr.rows[i][j]) ==
            doctest::Approx(i == j ? 1.0 : oracle::pearson_reference(cols[i], cols[j]))
                .epsilon(1e-12));

  CHECK(fs::exists(fx.dir + "/a/pairplot.csv"));
  CHECK(fs::exists(fx.dir + "/a/bivariate_PHLTH.csv"));
  fs::remove_all(fx.dir);
}

TEST_CASE("cli report aggregates rankings and correlations into JSON") {
  Fixture fx("report");
  REQUIRE(run(fx.ingest_args(fx.dir + "/out")) == 0);
  REQUIRE(run("sweep --dataset " + fx.dir +
              "/out/dataset.json --model.epochs 1 --sweep.lengths 3 --sweep.reps 1 "
              "--sweep.factors PHLTH --out " +
              fx.dir + "/r") == 0);
  REQUIRE(run("rank --out " + fx.dir + "/r") == 0);
  REQUIRE(run("analyze --dataset " + fx.dir + "/out/dataset.json --out " + fx.dir + "/r") == 0);
  REQUIRE(run("report --out " + fx.dir + "/r") == 0);
  const std::string j = slurp(fx.dir + "/r/report.json");
  CHECK(j.find("\"rankings\"") != std::string::npos);
  CHECK(j.find("\"correlation\"") != std::string::npos);
  CHECK(j.find("\"boxplot\"") != std::string::npos);
  fs::remove_all(fx.dir);
}
