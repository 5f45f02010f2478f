#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct CommandResult {
  int exit_code = -1;
  std::string stdout_text;
  std::string stderr_text;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CommandResult run_cli(const std::string& args, bool raw_command = false) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path();
  const fs::path out = dir / ("uqpe_cli_out_" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("uqpe_cli_err_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string command = (raw_command ? args : std::string(UQPE_CLI_PATH) + " " + args) + " > " +
                              out.string() + " 2> " + err.string();
  const int raw = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.stdout_text = slurp(out);
  result.stderr_text = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return result;
}

fs::path write_line_csv(int n) {
  const fs::path path = fs::temp_directory_path() / "uqpe_cli_line.csv";
  std::ofstream out(path);
  out << "y,x\n";
  for (int i = 0; i < n; ++i) out << 1 + i << ',' << i << '\n';
  return path;
}

const std::string kEngelCsv = std::string(UQPE_TEST_DATA_DIR) + "/engel_synthetic.csv";

} // namespace

TEST_SUITE("cli") {
  TEST_CASE("estimate on exact-line data: NW exactly 1, bootstrap se 0") {
    const fs::path data = write_line_csv(60);
    const CommandResult r = run_cli("estimate --data " + data.string() +
                                    " --outcome y --target x --grid 24 --bootstrap 40 --seed 9");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.stdout_text);
    CHECK(doc.contains("config"));
    CHECK(doc["config"]["seed"] == 9);
    REQUIRE(doc["results"].size() == 5); // default tau list
    for (const auto& record : doc["results"]) {
      CHECK(record["estimator"] == "nw");
      CHECK(record["estimate"].get<double>() == 1.0);
      CHECK(record["inference"]["se"].get<double>() == 0.0);
      CHECK(record["n"] == 60);
    }
  }

  TEST_CASE("estimate with baselines emits one record per estimator and tau") {
    const CommandResult r = run_cli(
        "estimate --data " + kEngelCsv +
        " --outcome log_food --target log_income --tau 0.25,0.5,0.75 --grid 24 --bootstrap 0 "
        "--baselines all --seed 4");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.stdout_text);
    CHECK(doc["results"].size() == 3 * 5); // nw + 4 baselines
    int rif_records = 0;
    for (const auto& record : doc["results"]) {
      if (record.contains("variant")) {
        ++rif_records;
        CHECK(record["density_at_q"].get<double>() > 0.0);
      }
    }
    CHECK(rif_records == 3 * 4);
  }

  TEST_CASE("missing column exits 2 and names the error") {
    const CommandResult r = run_cli("estimate --data " + kEngelCsv +
                                    " --outcome log_food --target nope --bootstrap 0");
    CHECK(r.exit_code == 2);
    CHECK(r.stderr_text.find("MissingColumn") != std::string::npos);
  }

  TEST_CASE("single-observation dataset is rejected with exit 2") {
    const fs::path path = fs::temp_directory_path() / "uqpe_cli_one.csv";
    {
      std::ofstream out(path);
      out << "y,x\n1,2\n";
    }
    const CommandResult r =
        run_cli("estimate --data " + path.string() + " --outcome y --target x --bootstrap 0");
    CHECK(r.exit_code == 2);
  }

  TEST_CASE("collinear control exits 3 (numeric failure)") {
    const fs::path path = fs::temp_directory_path() / "uqpe_cli_collinear.csv";
    {
      std::ofstream out(path);
      out << "y,x,z\n";
      for (int i = 0; i < 30; ++i) out << i << ',' << i << ',' << 2 * i << '\n';
    }
    const CommandResult r = run_cli("estimate --data " + path.string() +
                                    " --outcome y --target x --controls z --bootstrap 0");
    CHECK(r.exit_code == 3);
    CHECK(r.stderr_text.find("RankDeficientDesign") != std::string::npos);
  }

  TEST_CASE("outputs are byte-identical across reruns and thread counts") {
    const fs::path out1 = fs::temp_directory_path() / "uqpe_cli_rep1.json";
    const fs::path out2 = fs::temp_directory_path() / "uqpe_cli_rep2.json";
    const std::string base = "estimate --data " + kEngelCsv +
                             " --outcome log_food --target log_income --tau 0.25,0.5 --grid 24 "
                             "--bootstrap 30 --seed 31 ";
    REQUIRE(run_cli(base + "--threads 1 --out " + out1.string()).exit_code == 0);
    REQUIRE(run_cli(base + "--threads 4 --out " + out2.string()).exit_code == 0);
    CHECK(slurp(out1) == slurp(out2));
    fs::remove(out1);
    fs::remove(out2);
  }

  TEST_CASE("process export has one row per eta level") {
    const fs::path proc = fs::temp_directory_path() / "uqpe_cli_process.csv";
    const CommandResult r = run_cli("estimate --data " + kEngelCsv +
                                    " --outcome log_food --target log_income --grid 9 --bootstrap 0 "
                                    "--export-process " + proc.string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(proc);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# ", 0) == 0); // config echo
    std::getline(in, line);
    CHECK(line == "eta,const,log_income");
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 9);
    fs::remove(proc);
  }

  TEST_CASE("csv format emits the fixed column order") {
    const CommandResult r = run_cli("estimate --data " + kEngelCsv +
                                    " --outcome log_food --target log_income --tau 0.5 --grid 9 "
                                    "--bootstrap 10 --format csv --seed 2");
    REQUIRE(r.exit_code == 0);
    std::stringstream ss(r.stdout_text);
    std::string line;
    std::getline(ss, line);
    CHECK(line.rfind("# {", 0) == 0);
    std::getline(ss, line);
    CHECK(line ==
          "estimator,tau,estimate,q_tau,bandwidth,method,n,grid_m,boundary_hits,"
          "se,gaussian_lo,gaussian_hi,percentile_lo,percentile_hi,B,density_at_q");
  }

  TEST_CASE("match emits monotone xi profiles on location-style data") {
    const fs::path out = fs::temp_directory_path() / "uqpe_cli_match.csv";
    const CommandResult r = run_cli("match --data " + kEngelCsv +
                                    " --outcome log_food --target log_income "
                                    "--tau 0.25,0.5,0.75 --grid 24 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line); // config echo
    std::getline(in, line);
    CHECK(line == "tau,log_income,xi,matched_slope");
    // xi must be nonincreasing in income within each tau (positive slopes)
    struct Row {
      double tau, x, xi;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      Row row{};
      double slope;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &row.tau, &row.x, &row.xi, &slope) == 4);
      rows.push_back(row);
    }
    CHECK(rows.size() == 3 * 2000);
    for (double tau : {0.25, 0.5, 0.75}) {
      std::vector<Row> slice;
      for (const Row& row : rows)
        if (row.tau == tau) slice.push_back(row);
      std::sort(slice.begin(), slice.end(), [](const Row& a, const Row& b) { return a.x < b.x; });
      for (std::size_t i = 1; i < slice.size(); ++i) CHECK(slice[i].xi <= slice[i - 1].xi + 1e-12);
    }
    fs::remove(out);
  }

  TEST_CASE("simulate smoke run writes the tables layout") {
    const fs::path out = fs::temp_directory_path() / "uqpe_cli_sim.csv";
    const CommandResult r = run_cli(
        "simulate --dgp loc-normal --n 250 --reps 5 --taus 0.5 --estimators nw,rif-ols-cubic "
        "--seed 42 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# {", 0) == 0);
    std::getline(in, line);
    CHECK(line == "estimator,tau,n,bias,variance,mse");
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2);
    fs::remove(out);
  }

  TEST_CASE("simulate coverage smoke run writes the coverage layout") {
    const fs::path out = fs::temp_directory_path() / "uqpe_cli_cov.csv";
    const CommandResult r = run_cli(
        "simulate --dgp locscale-normal --n 250 --reps 4 --taus 0.5 --coverage --B 10 --seed 3 "
        "--out " + out.string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line); // config echo
    std::getline(in, line);
    CHECK(line == "tau,n,gaussian,percentile");
    std::getline(in, line);
    double tau, gaussian, percentile;
    long n;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%ld,%lf,%lf", &tau, &n, &gaussian, &percentile) == 4);
    CHECK(tau == 0.5);
    CHECK(n == 250);
    CHECK(gaussian >= 0.0);
    CHECK(gaussian <= 1.0);
    fs::remove(out);
  }

  TEST_CASE("match on zero-noise data degenerates to the boundary branches") {
    // every fitted curve row is constant, so the bracket rule can only fire
    // its epsilon / eta_m branches; the export is still monotone in x and
    // the heavy clamping triggers the grid warning
    const fs::path data = write_line_csv(40);
    const fs::path out = fs::temp_directory_path() / "uqpe_cli_line_match.csv";
    const CommandResult r = run_cli("match --data " + data.string() +
                                    " --outcome y --target x --tau 0.5 --grid 9 --out " +
                                    out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.stderr_text.find("clamped") != std::string::npos);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line); // config echo
    std::getline(in, line); // header
    int low = 0, high = 0;
    while (std::getline(in, line)) {
      double tau, x, xi, slope;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &tau, &x, &xi, &slope) == 4);
      CHECK(slope == 1.0);
      if (xi == 0.1) ++low;       // epsilon = eta_1 = 0.1 on the m=9 grid
      else if (xi == 0.9) ++high; // eta_m
      else FAIL("interior level on degenerate curves: ", xi);
    }
    CHECK(low + high == 40);
    CHECK(high == 20); // observations at or below the sample median of y
    fs::remove(out);
  }

  TEST_CASE("every built-in dgp name parses and runs") {
    for (const char* dgp : {"loc-normal", "loc-chi2", "locscale-normal", "locscale-chi2",
                            "locscale-normal-w", "locscale-normal-wcorr"}) {
      const fs::path out = fs::temp_directory_path() / "uqpe_cli_dgp.csv";
      const CommandResult r = run_cli("simulate --dgp " + std::string(dgp) +
                                      " --n 250 --reps 2 --taus 0.5 --estimators nw --seed 8 --out " +
                                      out.string());
      CAPTURE(dgp);
      CHECK(r.exit_code == 0);
      fs::remove(out);
    }
  }

  TEST_CASE("unknown dgp and bad flags exit 2") {
    CHECK(run_cli("simulate --dgp bogus --reps 3").exit_code == 2);
    CHECK(run_cli("estimate --data missing.csv").exit_code == 2); // missing required flags
    CHECK(run_cli("bogus-subcommand").exit_code == 2);
  }

  TEST_CASE("UQPE_THREADS env var is honored as the --threads fallback") {
    const fs::path out1 = fs::temp_directory_path() / "uqpe_cli_env1.json";
    const fs::path out2 = fs::temp_directory_path() / "uqpe_cli_env2.json";
    const std::string base = "estimate --data " + kEngelCsv +
                             " --outcome log_food --target log_income --tau 0.5 --grid 9 "
                             "--bootstrap 20 --seed 12 ";
    REQUIRE(run_cli("UQPE_THREADS=3 " + std::string(UQPE_CLI_PATH) + " " + base + "--out " +
                    out1.string(), true)
                .exit_code == 0);
    REQUIRE(run_cli(base + "--threads 1 --out " + out2.string()).exit_code == 0);
    CHECK(slurp(out1) == slurp(out2));
    fs::remove(out1);
    fs::remove(out2);
  }
}
