// End-to-end tests of the command-line tool: each case spawns the built
// binary (path injected at compile time) against small generated CSVs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ferns/dataset.hpp"
#include "ferns/ensemble.hpp"
#include "ferns/model_io.hpp"
#include "ferns/predict.hpp"
#include "support/synthetic.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

// run a command, capturing stdout; stderr goes to a scratch file the caller
// may read separately
RunResult run(const std::string& args, const std::string& stderr_path = "") {
  std::string cmd = std::string(FERNS_CLI_PATH) + " " + args + " 2>" +
                    (stderr_path.empty() ? "/dev/null" : stderr_path);
  RunResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.out.append(buf.data(), got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// 24 objects, one continuous + one categorical attribute, 2 classes
std::string small_csv() {
  std::string text = "x,color,label\n";
  for (int i = 0; i < 12; ++i) {
    text += std::to_string(i) + "." + std::to_string(i % 10) +
            (i % 2 ? ",red,yes\n" : ",blue,yes\n");
  }
  for (int i = 0; i < 12; ++i) {
    text += std::to_string(i + 50) + ".5" + (i % 2 ? ",red,no\n" : ",green,no\n");
  }
  return text;
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) lines += c == '\n';
  return lines;
}

}  // namespace

TEST_CASE("missing required flags is a usage error") {
  const auto r = run("train --decision label --out /tmp/x.json");
  CHECK(r.exit_code == 2);
  const auto r2 = run("nonsense");
  CHECK(r2.exit_code == 2);
  const auto help = run("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("train") != std::string::npos);
}

TEST_CASE("train is reproducible and writes byte-identical models") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());

  const std::string flags = "train --data " + csv +
                            " --decision label --ferns 50 --depth 3 --seed 9";
  const auto r1 = run(flags + " --out " + dir.path("m1.json"));
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.out.find("oob_error:") != std::string::npos);
  CHECK(r1.out.find("oob_covered:") != std::string::npos);

  const auto r2 = run(flags + " --out " + dir.path("m2.json"));
  REQUIRE(r2.exit_code == 0);
  CHECK(r1.out == r2.out);
  CHECK(slurp(dir.path("m1.json")) == slurp(dir.path("m2.json")));

  // worker count cannot change the artifact
  const auto r3 = run(flags + " --workers 8 --out " + dir.path("m3.json"));
  REQUIRE(r3.exit_code == 0);
  CHECK(slurp(dir.path("m1.json")) == slurp(dir.path("m3.json")));
}

TEST_CASE("a saved model predicts exactly like the in-process model") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto model_path = dir.path("m.json");
  REQUIRE(run("train --data " + csv + " --decision label --ferns 40 --depth 3"
              " --seed 4 --out " + model_path).exit_code == 0);

  // via the CLI
  const auto predicted = run("predict --model " + model_path + " --data " + csv +
                             " --decision label --scores");
  REQUIRE(predicted.exit_code == 0);

  // in process
  const ferns::Dataset data = ferns::load_csv(csv, "label");
  const ferns::Model model = ferns::load_model(model_path).model;
  ferns::Scorer scorer(model, data);
  std::istringstream lines(predicted.out);
  std::string line;
  std::uint32_t wrong = 0;
  for (std::size_t i = 0; i < data.n_objects(); ++i) {
    REQUIRE(std::getline(lines, line));
    const auto label = line.substr(0, line.find(','));
    const auto want = scorer.classify(i);
    CHECK(label == model.class_names[want]);
    wrong += want != data.decision[i];
  }
  // trailing test-error line
  REQUIRE(std::getline(lines, line));
  char expected[32];
  std::snprintf(expected, sizeof(expected), "error: %.4f",
                double(wrong) / double(data.n_objects()));
  CHECK(line == expected);
}

TEST_CASE("uniform priors keep labels; malformed priors are usage errors") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto model_path = dir.path("m.json");
  REQUIRE(run("train --data " + csv + " --decision label --ferns 30 --depth 2"
              " --seed 1 --out " + model_path).exit_code == 0);

  const auto plain = run("predict --model " + model_path + " --data " + csv);
  const auto uniform =
      run("predict --model " + model_path + " --data " + csv + " --prior 0.5,0.5");
  REQUIRE(plain.exit_code == 0);
  REQUIRE(uniform.exit_code == 0);
  CHECK(plain.out == uniform.out);

  CHECK(run("predict --model " + model_path + " --data " + csv +
            " --prior 0.2,0.3,0.5").exit_code == 2);
  CHECK(run("predict --model " + model_path + " --data " + csv +
            " --prior 0.7,0.7").exit_code == 2);

  // a skewed prior may flip labels but must keep the line count
  const auto skewed = run("predict --model " + model_path + " --data " + csv +
                          " --prior 0.999999,0.000001");
  REQUIRE(skewed.exit_code == 0);
  CHECK(count_lines(skewed.out) == count_lines(plain.out));
}

TEST_CASE("predicting with mismatched schema fails with a diagnostic") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto model_path = dir.path("m.json");
  REQUIRE(run("train --data " + csv + " --decision label --ferns 30 --depth 3"
              " --seed 1 --out " + model_path).exit_code == 0);

  // unknown categorical level
  const auto bad = synthetic::write_file(dir, "bad.csv",
                                         "x,color\n1.0,purple\n");
  const auto stderr_path = dir.path("err.txt");
  const auto r = run("predict --model " + model_path + " --data " + bad,
                     stderr_path);
  CHECK(r.exit_code == 1);
  const auto message = slurp(stderr_path);
  CHECK(message.find("purple") != std::string::npos);
  CHECK(message.find("color") != std::string::npos);

  // missing attribute column
  const auto missing = synthetic::write_file(dir, "missing.csv", "x\n1.0\n");
  const auto r2 = run("predict --model " + model_path + " --data " + missing,
                      stderr_path);
  CHECK(r2.exit_code == 1);
  CHECK(slurp(stderr_path).find("color") != std::string::npos);
}

TEST_CASE("model files with a wrong format version are rejected") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto model_path = dir.path("m.json");
  REQUIRE(run("train --data " + csv + " --decision label --ferns 10 --depth 2"
              " --seed 1 --out " + model_path).exit_code == 0);

  std::string text = slurp(model_path);
  const std::string needle = "\"format_version\": 1";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "\"format_version\": 9");
  const auto tampered = dir.path("tampered.json");
  std::ofstream(tampered, std::ios::binary) << text;

  const auto stderr_path = dir.path("err.txt");
  const auto r = run("predict --model " + tampered + " --data " + csv,
                     stderr_path);
  CHECK(r.exit_code == 1);
  CHECK(slurp(stderr_path).find("version") != std::string::npos);
}

TEST_CASE("crossval emits a parseable CSV table with summary rows") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto r = run("crossval --data " + csv +
                     " --decision label --ferns 20 --depth 2 --folds 3"
                     " --test-fraction 0.25 --seed 2");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.out);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "fold,test_error");
  int rows = 0;
  bool saw_mean = false, saw_sd = false;
  while (std::getline(lines, line)) {
    CHECK(line.find(',') != std::string::npos);
    saw_mean |= line.rfind("mean,", 0) == 0;
    saw_sd |= line.rfind("stddev,", 0) == 0;
    ++rows;
  }
  CHECK(rows == 5);  // 3 folds + mean + stddev
  CHECK(saw_mean);
  CHECK(saw_sd);

  // identical rerun
  const auto again = run("crossval --data " + csv +
                         " --decision label --ferns 20 --depth 2 --folds 3"
                         " --test-fraction 0.25 --seed 2");
  CHECK(again.out == r.out);
}

TEST_CASE("sweep prints one row per depth and flags the best one") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto r = run("sweep --data " + csv +
                     " --decision label --ferns 20 --depths 3:3 --reps 2 --seed 5");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.out);
  std::string header, row, extra;
  REQUIRE(std::getline(lines, header));
  CHECK(header == "depth,mean_oob_error,stddev_oob_error,is_best");
  REQUIRE(std::getline(lines, row));
  CHECK(row.rfind("3,", 0) == 0);
  CHECK(row.substr(row.size() - 2) == ",1");  // single depth is the best depth
  CHECK(!std::getline(lines, extra));

  CHECK(run("sweep --data " + csv +
            " --decision label --depths 0:3 --reps 1").exit_code == 2);
  CHECK(run("sweep --data " + csv +
            " --decision label --depths banana --reps 1").exit_code == 2);
}

TEST_CASE("tsv format swaps the delimiter") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto r = run("sweep --data " + csv +
                     " --decision label --ferns 10 --depths 2:2 --reps 1"
                     " --seed 1 --format tsv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find('\t') != std::string::npos);
  CHECK(run("sweep --data " + csv + " --decision label --depths 2:2"
            " --format yaml").exit_code == 2);
}

TEST_CASE("bench reports one timing row per phase") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(dir, "d.csv", small_csv());
  const auto r = run("bench --data " + csv +
                     " --decision label --ferns 20 --depth 2 --reps 1 --seed 3");
  REQUIRE(r.exit_code == 0);
  std::istringstream lines(r.out);
  std::string header, train_row, importance_row;
  REQUIRE(std::getline(lines, header));
  CHECK(header == "phase,ferns,depth,reps,mean_seconds,stddev_seconds");
  REQUIRE(std::getline(lines, train_row));
  CHECK(train_row.rfind("train,20,2,1,", 0) == 0);
  REQUIRE(std::getline(lines, importance_row));
  CHECK(importance_row.rfind("train_with_importance,20,2,1,", 0) == 0);
}

TEST_CASE("ingestion failures exit with code 1 and a diagnostic") {
  synthetic::TempDir dir;
  const auto ragged = synthetic::write_file(dir, "r.csv", "a,b\n1,2\n3\n");
  const auto stderr_path = dir.path("err.txt");
  CHECK(run("train --data " + ragged + " --decision b --out " +
            dir.path("m.json"), stderr_path).exit_code == 1);
  CHECK(slurp(stderr_path).find("fields") != std::string::npos);

  CHECK(run("train --data " + dir.path("absent.csv") + " --decision y --out " +
            dir.path("m.json")).exit_code == 1);
}

TEST_CASE("type hints flow through the CLI") {
  synthetic::TempDir dir;
  const auto csv = synthetic::write_file(
      dir, "h.csv", "code,label\n1,yes\n2,no\n1,yes\n3,no\n2,yes\n1,no\n");
  const auto model_path = dir.path("m.json");
  REQUIRE(run("train --data " + csv + " --decision label --categorical code"
              " --ferns 10 --depth 1 --seed 1 --out " + model_path)
              .exit_code == 0);
  const ferns::Model model = ferns::load_model(model_path).model;
  REQUIRE(model.schema.size() == 1);
  CHECK(model.schema[0].kind == ferns::AttrKind::Categorical);
  CHECK(model.schema[0].levels == std::vector<std::string>{"1", "2", "3"});

  // conflicting hints are a usage error
  CHECK(run("train --data " + csv + " --decision label --categorical code"
            " --continuous code --ferns 5 --depth 1 --out " +
            dir.path("n.json")).exit_code == 2);
}
