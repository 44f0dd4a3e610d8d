// SPDX-License-Identifier: Apache-2.0
#include <unistd.h>
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "tableprog.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("tqp_capi_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  tqp_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("config set, get, save and load through the C API") {
  tqp_config* cfg = tqp_config_new();
  REQUIRE(cfg);
  CHECK(tqp_config_set(cfg, "d", "64") == TQP_OK);
  CHECK(tqp_config_set(cfg, "lookup_scale", "50") == TQP_OK);
  CHECK(tqp_config_set(cfg, "no_such_key", "1") == TQP_EINVAL);
  CHECK(std::string(tqp_last_error()).find("no_such_key") !=
        std::string::npos);

  char* v = nullptr;
  REQUIRE(tqp_config_get(cfg, "d", &v) == TQP_OK);
  CHECK(take(v) == "64");

  TempDir dir;
  const std::string path = (dir.path / "run.cfg").string();
  CHECK(tqp_config_save(cfg, path.c_str()) == TQP_OK);
  tqp_config* back = tqp_config_load(path.c_str());
  REQUIRE(back);
  char* v2 = nullptr;
  REQUIRE(tqp_config_get(back, "d", &v2) == TQP_OK);
  CHECK(take(v2) == "64");
  tqp_config_free(back);
  tqp_config_free(cfg);

  CHECK(tqp_config_load((dir.path / "missing.cfg").string().c_str()) ==
        nullptr);
}

TEST_CASE("dataset generation and program execution through the C API") {
  TempDir dir;
  const std::string data = (dir.path / "data").string();
  char* report = nullptr;
  REQUIRE(tqp_gen_dataset(21, 30, data.c_str(), &report) == TQP_OK);
  CHECK(take(report).find("generated 30 examples") != std::string::npos);
  CHECK(fs::exists(data + "/manifest.txt"));
  CHECK(fs::exists(data + "/train.jsonl"));
  CHECK(fs::exists(data + "/dev.jsonl"));

  // write a small table and run a program against it
  const std::string table = (dir.path / "five.tsv").string();
  {
    std::ofstream out(table);
    out << "team\tscore\ntext\tnumeric\n";
    out << "ants\t3\nbees\t9\ncats\t5\ndogs\t1\nelks\t7\n";
  }
  char* output = nullptr;
  REQUIRE(tqp_run_program(table.c_str(), "reset/reset/reset/count", nullptr,
                          nullptr, 4, &output) == TQP_OK);
  CHECK(take(output).find("answer: 5") != std::string::npos);

  char* out2 = nullptr;
  REQUIRE(tqp_run_program(table.c_str(),
                          "reset/reset/argmax:score/print:team", nullptr,
                          nullptr, 4, &out2) == TQP_OK);
  CHECK(take(out2).find("answer: bees") != std::string::npos);

  // select via a question phrase, then walk to the next row
  char* out3 = nullptr;
  REQUIRE(tqp_run_program(table.c_str(), "select:team/next/last/print:team",
                          "who comes after cats ?", nullptr, 4,
                          &out3) == TQP_OK);
  CHECK(take(out3).find("answer: dogs") != std::string::npos);

  // pivot flag drives the comparisons
  char* out4 = nullptr;
  const double pivot = 5.0;
  REQUIRE(tqp_run_program(table.c_str(), "reset/reset/>=:score/count", nullptr,
                          &pivot, 4, &out4) == TQP_OK);
  CHECK(take(out4).find("answer: 3") != std::string::npos);

  // validation errors
  char* bad = nullptr;
  CHECK(tqp_run_program(table.c_str(), "reset/reset/count", nullptr, nullptr,
                        4, &bad) == TQP_EINVAL);
  CHECK(tqp_run_program(table.c_str(), "reset/reset/reset/print:nope",
                        nullptr, nullptr, 4, &bad) == TQP_EINVAL);
}

TEST_CASE("evaluate argument validation") {
  CHECK(tqp_evaluate(nullptr, 0, nullptr, "dev", 0, nullptr, nullptr, nullptr,
                     nullptr) == TQP_EINVAL);
  CHECK(tqp_model_load("/nonexistent/model.ckpt") == nullptr);
  CHECK(std::string(tqp_last_error()).size() > 0);
}

TEST_CASE("stats reads evaluation records") {
  TempDir dir;
  const std::string recs = (dir.path / "records.jsonl").string();
  {
    std::ofstream out(recs);
    out << R"({"id":"a","question":"q","program":"reset/reset/reset/count","prediction":{"kind":"number","value":3},"truth":{"kind":"number","value":3},"correct":true})"
        << "\n";
    out << R"({"id":"b","question":"q","program":"select:0/reset/reset/print:1","prediction":{"kind":"entries","value":["x"]},"truth":{"kind":"entries","value":["x"]},"correct":true})"
        << "\n";
  }
  char* report = nullptr;
  REQUIRE(tqp_stats(recs.c_str(), &report) == TQP_OK);
  const std::string text = take(report);
  CHECK(text.find("Only Count") != std::string::npos);
  CHECK(text.find("Select + Print") != std::string::npos);
  CHECK(tqp_stats("/nonexistent/records.jsonl", &report) == TQP_ERUNTIME);
}
