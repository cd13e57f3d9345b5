#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "covf/config.hpp"
#include "covf/manifest.hpp"

using namespace covf;

TEST_CASE("config parses sections, comments, and typed accessors") {
  const std::string text =
      "# top-level\n"
      "out = runs/demo\n"
      "\n"
      "[model]\n"
      "epochs = 200\n"
      "lr = 0.001\n"
      "dropout=0.2\n"
      "; another comment\n"
      "[sweep]\n"
      "parallel = 4\n"
      "if_changed = true\n";
  Config cfg = parse_config(text);
  CHECK(cfg.get("out") == "runs/demo");
  CHECK(cfg.get_int("model.epochs", 0) == 200);
  CHECK(cfg.get_double("model.lr", 0.0) == 0.001);
  CHECK(cfg.get_double("model.dropout", 0.0) == 0.2);
  CHECK(cfg.get_int("sweep.parallel", 1) == 4);
  CHECK(cfg.get_bool("sweep.if_changed", false));
  CHECK(cfg.get("missing", "fallback") == "fallback");
  CHECK(cfg.get_int("missing", 7) == 7);
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS_AS(parse_config("[open\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config("novalue\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_config("= orphan\n"), std::runtime_error);
  Config cfg = parse_config("k = abc\n");
  CHECK_THROWS_AS(cfg.get_int("k", 0), std::runtime_error);
  CHECK_THROWS_AS(cfg.get_double("k", 0.0), std::runtime_error);
  CHECK_THROWS_AS(cfg.get_bool("k", false), std::runtime_error);
}

TEST_CASE("command-line overrides win over file values") {
  Config cfg = parse_config("[model]\nepochs = 200\nseed = 1\n");
  apply_overrides(cfg, {{"model.epochs", "5"}, {"model.batch", "16"}});
  CHECK(cfg.get_int("model.epochs", 0) == 5);
  CHECK(cfg.get_int("model.seed", 0) == 1);
  CHECK(cfg.get_int("model.batch", 0) == 16);
}

TEST_CASE("digests are stable content hashes") {
  CHECK(bytes_digest("") == bytes_digest(""));
  CHECK(bytes_digest("a") != bytes_digest("b"));
  CHECK(bytes_digest("abc").size() == 16);

  const std::string path = "test_digest.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "payload";
  }
  CHECK(file_digest(path) == bytes_digest("payload"));
  CHECK_THROWS_AS(file_digest("no_such_file.bin"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("manifest round trip") {
  RunManifest m;
  m.tool_version = "0.1.0";
  m.command = "sweep";
  m.config["sweep.reps"] = "3";
  m.inputs["dataset.json"] = "0123456789abcdef";
  m.outputs["sweep_results.csv"] = "fedcba9876543210";
  m.started_at = current_timestamp();
  m.finished_at = current_timestamp();

  const std::string path = "test_manifest.json";
  write_manifest(path, m);
  RunManifest back = load_manifest(path);
  CHECK(back.tool_version == m.tool_version);
  CHECK(back.command == m.command);
  CHECK(back.config == m.config);
  CHECK(back.inputs == m.inputs);
  CHECK(back.outputs == m.outputs);
  CHECK(back.started_at == m.started_at);
  CHECK(back.finished_at == m.finished_at);
  std::remove(path.c_str());
}
