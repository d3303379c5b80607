#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mplab/config.hpp"
#include "mplab/csv.hpp"
#include "mplab/error.hpp"

using namespace mplab;

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config round-trips and hashes independently of key order") {
  const auto a = json::parse(R"({"experiment": "multiplier", "trials": 7, "master_seed": 99,
    "grids": {"n": [64, 1024], "N": "n", "u": [2, 4]}, "tolerances": {"x": 1}, "output_dir": "a"})");
  const auto b = json::parse(R"({"output_dir": "b", "tolerances": {"x": 1}, "master_seed": 99,
    "grids": {"u": [2, 4], "N": "n", "n": [64, 1024]}, "trials": 7, "experiment": "multiplier"})");
  const auto ca = ExperimentConfig::from_json(a);
  const auto cb = ExperimentConfig::from_json(b);
  CHECK(ca.content_hash() == cb.content_hash());
  CHECK(ca.content_hash().size() == 64);
  const auto again = ExperimentConfig::from_json(ca.to_json());
  CHECK(again.to_json() == ca.to_json());
  CHECK(again.content_hash() == ca.content_hash());

  auto c = json(a);
  c["trials"] = 8;
  CHECK(ExperimentConfig::from_json(c).content_hash() != ca.content_hash());
  c = a;
  c["master_seed"] = 100;
  CHECK(ExperimentConfig::from_json(c).content_hash() != ca.content_hash());
}

TEST_CASE("large master seeds survive") {
  const auto cfg = ExperimentConfig::from_json(
      json::parse(R"({"experiment": "widths", "master_seed": 18446744073709551615})"));
  CHECK(cfg.master_seed == std::numeric_limits<std::uint64_t>::max());
  CHECK(ExperimentConfig::from_json(cfg.to_json()).master_seed == cfg.master_seed);
}

TEST_CASE("config errors") {
  auto bad = [](const char* text) { return ExperimentConfig::from_json(json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"trials": 1})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"experiment": "nonsense"})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"experiment": "widths", "trials": -1})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"experiment": "widths", "master_seed": -3})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"experiment": "widths", "colour": "red"})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"experiment": "widths", "grids": [1]})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("tail parameter rule") {
  CHECK(resolve_tail_param(json(4.5), 10) == 4.5);
  CHECK(resolve_tail_param(json("2ln(n)"), 1024) == doctest::Approx(2.0 * std::log(1024.0)));
  CHECK(resolve_tail_param(json("3ln(n)"), 100) == doctest::Approx(3.0 * std::log(100.0)));
  CHECK_THROWS_AS(resolve_tail_param(json("ln(m)"), 10), ConfigError);
}

TEST_CASE("spec JSON round-trips") {
  const auto d = distribution_from_json(json::parse(R"j({"family": "StudentT", "tail_param": "2ln(n)"})j"), 64);
  CHECK(d.tail_param() == doctest::Approx(2.0 * std::log(64.0)));
  const auto d2 = distribution_from_json(to_json(d), 64);
  CHECK(d2.family() == d.family());
  CHECK(d2.tail_param() == d.tail_param());

  const auto nz = noise_from_json(json::parse(R"({"family": "SymmetricPareto", "q0": 3, "lq_norm": 2})"));
  CHECK(nz.q0() == 3.0);
  CHECK(nz.lq(3.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(noise_from_json(json::parse(R"({"family": "Gaussian", "dependence": "heteroscedastic"})")),
                  ConfigError);

  for (const char* text : {R"({"family": "L1Ball", "rho": 2})", R"({"family": "L2Ball", "r": 0.5})",
                           R"({"family": "SparseCap", "s": 3, "r": 2})",
                           R"({"family": "L1CapL2", "rho": 1, "r": 0.3})",
                           R"({"family": "PermutationPolytope", "weights": "inverse_sqrt"})"}) {
    const auto set = index_set_from_json(json::parse(text), 9);
    const auto back = index_set_from_json(to_json(set), 9);
    CHECK(back.describe() == set.describe());
    CHECK(back.d2() == set.d2());
  }
  CHECK_THROWS_AS(index_set_from_json(json::parse(R"({"family": "SparseCap"})"), 9), ConfigError);
  CHECK_THROWS_AS(index_set_from_json(json::parse(R"({"family": "PermutationPolytope", "weights": [1, 2]})"), 9),
                  ConfigError);
}

TEST_CASE("doubles round-trip through CSV text") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> expo(-300, 300);
  for (int k = 0; k < 2000; ++k) {
    const double v = std::ldexp(std::uniform_real_distribution<double>(-1, 1)(gen), int(expo(gen)));
    CHECK(std::stod(csv::format_double(v)) == v);
  }
  CHECK(csv::format_double(0.1) == "0.1");
  CHECK(csv::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(csv::format_bool(true) == "1");
}

TEST_CASE("CSV tables round-trip") {
  csv::Table t{{"a", "b", "c"}, {{"1", "x", csv::join({"2", "4", "8"})}, {"2.5", "y", ""}}};
  const auto back = csv::parse(t.to_string());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == 1);
  CHECK(back.column("zzz") == -1);
  CHECK(csv::split(back.rows[0][2], ';') == std::vector<std::string>{"2", "4", "8"});

  const csv::Table empty{{"x", "y"}, {}};
  CHECK(empty.to_string() == "x,y\n");
  CHECK(csv::parse(empty.to_string()).rows.empty());
}
