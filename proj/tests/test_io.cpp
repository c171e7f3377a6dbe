#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "clex/io.hpp"

using namespace clex;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "clex_test_io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("matrix csv round trip keeps names and exact values") {
  auto dir = scratch("roundtrip");
  Matrix m(3, 2);
  m << 0.1, -2.5e-17, 1.0 / 3.0, 7e300, -0.0, 12345.678;
  DataMatrix data(m, {"alpha", "beta"});
  io::write_matrix_csv(dir / "m.csv", data);
  auto back = io::read_matrix_csv(dir / "m.csv");
  CHECK(back.feature_names() == data.feature_names());
  CHECK(back.values() == data.values());
}

TEST_CASE("matrix csv without header") {
  auto dir = scratch("noheader");
  io::write_text(dir / "m.csv", "1,2\n3,4\n5,6\n");
  auto back = io::read_matrix_csv(dir / "m.csv");
  CHECK_FALSE(back.has_names());
  CHECK(back.rows() == 3);
  CHECK(back.values()(2, 1) == 6.0);
}

TEST_CASE("matrix csv errors") {
  auto dir = scratch("errors");
  CHECK_THROWS_AS(io::read_matrix_csv(dir / "missing.csv"), Error);
  io::write_text(dir / "ragged.csv", "a,b\n1,2\n3\n");
  try {
    io::read_matrix_csv(dir / "ragged.csv");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
  io::write_text(dir / "text.csv", "a,b\n1,2\n3,x\n");
  CHECK_THROWS_AS(io::read_matrix_csv(dir / "text.csv"), Error);
}

TEST_CASE("labels csv round trip") {
  auto dir = scratch("labels");
  std::vector<int> labels{0, 1, -1, 3, 1};
  io::write_labels_csv(dir / "l.csv", labels);
  CHECK(io::read_labels_csv(dir / "l.csv") == labels);
}

TEST_CASE("grouping from csv follows first appearance and feature names") {
  auto dir = scratch("grouping");
  DataMatrix data(Matrix::Zero(2, 4), {"a", "b", "c", "d"});
  io::write_text(dir / "g.csv", "feature,group\nc,DMN\na,VSN\nb,DMN\nd,CBN\n");
  auto g = io::read_grouping(dir / "g.csv", data);
  // ids follow the data's column order, not the file's row order
  CHECK(g.group_of() == std::vector<int>{0, 1, 1, 2});
  CHECK(g.group_labels() == std::vector<std::string>{"VSN", "DMN", "CBN"});

  io::write_grouping_csv(dir / "g2.csv", g, data);
  auto again = io::read_grouping(dir / "g2.csv", data);
  CHECK(again.group_of() == g.group_of());
  CHECK(again.group_labels() == g.group_labels());
}

TEST_CASE("grouping from json array") {
  auto dir = scratch("grouping_json");
  DataMatrix data(Matrix::Zero(2, 3));
  io::write_text(dir / "g.json", "[0, 1, 0]");
  auto g = io::read_grouping(dir / "g.json", data);
  CHECK(g.group_of() == std::vector<int>{0, 1, 0});
  io::write_text(dir / "bad.json", "[0, 1]");
  CHECK_THROWS_AS(io::read_grouping(dir / "bad.json", data), Error);
}

TEST_CASE("panel directory") {
  auto dir = scratch("panel");
  fs::create_directories(dir / "subjects");
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int s = 0; s < 3; ++s) {
    std::string text = "c0,c1,c2\n";
    for (int t = 0; t < 10; ++t) {
      text += io::format_double(n(rng)) + "," + io::format_double(n(rng)) + "," + io::format_double(n(rng)) + "\n";
    }
    io::write_text(dir / "subjects" / ("sub" + std::to_string(s) + ".csv"), text);
  }
  io::write_text(dir / "domains.json", R"(["VSN", "DMN", "VSN"])");
  auto panel = io::read_panel(dir / "subjects", dir / "domains.json");
  CHECK(panel.subjects.size() == 3);
  CHECK(panel.component_domains == std::vector<int>{0, 1, 0});
  CHECK(panel.domain_labels == std::vector<std::string>{"VSN", "DMN"});

  io::write_text(dir / "domains_obj.json", R"({"2": "A", "0": "B", "1": "A"})");
  auto by_index = io::read_panel(dir / "subjects", dir / "domains_obj.json");
  CHECK(by_index.component_domains == std::vector<int>{0, 1, 1});
  CHECK(by_index.domain_labels == std::vector<std::string>{"B", "A"});
}

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, (i % 40) - 20);
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.5) == "0.5");
}
