#include <fstream>

#include "byzfed/dataio.hpp"
#include "byzfed/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace byzfed;

namespace {

std::filesystem::path write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_SUITE("dataio") {
  TEST_CASE("csv with and without header") {
    const auto dir = testing::scratch_dir("csv");
    const Matrix a = read_feature_csv(write(dir / "a.csv", "f1,f2\n1,2\n3,4.5\n"));
    CHECK(a.rows() == 2);
    CHECK(a(1, 1) == 4.5);
    const Matrix b = read_feature_csv(write(dir / "b.csv", "1,2\n3,4\n"));
    CHECK(b.rows() == 2);
    CHECK(b(0, 0) == 1.0);
    CsvOptions opts;
    opts.label_column = 0;
    const Matrix c = read_feature_csv(write(dir / "c.csv", "7,1,2\n8,3,4\n"), opts);
    CHECK(c.cols() == 2);
    CHECK(c(1, 0) == 3.0);
  }

  TEST_CASE("csv errors") {
    const auto dir = testing::scratch_dir("csv_err");
    CHECK_THROWS_AS(read_feature_csv(write(dir / "r.csv", "1,2\n3\n")), DataError);
    CHECK_THROWS_AS(read_feature_csv(write(dir / "x.csv", "1,2\n3,abc\n")), DataError);
    CHECK_THROWS_AS(read_feature_csv(dir / "missing.csv"), DataError);
  }

  TEST_CASE("svmlight ignores label and qid") {
    const auto dir = testing::scratch_dir("svm");
    const Matrix m = read_svmlight(write(dir / "s.txt", "2 qid:1 1:0.5 3:2\n0 qid:1 2:1.5\n"));
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(0, 0) == 0.5);
    CHECK(m(0, 1) == 0.0);
    CHECK(m(0, 2) == 2.0);
    CHECK(m(1, 1) == 1.5);
  }

  TEST_CASE("fleet save and load round-trip bit-exactly") {
    FleetConfig c;
    c.m = 6;
    c.n = 4;
    c.d = 3;
    c.K = 2;
    c.alpha = 0.2;
    const Fleet f = generate_fleet(c);
    const auto dir = testing::scratch_dir("fleet");
    save_fleet(dir, f.shards, f.truth);
    const auto back = load_fleet(dir);
    REQUIRE(back.shards.size() == f.shards.size());
    CHECK(back.truth.labels == f.truth.labels);
    for (std::size_t k = 0; k < f.truth.centers.size(); ++k) CHECK(back.truth.centers[k] == f.truth.centers[k]);
    for (std::size_t i = 0; i < f.shards.size(); ++i) {
      CHECK(back.shards[i].X == f.shards[i].X);
      CHECK(back.shards[i].y == f.shards[i].y);
      CHECK(back.shards[i].byzantine == f.shards[i].byzantine);
    }
  }

  TEST_CASE("atomic write replaces content") {
    const auto dir = testing::scratch_dir("atomic");
    write_file_atomic(dir / "f.txt", "one");
    write_file_atomic(dir / "f.txt", "two");
    std::ifstream in(dir / "f.txt");
    std::string s;
    in >> s;
    CHECK(s == "two");
  }
}
