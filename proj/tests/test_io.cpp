#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "covloc/io.hpp"
#include "covloc/report.hpp"
#include "generators.hpp"
#include "nine_state.hpp"

using namespace covloc;

namespace {

void expect_format_error(const std::string& text, bool coo, std::size_t line, std::size_t column) {
  std::istringstream in(text);
  try {
    coo ? io::read_coo(in) : io::read_csv(in);
    FAIL() << "expected FormatError for: " << text;
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), column) << e.what();
  }
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  for (std::uint64_t t = 0; t < 10; ++t) {
    auto rng = gen::rng_for(60, t);
    const Matrix m = gen::normal_matrix(rng, gen::size(rng, 1, 20), gen::size(rng, 1, 20)) * 1e3;
    std::stringstream s;
    s.precision(17);
    io::write_csv(s, m);
    EXPECT_EQ(io::read_csv(s), m);
  }
}

TEST(Coo, RoundTripKeepsNonzerosOnly) {
  const Matrix h = nine_state::op();
  std::stringstream s;
  io::write_coo(s, h);
  std::size_t lines = 0;
  for (std::string l; std::getline(s, l);) ++lines;
  EXPECT_EQ(lines, static_cast<std::size_t>((h.array() != 0.0).count()));
  s.clear();
  s.seekg(0);
  EXPECT_EQ(io::read_coo(s, 4, 9), h);
}

TEST(Coo, InfersDimensionsAndSumsDuplicates) {
  std::istringstream in("# comment\n0 0 1\n\n2 3 0.5\n0 0 2\n");
  const Matrix m = io::read_coo(in);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 4);
  EXPECT_EQ(m(0, 0), 3.0);
  EXPECT_EQ(m(2, 3), 0.5);
}

TEST(Vector, RoundTrip) {
  Vector v(4);
  v << 1.5, -2e-300, 3e300, 0.1;
  std::stringstream s;
  s.precision(17);
  io::write_vector(s, v);
  EXPECT_EQ(io::read_vector(s), v);
}

TEST(Errors, LineAndColumn) {
  expect_format_error("1,2\n3,x\n", false, 2, 3);
  expect_format_error("1,2\n3\n", false, 2, 1);
  expect_format_error("1,,2\n", false, 1, 3);
  expect_format_error("1,nan\n", false, 1, 3);
  expect_format_error("0 0 1\n0 -1 2\n", true, 2, 3);
  expect_format_error("0 0 1\n0 1\n", true, 2, 1);
  expect_format_error("0 0 abc\n", true, 1, 5);
  expect_format_error("", false, 0, 0);
}

TEST(Errors, FileWrappersPrefixPath) {
  const auto dir = std::filesystem::temp_directory_path() / "covloc_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "bad.csv").string();
  {
    std::ofstream out(path);
    out << "1,2\n3,x\n";
  }
  try {
    io::load_matrix(path, io::MatrixFormat::Csv);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(std::string(e.what()).rfind(path + ":2:3: ", 0), 0u) << e.what();
  }
  EXPECT_THROW(io::load_vector((dir / "missing.txt").string()), FormatError);
  EXPECT_THROW(io::parse_format("xml"), FormatError);
  std::filesystem::remove_all(dir);
}

TEST(Report, PartitionJsonRoundTrip) {
  const auto part = nine_state::partition();
  const auto j = report::partition_json(part, 0.75);
  EXPECT_EQ(j["p"], 2);
  EXPECT_EQ(report::partition_from_json(j), part);
}

TEST(Report, AssignmentSummaryCounts) {
  const auto part = nine_state::partition();
  const auto j = report::assignment_json(classify_observations(nine_state::op(), part), part);
  EXPECT_EQ(j["summary"]["single"], 2);
  EXPECT_EQ(j["summary"]["straddling"], 2);
  EXPECT_EQ(j["summary"]["empty"], 0);
  EXPECT_EQ(j["observations"][1]["status"], "straddling");
  EXPECT_EQ(j["observations"][1]["strongest"], 1);
}
