#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "scgmm/error.hpp"
#include "scgmm/io.hpp"
#include "test_util.hpp"

namespace scgmm {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("scgmm_io_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(Io, RoundTripIsExact) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    const Mixture g = testing::random_mixture(1 + i % 5, 1 + i % 4, rng);
    const Mixture back = io::deserialize(io::serialize(g));
    EXPECT_EQ(back, g);
  }
}

TEST(Io, RejectsBadDocuments) {
  auto message_of = [](const std::string& text) {
    try {
      io::deserialize(text);
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string bad_weights =
      R"({"format":"mixture-v1","d":1,"K":2,"weights":[0.5,0.6],)"
      R"("components":[{"mean":[0],"cov":[[1]]},{"mean":[1],"cov":[[1]]}]})";
  EXPECT_NE(message_of(bad_weights).find("weights do not sum to 1"), std::string::npos);
  const std::string indefinite =
      R"({"format":"mixture-v1","d":2,"K":1,"weights":[1],)"
      R"("components":[{"mean":[0,0],"cov":[[1,2],[2,1]]}]})";
  EXPECT_NE(message_of(indefinite).find("covariance not positive definite"),
            std::string::npos);
  EXPECT_THROW(io::deserialize("not json"), SchemaError);
  EXPECT_THROW(io::deserialize(R"({"format":"other"})"), SchemaError);
  const std::string asym =
      R"({"format":"mixture-v1","d":2,"K":1,"weights":[1],)"
      R"("components":[{"mean":[0,0],"cov":[[1,0.5],[0,1]]}]})";
  EXPECT_THROW(io::deserialize(asym), SchemaError);
  const std::string wrong_dim =
      R"({"format":"mixture-v1","d":2,"K":1,"weights":[1],)"
      R"("components":[{"mean":[0],"cov":[[1]]}]})";
  EXPECT_THROW(io::deserialize(wrong_dim), SchemaError);
}

TEST_F(TempDir, CsvAndBinaryRoundTrip) {
  std::mt19937_64 rng(5);
  const Mixture g = testing::random_mixture(3, 3, rng);
  const LabeledSample s = g.sample(257, 1);
  io::write_data(dir_ / "d.csv", s);
  const LabeledSample c = io::read_data(dir_ / "d.csv");
  EXPECT_EQ(c.points, s.points);
  EXPECT_EQ(*c.labels, *s.labels);

  io::write_data(dir_ / "d.bin", s);
  const LabeledSample b = io::read_data(dir_ / "d.bin");
  EXPECT_EQ(b.points, s.points);
  EXPECT_FALSE(b.labels.has_value());

  io::write_labels(dir_ / "l.csv", *s.labels);
  EXPECT_EQ(io::read_labels(dir_ / "l.csv"), *s.labels);
  EXPECT_EQ(io::read_labels(dir_ / "d.csv"), *s.labels);
}

TEST_F(TempDir, MixtureAndLocalsFiles) {
  std::mt19937_64 rng(6);
  io::LocalsDocument doc;
  doc.estimates = {testing::random_mixture(2, 2, rng), testing::random_mixture(2, 2, rng)};
  doc.lambdas = {0.25, 0.75};
  doc.sizes = {25, 75};
  io::write_locals(dir_ / "locals.json", doc);
  const io::LocalsDocument back = io::read_locals(dir_ / "locals.json");
  EXPECT_EQ(back.estimates, doc.estimates);
  EXPECT_EQ(back.lambdas, doc.lambdas);
  EXPECT_EQ(back.sizes, doc.sizes);

  io::write_mixture(dir_ / "m.json", doc.estimates[0]);
  EXPECT_EQ(io::read_mixture(dir_ / "m.json"), doc.estimates[0]);
}

TEST_F(TempDir, MalformedDataFiles) {
  {
    std::ofstream f(dir_ / "ragged.csv");
    f << "x0,x1\n1,2\n3\n";
  }
  EXPECT_THROW(io::read_data(dir_ / "ragged.csv"), SchemaError);
  {
    std::ofstream f(dir_ / "text.csv");
    f << "x0\nabc\n";
  }
  EXPECT_THROW(io::read_data(dir_ / "text.csv"), SchemaError);
  EXPECT_ANY_THROW(io::read_data(dir_ / "missing.csv"));
}

}  // namespace
}  // namespace scgmm
