#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmra/dataset_io.hpp"
#include "dmra/simulator.hpp"

using namespace dmra;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("dmra_test_" + name)).string();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace

TEST(DatasetIo, RoundTrip) {
  const auto obs = generate(sample_signal(7, 1), sample_distribution(7, 1), 257, 0.3, 99);
  const auto path = temp_path("roundtrip.bin");
  save(obs, path);
  const auto back = load(path);
  EXPECT_EQ(back.observations, obs.observations);
  EXPECT_EQ(back.sigma, obs.sigma);
  EXPECT_EQ(back.seed, obs.seed);
  EXPECT_EQ(*back.true_elements, *obs.true_elements);
  EXPECT_EQ(*back.true_signal, *obs.true_signal);
  EXPECT_EQ(back.true_distribution->flat(), obs.true_distribution->flat());
  save(back, path + "2");
  EXPECT_EQ(read_bytes(path), read_bytes(path + "2"));
  std::remove(path.c_str());
  std::remove((path + "2").c_str());
}

TEST(DatasetIo, WithoutGroundTruth) {
  ObservationSet obs;
  obs.observations = ObservationMatrix::Random(5, 4);
  obs.sigma = 1.0;
  obs.seed = 3;
  const auto path = temp_path("bare.bin");
  save(obs, path);
  const auto back = load(path);
  EXPECT_EQ(back.observations, obs.observations);
  EXPECT_FALSE(back.true_elements);
  EXPECT_FALSE(back.true_signal);
  EXPECT_FALSE(back.true_distribution);
  std::remove(path.c_str());
}

TEST(DatasetIo, CorruptFilesRejected) {
  const auto obs = generate(sample_signal(5, 2), sample_distribution(5, 2), 20, 0.1, 1);
  const auto path = temp_path("corrupt.bin");
  save(obs, path);
  const auto good = read_bytes(path);

  write_bytes(path, good.substr(0, good.size() - 3));
  EXPECT_THROW(load(path), FormatError);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  write_bytes(path, bad_magic);
  EXPECT_THROW(load(path), FormatError);

  auto bad_version = good;
  bad_version[4] = 9;
  write_bytes(path, bad_version);
  EXPECT_THROW(load(path), FormatError);

  write_bytes(path, good + "extra");
  EXPECT_THROW(load(path), FormatError);

  std::remove(path.c_str());
  EXPECT_THROW(load(path), IoError);
}

TEST(DatasetIo, CsvExport) {
  ObservationSet obs;
  obs.observations.resize(2, 3);
  obs.observations << 1, 2, 3, 0.1, -0.5, 7;
  std::ostringstream s;
  write_observations_csv(obs, s);
  EXPECT_EQ(s.str(), "index,y_0,y_1,y_2\n0,1,2,3\n1,0.10000000000000001,-0.5,7\n");
}
