#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dcp/io.hpp"
#include "dcp/synthetic.hpp"

using namespace dcp;

TEST(ReadCsv, LabelsWithEmptyCells) {
  std::istringstream in("x,y,label\n0,1,a\n2,3,\n4,5,a\n");
  const auto csv = read_csv(in);
  EXPECT_EQ(csv.raw.size(), 3u);
  EXPECT_EQ(csv.raw.dim(), 2u);
  EXPECT_EQ(csv.feature_names, (std::vector<std::string>{"x", "y"}));
  const auto c = constraints_from_labels(csv.raw.labels);
  EXPECT_EQ(c.labeled_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(csv.raw.points(1, 1), 3.0);
}

TEST(ReadCsv, LabelColumnMayAppearAnywhere) {
  std::istringstream in("label,b,a\nq,1.5,-2\n,2,3e-1\n");
  const auto csv = read_csv(in);
  EXPECT_EQ(csv.feature_names, (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(csv.raw.points(0, 1), -2.0);
  EXPECT_EQ(csv.raw.points(1, 1), 0.3);
  EXPECT_EQ(*csv.raw.labels[0], "q");
  EXPECT_FALSE(csv.raw.labels[1].has_value());
}

TEST(ReadCsv, DuplicateRowsMergeAndExpandBack) {
  std::istringstream in("x,y\n1,1\n2,2\n1,1\n");
  const auto csv = read_csv(in);
  EXPECT_EQ(csv.raw.size(), 3u);
  EXPECT_EQ(csv.dedup.data.size(), 2u);
  const Partition p = Partition::canonicalize({0, 1});
  EXPECT_EQ(p.expand(csv.dedup.representative).assignment(), (std::vector<int>{0, 1, 0}));
}

TEST(ReadCsv, NonNumericCellIsNamed) {
  std::istringstream in("x,y\n1,2\n3,abc\n");
  try {
    read_csv(in, "data.csv");
    FAIL() << "expected an error";
  } catch (const InputError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'y'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
  }
}

TEST(ReadCsv, StructuralErrors) {
  std::istringstream ragged("x,y\n1,2\n3\n");
  EXPECT_THROW(read_csv(ragged), InputError);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), InputError);
  std::istringstream no_rows("x,y\n");
  EXPECT_THROW(read_csv(no_rows), InputError);
  std::istringstream only_label("label\na\n");
  EXPECT_THROW(read_csv(only_label), InputError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), InputError);
}

TEST(Synthetic, CsvRoundTripIsExact) {
  for (Scenario sc : {Scenario::OverlapPair, Scenario::MultiModal, Scenario::Blobs}) {
    const auto s = generate_synthetic(SyntheticSpec::preset(sc, 5));
    std::stringstream buf;
    write_csv(buf, s.data);
    const auto back = read_csv(buf);
    EXPECT_EQ(back.raw.points, s.data.points);
    EXPECT_EQ(back.raw.labels, s.data.labels);
  }
}

TEST(Synthetic, SameSeedSameData) {
  const auto a = generate_synthetic(SyntheticSpec::multi_modal(9));
  const auto b = generate_synthetic(SyntheticSpec::multi_modal(9));
  const auto c = generate_synthetic(SyntheticSpec::multi_modal(10));
  EXPECT_EQ(a.data.points, b.data.points);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(a.test_indices, b.test_indices);
  EXPECT_NE(a.data.points, c.data.points);
}

TEST(Synthetic, MultiModalHasTwoClustersFromTwoPlusThreeComponents) {
  const auto spec = SyntheticSpec::multi_modal(1);
  std::size_t c0 = 0, c1 = 0;
  bool hidden_in_second = false;
  for (const auto& comp : spec.components) {
    (comp.cluster == 0 ? c0 : c1) += 1;
    if (comp.hidden) hidden_in_second = comp.cluster == 1;
  }
  EXPECT_EQ(c0, 2u);
  EXPECT_EQ(c1, 3u);
  EXPECT_TRUE(hidden_in_second);
  const auto s = generate_synthetic(spec);
  EXPECT_EQ(s.truth.num_clusters(), 2);
  EXPECT_EQ(s.data.size(), 70u);
  for (std::size_t i : s.test_indices) EXPECT_FALSE(s.data.labels[i].has_value());
  const auto c = constraints_from_labels(s.data.labels);
  EXPECT_TRUE(satisfies_constraints(s.truth, c));
}

TEST(Synthetic, OverlapBoundaryPointsSitNearTheOtherMean) {
  const auto spec = SyntheticSpec::overlap_pair(3);
  const auto s = generate_synthetic(spec);
  EXPECT_EQ(s.data.size(), 66u);
  EXPECT_EQ(s.test_indices.size(), 12u);
  const Eigen::Vector2d own(-1.0, 0.0), other(2.0, 0.0);
  for (std::size_t i = 60; i < 66; ++i) {
    const Eigen::Vector2d x = s.data.points.row(static_cast<Eigen::Index>(i)).transpose();
    EXPECT_LE((x - other).norm(), (x - own).norm());
    EXPECT_EQ(s.truth[i], s.truth[0]);
  }
}

TEST(Synthetic, OverlapWithoutBoundaryIsTwoPlainBlobs) {
  const auto s = generate_synthetic(SyntheticSpec::overlap_pair(3, 0));
  EXPECT_EQ(s.data.size(), 60u);
  EXPECT_EQ(s.truth.num_clusters(), 2);
  EXPECT_EQ(s.test_indices.size(), 6u);
}

TEST(Synthetic, InvalidSpecsAreRejected) {
  auto spec = SyntheticSpec::blobs(1);
  spec.components[0].count = 0;
  EXPECT_THROW(generate_synthetic(spec), InputError);
  spec = SyntheticSpec::blobs(1);
  spec.components[1].cov << 1, 2, 2, 1;
  EXPECT_THROW(generate_synthetic(spec), InputError);
  EXPECT_THROW(scenario_from_string("moons"), InputError);
}

TEST(PartitionFile, RoundTripWithTestFlags) {
  std::stringstream buf;
  const Partition p = Partition::canonicalize({2, 2, 0, 1});
  write_partition(buf, p, std::vector<std::size_t>{1, 3});
  const auto back = read_partition(buf);
  EXPECT_EQ(back.partition, p);
  ASSERT_TRUE(back.test_indices.has_value());
  EXPECT_EQ(*back.test_indices, (std::vector<std::size_t>{1, 3}));
}

TEST(PartitionFile, StringClusterIdsAndErrors) {
  std::istringstream in("cluster\nfoo\nbar\nfoo\n");
  EXPECT_EQ(read_partition(in).partition, Partition::canonicalize({0, 1, 0}));
  std::istringstream missing("group\n1\n");
  EXPECT_THROW(read_partition(missing), InputError);
  std::istringstream bad_flag("cluster,test\n1,maybe\n");
  EXPECT_THROW(read_partition(bad_flag), InputError);
}

TEST(Trace, RowCountAndExpandedAssignments) {
  PosteriorTrace t;
  const std::size_t n_sweeps = 20, burn_in = 5, thin = 4;
  for (std::size_t s = burn_in; s < n_sweeps; ++s)
    if ((s - burn_in + 1) % thin == 0) {
      TraceSample ts;
      ts.sweep = s;
      ts.partition = Partition::canonicalize({0, 1});
      ts.params = KernelParams::squared_exponential({1.5, 2.0}, 0.5);
      ts.log_likelihood = -1.25;
      t.samples.push_back(ts);
    }
  std::stringstream buf;
  write_trace(buf, t, {0, 1, 0});
  std::string line;
  std::getline(buf, line);
  EXPECT_EQ(line, "sweep,assignment,lengthscales,temperature,loglik");
  std::size_t rows = 0;
  while (std::getline(buf, line)) {
    ++rows;
    EXPECT_NE(line.find(",0|1|0,1.5|2,0.5,-1.25"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, (n_sweeps - burn_in) / thin);
}
