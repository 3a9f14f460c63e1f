#include "blindwit/composite.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "blindwit/evolution.hpp"
#include "oracles.hpp"

using namespace blindwit;

namespace {

std::vector<BranchSite> labels(std::initializer_list<const char*> ls) {
  std::vector<BranchSite> out;
  for (const char* l : ls) out.push_back(BranchSite::parse(l));
  return out;
}

DeviceHamiltonian device(double flux) { return build_device_hamiltonian(build_geometry(), 1.0, {flux}); }

}  // namespace

TEST(StandardLayout, positions) {
  EXPECT_TRUE(standard_witness_layout(0).empty());
  EXPECT_EQ(standard_witness_layout(2), labels({"3", "3'"}));
  EXPECT_EQ(standard_witness_layout(4), labels({"1", "1'", "5", "5'"}));
  EXPECT_EQ(standard_witness_layout(6), labels({"1", "1'", "3", "3'", "5", "5'"}));
  EXPECT_EQ(standard_witness_layout(8), labels({"1", "1'", "2", "2'", "4", "4'", "5", "5'"}));
  for (int bad : {-1, 1, 3, 5, 7, 10}) EXPECT_THROW(standard_witness_layout(bad), std::invalid_argument);
}

TEST(TotalHamiltonian, no_witnesses_is_device) {
  const auto hd = device(0.37);
  const auto h = build_total_hamiltonian(hd, {});
  EXPECT_EQ(h.dimension(), 35u);
  EXPECT_EQ(h.dense(), hd.matrix);
}

TEST(TotalHamiltonian, single_witness_blocks) {
  const auto hd = device(0.0);
  const auto h = build_total_hamiltonian(hd, make_witnesses(labels({"3"}), 5.0));
  const auto dense = h.dense();
  ASSERT_EQ(dense.rows(), 70);

  Eigen::MatrixXcd alpha_block = hd.matrix;
  alpha_block(17, 17) = 5.0;
  EXPECT_EQ(dense.block(0, 0, 35, 35), alpha_block);
  EXPECT_EQ(dense.block(35, 35, 35, 35), hd.matrix);
  EXPECT_EQ(dense.block(0, 35, 35, 35).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(dense.block(35, 0, 35, 35).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TotalHamiltonian, rejects_duplicate_positions) {
  EXPECT_THROW(build_total_hamiltonian(device(0.0), make_witnesses(labels({"3", "1", "3"}), 5.0)),
               std::invalid_argument);
  EXPECT_NO_THROW(build_total_hamiltonian(device(0.0), make_witnesses(labels({"3", "3'"}), 5.0)));
}

TEST(TotalHamiltonian, dimensions) {
  for (int n : {0, 1, 2, 4, 6, 8}) {
    std::vector<BranchSite> layout;
    for (int k = 0; k < n; ++k) layout.push_back(k % 2 ? BranchSite::bottom(k / 2 + 1) : BranchSite::top(k / 2 + 1));
    const auto h = build_total_hamiltonian(device(0.1), make_witnesses(layout, 5.0));
    EXPECT_EQ(h.dimension(), (std::size_t{1} << n) * 35);
    EXPECT_EQ(h.basis().configurations(), std::size_t{1} << n);
    if (n <= 4) EXPECT_EQ(h.dense().rows(), static_cast<Eigen::Index>(h.dimension()));
  }
}

// Block-index assembly against term-by-term Kronecker assembly.
TEST(TotalHamiltonian, matches_kronecker_assembly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<std::vector<BranchSite>> layouts{
      labels({"2"}), labels({"3", "3'"}), labels({"5'", "1", "4"}), labels({"1", "1'", "5", "5'"})};
  for (const auto& layout : layouts) {
    for (double gamma_w : {0.0, 0.7}) {
      auto ws = make_witnesses(layout, 5.0 * (1.0 + u(rng)), gamma_w);
      const auto hd = device(u(rng));
      const auto h = build_total_hamiltonian(hd, ws);
      const auto expected = oracle::total_hamiltonian(hd, ws);
      EXPECT_LT((h.dense() - expected).cwiseAbs().maxCoeff(), 1e-15);
      EXPECT_LT(hermiticity_defect(h.dense()), 1e-12);
    }
  }
}

TEST(TotalHamiltonian, blind_is_block_diagonal) {
  const auto h = build_total_hamiltonian(device(0.5), make_witnesses(standard_witness_layout(4), 5.0));
  ASSERT_TRUE(h.blind());
  const auto dense = h.dense();
  const auto configs = static_cast<Eigen::Index>(h.basis().configurations());
  for (Eigen::Index a = 0; a < configs; ++a)
    for (Eigen::Index b = 0; b < configs; ++b) {
      auto blk = dense.block(a * 35, b * 35, 35, 35);
      if (a == b)
        EXPECT_EQ(blk, h.block(static_cast<std::size_t>(a)));
      else
        EXPECT_EQ(blk.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(TotalHamiltonian, interaction_matrix_elements) {
  // <w, j_m| H |w, j_m> - <j_m|H_d|j_m> is E_int for each alpha-occupied witness.
  const auto ws = make_witnesses(labels({"1", "4'", "2"}), 3.5);
  const auto hd = device(0.2);
  const auto h = build_total_hamiltonian(hd, ws);
  const auto dense = h.dense();
  const auto basis = h.basis();
  for (std::size_t w = 0; w < basis.configurations(); ++w)
    for (int m = 0; m < 3; ++m) {
      const auto j = ws[m].partner();
      const auto g = static_cast<Eigen::Index>(basis.index(w, j));
      const double expected = CompositeBasis::alpha_occupied(w, m) ? 3.5 : 0.0;
      EXPECT_EQ(dense(g, g).real() - hd.matrix(j.offset(), j.offset()).real(), expected);
    }
}

TEST(TotalHamiltonian, non_blind_couples_configurations) {
  const auto h = build_total_hamiltonian(device(0.0), make_witnesses(labels({"3"}), 5.0, 0.25));
  EXPECT_FALSE(h.blind());
  const auto dense = h.dense();
  for (Eigen::Index j = 0; j < 35; ++j) {
    EXPECT_EQ(dense(j, 35 + j), cplx(-0.25, 0.0));
    EXPECT_EQ(dense(35 + j, j), cplx(-0.25, 0.0));
  }
}

TEST(InitialState, product_structure) {
  const auto g = build_geometry();
  const auto packet = gaussian_packet(g);

  const auto s0 = initial_composite_state(packet, 0);
  EXPECT_EQ(s0.amplitudes, packet);

  const auto s2 = initial_composite_state(packet, 2);
  ASSERT_EQ(s2.amplitudes.size(), 140);
  for (std::size_t w = 0; w < 4; ++w) EXPECT_LT((s2.layer(w) - packet / 2.0).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_NEAR(s2.norm(), 1.0, 1e-15);

  // Kronecker construction of the same product state with phases.
  const std::vector<double> phases{0.4, -1.3, 2.9};
  const auto s3 = initial_composite_state(packet, 3, phases);
  Eigen::VectorXcd expected = Eigen::VectorXcd::Ones(1);
  for (int m = 2; m >= 0; --m) {
    Eigen::VectorXcd wit(2);
    wit << 1.0 / std::sqrt(2.0), std::polar(1.0 / std::sqrt(2.0), phases[m]);
    expected = oracle::kron(expected, wit);
  }
  expected = oracle::kron(expected, packet);
  EXPECT_LT((s3.amplitudes - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InitialState, rejects_bad_input) {
  const auto packet = gaussian_packet(build_geometry());
  EXPECT_THROW(initial_composite_state(packet * 1.01, 2), std::invalid_argument);
  EXPECT_THROW(initial_composite_state(Eigen::VectorXcd::Ones(10).normalized(), 0), std::invalid_argument);
  const std::vector<double> phases{0.1};
  EXPECT_THROW(initial_composite_state(packet, 2, phases), std::invalid_argument);
  EXPECT_NO_THROW(initial_composite_state(packet * (1.0 + 1e-12), 1));
}
