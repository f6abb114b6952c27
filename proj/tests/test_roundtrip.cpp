#include <gtest/gtest.h>

#include "pmrkit/codecs.hpp"
#include "pmrkit/errors.hpp"
#include "support/generators.hpp"

namespace pmrkit {
namespace {

using testing::Rng;

std::string dump(const ProcessModel& m) { return encode(m, PmrId::simplified_xml).text; }

// Graph PMRs take any well-formed model over their supported types.
class GraphRoundTrip : public ::testing::TestWithParam<PmrId> {};

TEST_P(GraphRoundTrip, DecodeInvertsEncode) {
  const PmrId pmr = GetParam();
  Rng rng(1000 + static_cast<int>(pmr));
  for (int i = 0; i < 300; ++i) {
    ProcessModel m = testing::random_model(rng, {capabilities(pmr).supported});
    ASSERT_TRUE(is_well_formed(m));
    PmrDocument doc = encode(m, pmr);
    EXPECT_TRUE(doc.loss_report.empty()) << to_string(doc.loss_report.front().type);
    ProcessModel back;
    try {
      back = decode(doc).model;
    } catch (const std::exception& e) {
      FAIL() << "iteration " << i << ": " << e.what() << "\n" << doc.text;
    }
    ASSERT_TRUE(canonical_equal(m, back)) << "iteration " << i << "\n" << doc.text << "\n--- decoded:\n" << dump(back);
  }
}

TEST_P(GraphRoundTrip, EventsWithUnusualDegrees) {
  const PmrId pmr = GetParam();
  Rng rng(1100 + static_cast<int>(pmr));
  for (int i = 0; i < 200; ++i) {
    testing::ModelOptions o{capabilities(pmr).supported};
    o.any_degree = true;
    ProcessModel m = testing::random_model(rng, o);
    PmrDocument doc = encode(m, pmr);
    ProcessModel back = decode(doc).model;
    ASSERT_TRUE(canonical_equal(m, back)) << "iteration " << i << "\n" << doc.text << "\n--- decoded:\n" << dump(back);
  }
}

INSTANTIATE_TEST_SUITE_P(All, GraphRoundTrip,
                         ::testing::Values(PmrId::bpmn, PmrId::bpmn_process, PmrId::graphviz, PmrId::mermaid,
                                           PmrId::pme, PmrId::simplified_xml),
                         [](const auto& info) { return std::string(to_string(info.param)); });

// Block-structured PMRs take the expansion of a tree they can express.
class BranchRoundTrip : public ::testing::TestWithParam<PmrId> {};

TEST_P(BranchRoundTrip, DecodeInvertsEncode) {
  const PmrId pmr = GetParam();
  Rng rng(2000 + static_cast<int>(pmr));
  for (int i = 0; i < 300; ++i) {
    BranchTree t = testing::random_tree(rng, testing::tree_options_for(pmr));
    ProcessModel m = testing::rename_and_shuffle(expand(t), rng);
    PmrDocument doc;
    try {
      doc = encode(m, pmr);
    } catch (const std::exception& e) {
      FAIL() << "iteration " << i << ": " << e.what() << "\n" << describe(t);
    }
    EXPECT_TRUE(doc.loss_report.empty()) << describe(t) << "\n" << doc.loss_report.front().reason;
    ProcessModel back;
    try {
      back = decode(doc).model;
    } catch (const std::exception& e) {
      FAIL() << "iteration " << i << ": " << e.what() << "\n" << doc.text;
    }
    ASSERT_TRUE(canonical_equal(m, back)) << "iteration " << i << "\n" << describe(t) << "\n" << doc.text
                                          << "\n--- decoded:\n" << dump(back);
  }
}

INSTANTIATE_TEST_SUITE_P(All, BranchRoundTrip,
                         ::testing::Values(PmrId::powl_code, PmrId::bpmn_text, PmrId::json_branches),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(TreeOracle, ReductionInvertsExpansion) {
  Rng rng(77);
  for (int i = 0; i < 400; ++i) {
    BranchTree t = testing::random_tree(rng);
    ProcessModel m = testing::rename_and_shuffle(expand(t), rng);
    StructureResult r = to_branch_tree(m);
    ASSERT_TRUE(r.tree.has_value()) << "iteration " << i << ": "
                                    << (r.verdict.reason ? to_string(*r.verdict.reason) : "?") << "\n"
                                    << describe(t) << "\n" << dump(m);
    EXPECT_TRUE(r.losses.empty()) << describe(t);
    ASSERT_EQ(describe(canonicalize(*r.tree)), describe(canonicalize(t))) << "iteration " << i << "\n" << dump(m);
  }
}

TEST(TreeOracle, CanonicalizeIsIdempotent) {
  Rng rng(78);
  for (int i = 0; i < 300; ++i) {
    BranchTree c = canonicalize(testing::random_tree(rng));
    EXPECT_EQ(canonicalize(c), c);
    EXPECT_FALSE(check_tree(c).has_value()) << *check_tree(c);
  }
}

TEST(TreeOracle, ExpansionIsWellFormed) {
  Rng rng(79);
  for (int i = 0; i < 300; ++i) EXPECT_TRUE(is_well_formed(expand(testing::random_tree(rng))));
}

}  // namespace
}  // namespace pmrkit
