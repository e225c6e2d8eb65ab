#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "speedup/er_task.hpp"
#include "speedup/instance_io.hpp"

using namespace speedup;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string to_text(std::span<const ProblemInstance> instances) {
  std::ostringstream out;
  write_instances(out, instances);
  return out.str();
}

}  // namespace

TEST(InstanceIo, SampleFileRoundTripsByteExact) {
  const std::string path = std::string(SPEEDUP_DATA_DIR) + "/er_sample.txt";
  const auto instances = read_instances_file(path);
  ASSERT_EQ(instances.size(), 6u);
  EXPECT_EQ(to_text(instances), slurp(path));
  for (const auto& inst : instances) {
    ASSERT_TRUE(inst.gold());
    EXPECT_TRUE(check_feasible(inst, *inst.gold()));
  }
}

// Shortest round-trip formatting preserves every double bit-for-bit.
TEST(InstanceIo, RandomInstancesRoundTrip) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> wide(-1e6, 1e6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = er::build_instance(2 + trial % 3, 1000 + static_cast<std::uint64_t>(trial), er::hard_profile());
    const auto text = to_text(std::span<const ProblemInstance>(&inst, 1));
    std::istringstream in(text);
    const auto back = read_instances(in);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].constraints(), inst.constraints());
    EXPECT_EQ(back[0].gold(), inst.gold());
    for (int k = 0; k < inst.num_variables(); ++k) {
      for (int i = 0; i < inst.arity(k); ++i) EXPECT_EQ(back[0].oracle().peek(k, i), inst.oracle().peek(k, i));
    }
    EXPECT_EQ(to_text(back), text);
  }
  for (int n = 0; n < 1000; ++n) {
    const double x = wide(rng) * std::pow(10.0, static_cast<double>(n % 40) - 20.0);
    EXPECT_EQ(parse_double(format_double(x), 0), x);
  }
}

TEST(InstanceIo, BlankLinesAndNoGold) {
  std::istringstream in("\n2 1\n1 2 a b 0.5 -1\n\n2 1 x 3\n>= 1 2 1 1 1 2 1 1\nend\n\n");
  const auto v = read_instances(in);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_FALSE(v[0].gold());
  EXPECT_EQ(v[0].arity(1), 1);
  EXPECT_EQ(v[0].constraints().row(0).sense, Sense::GreaterEqual);
  EXPECT_EQ(v[0].constraints().row(0).terms[1].var, 1);
  EXPECT_EQ(v[0].constraints().row(0).terms[1].label, 0);
}

TEST(InstanceIo, ParseErrorsCarryLineNumbers) {
  auto fails_at = [](const std::string& text, long line) {
    std::istringstream in(text);
    try {
      (void)read_instances(in);
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
      return;
    }
    ADD_FAILURE() << "no parse error for:\n" << text;
  };
  fails_at("1\n", 1);
  fails_at("1 0\n2 2 a b 0 0\nend\n", 2);            // variable numbering
  fails_at("1 0\n1 2 a b 0\nend\n", 2);              // missing cost
  fails_at("1 1\n1 2 a b 0 0\n~ 1 0\nend\n", 3);     // sense
  fails_at("1 1\n1 2 a b 0 0\n= 1 1 1 3 1\nend\n", 3);  // label out of range
  fails_at("1 0\n1 2 a b 0 0\ngold 1:x\nend\n", 3);
  fails_at("1 0\n1 2 a b 0 0\n", 2);                 // truncated
  fails_at("1 0\n1 2 a b 0 0\nfin\n", 3);
}
