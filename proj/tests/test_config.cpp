#include <gtest/gtest.h>

#include <string>

#include "netkin/config.hpp"

using namespace netkin;

TEST(Config, ParsesScalarsTablesAndArrays) {
  const ConfigValue cfg = ConfigValue::parse_string(R"(
# a comment
name = "demo"   # trailing comment
count = 42
rate = 1.5e-2
flag = true

[outer]
value = -3.0

[outer.inner]
items = [1.0, 2.0, 3.0]
words = ["a", "b"]
)");
  EXPECT_EQ(cfg.at("name").as_string(), "demo");
  EXPECT_EQ(cfg.at("count").as_index(), 42u);
  EXPECT_DOUBLE_EQ(cfg.at("rate").as_number(), 0.015);
  EXPECT_TRUE(cfg.at("flag").as_bool());
  EXPECT_DOUBLE_EQ(cfg.at("outer").at("value").as_number(), -3.0);
  const auto items = cfg.at("outer").at("inner").at("items").as_number_array();
  ASSERT_EQ(items.size(), 3u);
  EXPECT_DOUBLE_EQ(items[1], 2.0);
  EXPECT_EQ(cfg.at("outer").at("inner").at("words").as_array()[1].as_string(), "b");
}

TEST(Config, MultilineMatrix) {
  const ConfigValue cfg = ConfigValue::parse_string(R"(
[net]
weights = [[1.0, 0.5],
           [0.5, 1.0]]
)");
  const auto m = cfg.at("net").at("weights").as_matrix();
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m[1][0], 0.5);
}

TEST(Config, StringEscapesAndHashInString) {
  const ConfigValue cfg = ConfigValue::parse_string(R"(text = "a#b \"quoted\" \n")");
  EXPECT_EQ(cfg.at("text").as_string(), "a#b \"quoted\" \n");
}

TEST(Config, ParseErrors) {
  EXPECT_THROW(ConfigValue::parse_string("just a line"), ValidationError);
  EXPECT_THROW(ConfigValue::parse_string("key = "), ValidationError);
  EXPECT_THROW(ConfigValue::parse_string("bad key! = 1"), ValidationError);
  EXPECT_THROW(ConfigValue::parse_string("s = \"unterminated"), ValidationError);
  EXPECT_THROW(ConfigValue::parse_string("a = [1.0, 2.0"), ValidationError);
  EXPECT_THROW(ConfigValue::parse_string("x = 1.0 trailing"), ValidationError);
  EXPECT_THROW(ConfigValue::parse_string("x = nonsense"), ValidationError);
  EXPECT_THROW(ConfigValue::parse_string("[bad header"), ValidationError);
}

TEST(Config, TypeErrorsNameTheKey) {
  const ConfigValue cfg = ConfigValue::parse_string("beta = \"oops\"\n");
  try {
    cfg.at("beta").as_number("beta");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  try {
    cfg.at("missing-key");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("missing-key"), std::string::npos);
  }
}

TEST(Config, SerializeRoundTrip) {
  const std::string text = R"(
seed = 7
name = "round"
[a]
x = 1.5
flag = false
[a.b]
items = [1.0, 2.5]
)";
  const ConfigValue cfg = ConfigValue::parse_string(text);
  const ConfigValue again = ConfigValue::parse_string(cfg.serialize());
  EXPECT_EQ(again.at("name").as_string(), "round");
  EXPECT_DOUBLE_EQ(again.at("seed").as_number(), 7.0);
  EXPECT_FALSE(again.at("a").at("flag").as_bool());
  EXPECT_DOUBLE_EQ(again.at("a").at("b").at("items").as_number_array()[1], 2.5);
  // serialization is deterministic
  EXPECT_EQ(cfg.serialize(), again.serialize());
}

TEST(Config, IndexValidation) {
  const ConfigValue cfg = ConfigValue::parse_string("n = 2.5\nneg = -3\n");
  EXPECT_THROW(cfg.at("n").as_index("n"), ValidationError);
  EXPECT_THROW(cfg.at("neg").as_index("neg"), ValidationError);
}
