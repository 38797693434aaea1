#include <doctest.h>

#include <cmath>

#include "nioc/model.hpp"
#include "nioc/params.hpp"

using namespace nioc;

TEST_CASE("param vector stores and retrieves by name") {
  ParamVector theta;
  theta.set("c_a", 0.25);
  theta.set("sigma_m", 0.1);
  theta.set("p", -0.5, /*positive=*/false);

  CHECK(theta.size() == 3);
  CHECK(theta.at("c_a") == doctest::Approx(0.25));
  CHECK(theta.at("p") == doctest::Approx(-0.5));
  CHECK(theta.has("sigma_m"));
  CHECK(!theta.has("missing"));
  CHECK(theta.is_positive("c_a"));
  CHECK(!theta.is_positive("p"));
  CHECK_THROWS_AS(theta.at("missing"), MissingParameter);
  CHECK_THROWS_AS(theta.is_positive("missing"), MissingParameter);
}

TEST_CASE("param vector set overwrites in place") {
  ParamVector theta;
  theta.set("c_a", 0.25);
  theta.set("c_a", 0.75);
  CHECK(theta.size() == 1);
  CHECK(theta.at("c_a") == doctest::Approx(0.75));
}

TEST_CASE("optimizer space is log for positive entries, identity otherwise") {
  ParamVector theta;
  theta.set("a", 0.04);
  theta.set("b", -2.0, /*positive=*/false);
  theta.set("c", 3.0);

  // names() is sorted, so coordinates are (a, b, c).
  const Eigen::VectorXd z = theta.to_optimizer_space();
  REQUIRE(z.size() == 3);
  CHECK(z[0] == doctest::Approx(std::log(0.04)));
  CHECK(z[1] == doctest::Approx(-2.0));
  CHECK(z[2] == doctest::Approx(std::log(3.0)));

  const ParamVector back = theta.from_optimizer_space(z);
  CHECK(back.at("a") == doctest::Approx(0.04));
  CHECK(back.at("b") == doctest::Approx(-2.0));
  CHECK(back.at("c") == doctest::Approx(3.0));
  CHECK(back.is_positive("a"));
  CHECK(!back.is_positive("b"));
}

TEST_CASE("round trip through optimizer space at new coordinates") {
  ParamVector theta;
  theta.set("x", 1.0);
  theta.set("y", 0.0, /*positive=*/false);
  Eigen::VectorXd z(2);
  z << std::log(0.2), 5.0;
  const ParamVector moved = theta.from_optimizer_space(z);
  CHECK(moved.at("x") == doctest::Approx(0.2));
  CHECK(moved.at("y") == doctest::Approx(5.0));
}

TEST_CASE("non-positive constrained value rejected by forward transform only") {
  ParamVector theta;
  theta.set("scale", 0.0);  // storing zero is fine (simulation may use it)
  CHECK(theta.at("scale") == doctest::Approx(0.0));
  CHECK_THROWS_AS(theta.to_optimizer_space(), NonPositiveParameter);
}

TEST_CASE("from_optimizer_space rejects wrong length") {
  ParamVector theta;
  theta.set("a", 1.0);
  Eigen::VectorXd z(2);
  z << 0.0, 0.0;
  CHECK_THROWS_AS(theta.from_optimizer_space(z), InvalidArgument);
}

TEST_CASE("variant names round trip") {
  CHECK(variant_name(Variant::Full) == "full");
  CHECK(variant_name(Variant::Partial) == "partial");
  CHECK(variant_from_name("full") == Variant::Full);
  CHECK(variant_from_name("partial") == Variant::Partial);
  CHECK_THROWS_AS(variant_from_name("other"), InvalidArgument);
}
