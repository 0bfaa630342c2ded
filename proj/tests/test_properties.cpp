#include <doctest.h>

#include "forumtag/numerics/rng.hpp"
#include "properties.hpp"

using namespace forumtag;

TEST_CASE("BIO roundtrip over 10000 random mention sets") {
  num::Rng rng(20240611);
  std::size_t failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string why = testing::check_bio_roundtrip(rng);
    if (!why.empty()) {
      ++failures;
      if (failures < 5) FAIL_CHECK("case " << i << ": " << why);
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("error taxonomy partitions 10000 random gold/prediction pairs") {
  num::Rng rng(77);
  std::size_t failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string why = testing::check_taxonomy_partition(rng);
    if (!why.empty()) {
      ++failures;
      if (failures < 5) FAIL_CHECK("case " << i << ": " << why);
    }
  }
  CHECK(failures == 0);
}
