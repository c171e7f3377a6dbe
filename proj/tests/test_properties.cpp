#include <doctest.h>

#include "property_checks.hpp"

using namespace clex;

namespace {

void require_none(const props::Failures& failures) {
  for (const auto& f : failures) MESSAGE(f);
  CHECK(failures.empty());
}

}  // namespace

TEST_CASE("constant groups never change cluster assignments") { require_none(props::constant_group_zero_importance(6)); }

TEST_CASE("percent change stays in [0, 1]") { require_none(props::percent_change_in_unit_interval(8)); }

TEST_CASE("l2pc values are multiples of 1/M") { require_none(props::l2pc_granularity(12)); }

TEST_CASE("zscore is idempotent") { require_none(props::zscore_idempotent(40)); }

TEST_CASE("gmm posteriors and fuzzy memberships are normalized") { require_none(props::gmm_posteriors_normalized(8)); }

TEST_CASE("assign breaks ties deterministically toward the lower cluster id") {
  require_none(props::assign_ties_deterministic());
}
