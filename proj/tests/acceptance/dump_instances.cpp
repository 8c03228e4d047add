// Writes the acceptance instances as instance files so that an external
// solver can produce reference optima (see tests/oracles/freeze_oracle.py).

#include <cstdio>
#include <string>

#include "ccp/model.hpp"
#include "random_instances.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: dump_instances <dir>\n");
    return 1;
  }
  const std::string dir = argv[1];
  for (int k = 0; k < ccp_test::kAffineCount; ++k) {
    const auto seed = ccp_test::kAffineSeedBase + static_cast<std::uint64_t>(k);
    ccp::save_instance(ccp_test::random_affine(seed),
                       dir + "/affine_" + std::to_string(k) + ".json");
  }
  for (int k = 0; k < ccp_test::kNormCount; ++k) {
    ccp::save_instance(ccp_test::norm_instance(k), dir + "/norm_" + std::to_string(k) + ".json");
  }
  return 0;
}
