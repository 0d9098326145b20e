#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mdkit::selftest {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// DCT orthonormality and round trip for every length 1..90.
SuiteResult dct_suite();
// BVH closest point against brute force and ray-parity sign against the
// winding number on random closed meshes.
SuiteResult bvh_suite();
// Centered finite differences through each differentiable primitive.
SuiteResult gradient_suite();

std::vector<SuiteResult> run_all();
// One "PASS name: detail" or "FAIL name: detail" line per suite.
void print(const std::vector<SuiteResult>& results, std::ostream& out);

} // namespace mdkit::selftest
