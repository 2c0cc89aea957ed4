#pragma once

// Randomised property sweep over the Jacobi routines, reporting the worst
// deviation seen for each identity.

#include <cstdint>
#include <iosfwd>

namespace fkan::jacobi {

struct CheckReport {
    double hyp2f1 = 0.0;         // |recurrence - 2F1|
    double symmetry = 0.0;       // |J_n^(a,b)(-z) - (-1)^n J_n^(b,a)(z)|
    double derivative = 0.0;     // relative, against central differences
    double sturm_liouville = 0.0;
    double boundary = 0.0;       // relative, endpoint closed form
    double orthogonality = 0.0;  // |<J_m, J_n>|, m < n
    std::size_t root_count_failures = 0;
    std::size_t root_count_cases = 0;

    [[nodiscard]] bool passed() const noexcept;
};

CheckReport check_properties(std::uint64_t seed);

void print_report(std::ostream& out, const CheckReport& r);

} // namespace fkan::jacobi
