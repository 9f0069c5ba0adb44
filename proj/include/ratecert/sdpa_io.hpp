#pragma once

#include "ratecert/polynomial.hpp"
#include "ratecert/sdp.hpp"

#include <iosfwd>
#include <string>

namespace ratecert {

/// Sparse SDPA text format. An SdpProblem maps onto the SDPA dual form
///   max <F0, Y>  s.t.  <F_i, Y> = c_i,  Y >= 0
/// with Y = X, F_i = A_i, c_i = b_i and F0 = -C. Free variables are written
/// as a trailing diagonal block holding u+ and u- (u = u+ - u-).
void write_sdpa(std::ostream& out, const SdpProblem& p);
std::string to_sdpa(const SdpProblem& p);

/// Reads the sparse format; `{ } ( ) ,` count as whitespace and leading
/// lines starting with `"` or `*` are comments. Anything after the
/// numbers on the three size lines is ignored. A diagonal block (negative
/// size) becomes that many 1x1 blocks. Throws ParseError.
SdpProblem read_sdpa(std::istream& in);
SdpProblem parse_sdpa(const std::string& text);

}  // namespace ratecert
