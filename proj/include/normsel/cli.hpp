#ifndef NORMSEL_CLI_HPP
#define NORMSEL_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace normsel::cli {

// Exit codes: 0 success, 1 verdict failure under --strict, 2 usage or
// validation error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace normsel::cli

#endif
