#ifndef CASEFOLD_CLI_H_
#define CASEFOLD_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace casefold::cli {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace casefold::cli

#endif  // CASEFOLD_CLI_H_
