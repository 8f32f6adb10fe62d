#ifndef CASEFOLD_LOG_H_
#define CASEFOLD_LOG_H_

#include <string_view>

namespace casefold {

// Standard-error logging. Level 0 prints warnings only, 1 adds progress,
// 2 adds per-epoch detail.
void set_verbosity(int level);
int verbosity();

void log_warning(std::string_view message);
void log_info(std::string_view message);
void log_debug(std::string_view message);

}  // namespace casefold

#endif  // CASEFOLD_LOG_H_
