#ifndef STREAMGLM_CLI_HPP
#define STREAMGLM_CLI_HPP

namespace streamglm {

/// Entry point for the `streamglm` tool (simulate / fit-stream / classify-eval).
/// Exit codes: 0 success, 1 hard error, 2 partial replication failures above
/// 5%, 64 usage error, 65 data format error.
int cli_main(int argc, const char* const* argv);

}  // namespace streamglm

#endif
