#ifndef SPDC_CLI_HPP
#define SPDC_CLI_HPP

namespace spdc {

// Entry point of the spdcsim command line tool. Exit codes: 0 success,
// 2 usage or configuration error, 3 data error, 4 numeric failure.
int cli_main(int argc, const char* const* argv);

} // namespace spdc

#endif
