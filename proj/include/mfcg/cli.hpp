#pragma once

namespace mfcg {

// exit codes: 0 ok, 1 usage, 2 numerical divergence, 3 I/O
int cli_main(int argc, const char* const* argv);

}  // namespace mfcg
