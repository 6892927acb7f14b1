#pragma once

namespace nnseg::cli {

/// Entry point of the `nnseg` tool. Returns 0 on success, 1 on validation
/// errors (bad flags, configs or inputs) and 2 on I/O errors.
int run(int argc, char** argv);

} // namespace nnseg::cli
