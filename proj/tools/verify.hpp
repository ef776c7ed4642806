#ifndef DECONV_ERM_TOOLS_VERIFY_HPP_
#define DECONV_ERM_TOOLS_VERIFY_HPP_

#include <iosfwd>

#include "deconv_erm/experiments.hpp"

namespace deconv_erm::cli {

// Quick property checks of every module; prints one line per check and
// returns the number of failures.
int run_verify(const ExperimentConfig& cfg, std::ostream& os);

}  // namespace deconv_erm::cli

#endif  // DECONV_ERM_TOOLS_VERIFY_HPP_
