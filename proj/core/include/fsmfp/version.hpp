#pragma once

namespace fsmfp {

inline constexpr const char* kProducerVersion = "fsmfp/0.1.0";

}  // namespace fsmfp
