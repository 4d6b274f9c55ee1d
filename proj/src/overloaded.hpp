#pragma once

namespace rfsfuse::detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace rfsfuse::detail
