#pragma once

#include "doctest.h"
#include "support.hpp"

namespace tt_test {

// Runs `body` on `cases` generators; a failure reports the case index so it
// can be rerun alone with Gen(mix_seed(seed, case)).
template <typename Body>
void for_all(std::size_t cases, std::uint64_t seed, Body&& body) {
  for (std::size_t i = 0; i < cases; ++i) {
    CAPTURE(i);
    Gen g(mix_seed(seed, i));
    body(g);
  }
}

}  // namespace tt_test
