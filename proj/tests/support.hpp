#pragma once

#include <doctest.h>

#include "dumbo/error.hpp"

// Passes when `expr` throws dumbo::Error carrying `expected`.
#define CHECK_ERROR_CODE(expr, expected)                                   \
  do {                                                                     \
    bool thrown_ = false;                                                  \
    try {                                                                  \
      (void)(expr);                                                        \
    } catch (const dumbo::Error& e_) {                                     \
      thrown_ = true;                                                      \
      CHECK_MESSAGE(e_.code() == (expected), dumbo::to_string(e_.code())); \
    }                                                                      \
    CHECK_MESSAGE(thrown_, "no dumbo::Error thrown");                      \
  } while (false)
