#pragma once

#include <gtest/gtest.h>

#include "rescert/errors.hpp"

// Expects `stmt` to throw rescert::Error carrying `expected`.
#define EXPECT_ERROR_CODE(stmt, expected)                  \
  do {                                                     \
    bool thrown_ = false;                                  \
    try {                                                  \
      stmt;                                                \
    } catch (const rescert::Error& e_) {                   \
      thrown_ = true;                                      \
      EXPECT_EQ(e_.code(), expected) << e_.what();         \
    }                                                      \
    EXPECT_TRUE(thrown_) << "no rescert::Error from " #stmt; \
  } while (0)
