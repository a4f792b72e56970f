#pragma once

#include <gtest/gtest.h>

#include "fixtures.hpp"

#define EXPECT_WEAKSPOT_ERROR(statement, expected_code)             \
  do {                                                              \
    try {                                                           \
      statement;                                                    \
      ADD_FAILURE() << "expected " << weakspot::to_string(expected_code); \
    } catch (const weakspot::Error& e) {                            \
      EXPECT_EQ(e.code(), expected_code) << e.what();               \
    }                                                               \
  } while (0)
