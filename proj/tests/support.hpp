#pragma once

// Shared fixtures for the unit tests: Pauli matrices and throw-with-code checks.

#include <complex>
#include <memory>

#include <gtest/gtest.h>

#include "iqm/backend.hpp"
#include "iqm/error.hpp"

namespace iqm::testing {

inline MatrixXc pauli_x() {
  MatrixXc m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline MatrixXc pauli_y() {
  MatrixXc m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

inline MatrixXc pauli_z() {
  MatrixXc m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline std::shared_ptr<const ObservableSpec> observable(const std::string& name, const MatrixXc& m) {
  return std::make_shared<const ObservableSpec>(name, m);
}

}  // namespace iqm::testing

#define EXPECT_IQM_ERROR(statement, expected_code)                        \
  do {                                                                    \
    try {                                                                 \
      statement;                                                          \
      ADD_FAILURE() << "expected " << ::iqm::to_string(expected_code);    \
    } catch (const ::iqm::Error& e) {                                     \
      EXPECT_EQ(e.code(), expected_code) << e.what();                     \
    }                                                                     \
  } while (false)
