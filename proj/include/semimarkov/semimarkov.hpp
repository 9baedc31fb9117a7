#ifndef SEMIMARKOV_SEMIMARKOV_HPP
#define SEMIMARKOV_SEMIMARKOV_HPP

#include "semimarkov/direct.hpp"
#include "semimarkov/errors.hpp"
#include "semimarkov/extensions.hpp"
#include "semimarkov/io.hpp"
#include "semimarkov/model.hpp"
#include "semimarkov/reduction.hpp"
#include "semimarkov/scalar.hpp"
#include "semimarkov/simulate.hpp"

#endif  // SEMIMARKOV_SEMIMARKOV_HPP
