#pragma once

#include "numeric.hpp"
#include "polyhedral.hpp"
#include "quadratic.hpp"
#include "polynomial.hpp"
#include "univariate.hpp"
#include "problem.hpp"
#include "io.hpp"
#include "lower_level.hpp"
#include "value_function.hpp"
#include "certificate.hpp"
#include "first_order.hpp"
#include "second_order.hpp"
#include "growth_oracle.hpp"
#include "orchestrate.hpp"
