#pragma once

// Umbrella header for the whole library.

#include "mixprec/affine.hpp"
#include "mixprec/analysis.hpp"
#include "mixprec/codegen.hpp"
#include "mixprec/driver.hpp"
#include "mixprec/errors.hpp"
#include "mixprec/expr.hpp"
#include "mixprec/interval.hpp"
#include "mixprec/parser.hpp"
#include "mixprec/precision.hpp"
#include "mixprec/rational.hpp"
#include "mixprec/rewrite.hpp"
#include "mixprec/rules.hpp"
#include "mixprec/simulate.hpp"
#include "mixprec/transform.hpp"
#include "mixprec/tuner.hpp"
