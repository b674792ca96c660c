#pragma once

#include "doctest.h"

/// Purely relative comparison; doctest's default adds an absolute slack.
inline doctest::Approx rel(double v, double eps = 1e-12) { return doctest::Approx(v).epsilon(eps).scale(0.0); }
