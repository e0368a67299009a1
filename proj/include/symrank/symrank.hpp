#ifndef SYMRANK_SYMRANK_HPP
#define SYMRANK_SYMRANK_HPP

#include "symrank/core.hpp"
#include "symrank/expression.hpp"
#include "symrank/stats.hpp"
#include "symrank/partition.hpp"
#include "symrank/tree.hpp"
#include "symrank/monotonic.hpp"
#include "symrank/symgen.hpp"
#include "symrank/evalsel.hpp"
#include "symrank/io.hpp"
#include "symrank/experiment.hpp"

#endif  // SYMRANK_SYMRANK_HPP
