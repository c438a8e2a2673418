#pragma once

#include "junction_hjb/builtin.hpp"
#include "junction_hjb/errors.hpp"
#include "junction_hjb/expr.hpp"
#include "junction_hjb/hamiltonian.hpp"
#include "junction_hjb/io.hpp"
#include "junction_hjb/model.hpp"
#include "junction_hjb/oracle.hpp"
#include "junction_hjb/parallel.hpp"
#include "junction_hjb/solver.hpp"
