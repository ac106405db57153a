#pragma once

#include "data.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "experiment.hpp"
#include "gp.hpp"
#include "lsh.hpp"
#include "operators.hpp"
#include "optimizer.hpp"
#include "random.hpp"
#include "simplify.hpp"
#include "text.hpp"
#include "tree.hpp"
