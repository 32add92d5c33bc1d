#pragma once

#include "kgeval/dataset.hpp"
#include "kgeval/diagnostics.hpp"
#include "kgeval/error.hpp"
#include "kgeval/oracle.hpp"
#include "kgeval/protocols.hpp"
#include "kgeval/report.hpp"
#include "kgeval/rng.hpp"
#include "kgeval/scoring.hpp"
#include "kgeval/synthetic.hpp"
#include "kgeval/training.hpp"
