#pragma once

#include "nsbandit/action_log.hpp"
#include "nsbandit/baque.hpp"
#include "nsbandit/environment.hpp"
#include "nsbandit/experiment.hpp"
#include "nsbandit/hyque.hpp"
#include "nsbandit/io.hpp"
#include "nsbandit/metrics.hpp"
#include "nsbandit/plot.hpp"
#include "nsbandit/policy.hpp"
#include "nsbandit/problem.hpp"
#include "nsbandit/rexp3b.hpp"
