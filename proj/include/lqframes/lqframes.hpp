#pragma once

#include "lqframes/error.hpp"
#include "lqframes/random.hpp"
#include "lqframes/frames.hpp"
#include "lqframes/qrip.hpp"
#include "lqframes/solvers.hpp"
#include "lqframes/separation.hpp"
#include "lqframes/io.hpp"
#include "lqframes/experiments.hpp"
