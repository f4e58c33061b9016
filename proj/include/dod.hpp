#pragma once

#include "dod/error.hpp"
#include "dod/linalg.hpp"
#include "dod/sampling.hpp"
#include "dod/pod.hpp"
#include "dod/grassmann.hpp"
#include "dod/nets.hpp"
#include "dod/training.hpp"
#include "dod/model.hpp"
#include "dod/rom.hpp"
#include "dod/baselines.hpp"
#include "dod/problems.hpp"
#include "dod/presets.hpp"
#include "dod/io.hpp"
