#pragma once

#include "smr/epoch.hpp"
#include "smr/guard_ptr.hpp"
#include "smr/hazard_pointers.hpp"
#include "smr/lfrc.hpp"
#include "smr/stamp_it.hpp"
#include "smr/thread_handle.hpp"
