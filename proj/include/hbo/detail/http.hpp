#pragma once

#include <httplib.h>

// <resolv.h> defines `_res` as a macro, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif
