#pragma once

#include "rgl/error.hpp"
#include "rgl/linalg.hpp"
#include "rgl/operator.hpp"
#include "rgl/families.hpp"
#include "rgl/phi.hpp"
#include "rgl/selfadjoint.hpp"
#include "rgl/gallery.hpp"
#include "rgl/io.hpp"
