#pragma once

#include "mprt/base.hpp"
#include "mprt/geometry.hpp"
#include "mprt/grid.hpp"
#include "mprt/angular.hpp"
#include "mprt/fields.hpp"
#include "mprt/scattering.hpp"
#include "mprt/model.hpp"
#include "mprt/transport.hpp"
#include "mprt/forward.hpp"
#include "mprt/elliptic.hpp"
#include "mprt/scaled.hpp"
#include "mprt/diffusion.hpp"
#include "mprt/peierls.hpp"
#include "mprt/inversion.hpp"
