#pragma once

#include "happymine/attacks.hpp"
#include "happymine/core.hpp"
#include "happymine/equilibrium.hpp"
#include "happymine/io.hpp"
#include "happymine/verifier.hpp"
