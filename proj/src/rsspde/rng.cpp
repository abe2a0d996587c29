#include "rsspde/rng.hpp"

// Header-only; this TU exists so the build has a home for the module.
