#include "tacos/rng.hpp"
