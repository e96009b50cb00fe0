#include "tacos/replay.hpp"
