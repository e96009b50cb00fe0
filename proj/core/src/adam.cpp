#include "tacos/adam.hpp"
